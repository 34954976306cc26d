import numpy as np
import pytest

from vofde.model import Problem, constant


def constant_problem(alpha=1.5, d=1.0, f=-1.0):
    return Problem(alpha=constant(alpha), d=constant(d), f=constant(f), alpha_min=alpha, alpha_max=alpha)


def linear_alpha_problem(a0=1.2, a1=1.6, d=1.0, f=None):
    f = f or (lambda x: np.sin(np.pi * x) + x)
    return Problem(alpha=lambda x: a0 + (a1 - a0) * np.asarray(x), d=constant(d), f=f, alpha_min=a0, alpha_max=a1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
