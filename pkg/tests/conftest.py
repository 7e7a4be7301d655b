import numpy as np
import pytest

from nepbe.core import (
    EXP_NEG,
    EXP_NEG2,
    LAMBDA,
    LAMBDA2,
    ONE,
    EigenpairSet,
    SplitNEP,
)

FUNC_POOL = [ONE, LAMBDA, LAMBDA2, EXP_NEG, EXP_NEG2]


def random_nep(rng, n, k, complex_coeffs=False, symmetric=False):
    coeffs = []
    for _ in range(k):
        A = rng.standard_normal((n, n))
        if complex_coeffs:
            A = A + 1j * rng.standard_normal((n, n))
        if symmetric:
            A = (A + A.T) / 2
        coeffs.append(A)
    return SplitNEP(coeffs, FUNC_POOL[:k])


def random_pairs(rng, n, p, real=False):
    lams = rng.standard_normal(p) * 0.5
    V = rng.standard_normal((n, p))
    if not real:
        lams = lams + 0.5j * rng.standard_normal(p)
        V = V + 1j * rng.standard_normal((n, p))
    return EigenpairSet(lams, V)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
