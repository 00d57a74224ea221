import numpy as np
import pytest

from dislab import SpectralMeasure, activation_constants, moments


@pytest.fixture
def two_atom_measure():
    # heavier target spectrum on the first atom
    return SpectralMeasure.from_pairs([(1.5, 5.0, 0.5), (1.0, 1.0, 0.5)])


@pytest.fixture
def crossed_measure():
    # the "no line" / SW-curvature example
    return SpectralMeasure.from_pairs([(0.1, 1.0, 0.4), (1.0, 0.1, 0.6)])


@pytest.fixture
def swap_measure():
    # symmetric swap of scales between domains
    return SpectralMeasure.from_pairs([(4.0, 1.0, 0.5), (1.0, 4.0, 0.5)])


def relu_profile(measure):
    m_s, m_t = moments(measure)
    return activation_constants("relu", m_s, m_t)


def random_measure(rng, max_atoms=4):
    k = rng.integers(1, max_atoms + 1)
    lam_s = rng.uniform(0.05, 5.0, k)
    lam_t = rng.uniform(0.05, 5.0, k)
    w = rng.uniform(0.2, 1.0, k)
    w = w / w.sum()
    # exact unit mass regardless of float rounding
    pairs = [(lam_s[i], lam_t[i], w[i]) for i in range(k - 1)]
    pairs.append((lam_s[-1], lam_t[-1], 1.0 - sum(p[2] for p in pairs)))
    return SpectralMeasure.from_pairs(pairs)


def brute_force_functional(measure, a, b, domain, kappa, phi):
    """One-line direct summation oracle, independent of the library path."""
    total = 0.0
    for atom in measure.atoms:
        lam_j = atom.lambda_s if domain == "s" else atom.lambda_t
        total += atom.weight * atom.lambda_s ** (a - 1) * lam_j / (phi + kappa * atom.lambda_s) ** b
    return phi * total


def bisect_kappa(g, lo=0.0, hi=1e3, steps=220):
    """Plain bisection oracle for the unique fixed point of a scalar map."""
    while hi - g(hi) < 0:
        hi *= 2.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if mid - g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def assert_close(actual, expected, tol, label=""):
    assert abs(actual - expected) <= tol, (
        f"{label}: |{actual!r} - {expected!r}| = {abs(actual - expected):.3e} > {tol:g}"
    )
