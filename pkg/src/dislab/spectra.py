"""Discrete joint spectral measures of a source/target covariance pair.

A measure is a finite list of atoms ``(lambda_s, lambda_t, weight)``: the
eigenvalues of the source covariance paired with the target covariance
quadratic form in the same eigenbasis.  Every downstream formula is an
expectation under this measure, so a finite weighted sum evaluates it
exactly.  Continuous spectral laws must be discretized by the caller.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_symmetric_matrix

WEIGHT_SUM_TOL = 1e-12

# Sample covariances are PSD up to roundoff; anything more negative than
# this is treated as a real error, not noise.
EIGENVALUE_NOISE_FLOOR = -1e-10


@dataclass(frozen=True)
class SpectralAtom:
    """One point mass of the joint spectral measure."""

    lambda_s: float
    lambda_t: float
    weight: float

    def __post_init__(self):
        if not np.isfinite([self.lambda_s, self.lambda_t, self.weight]).all():
            raise ValueError("atom fields must be finite")
        if self.lambda_s < 0 or self.lambda_t < 0:
            raise ValueError("eigenvalues must be nonnegative")
        if self.weight <= 0:
            raise ValueError("atom weight must be positive")


class SpectralMeasure:
    """Finite discrete measure on the nonnegative quadrant.

    Weights must sum to 1 within ``WEIGHT_SUM_TOL``.  Duplicate atoms are
    legal; sums are unchanged.
    """

    def __init__(self, atoms):
        atoms = tuple(atoms)
        if not atoms:
            raise ValueError("measure needs at least one atom")
        total = float(np.sum([a.weight for a in atoms]))
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"atom weights sum to {total!r}, expected 1")
        self.atoms = atoms
        self._lambda_s = np.array([a.lambda_s for a in atoms], dtype=float)
        self._lambda_t = np.array([a.lambda_t for a in atoms], dtype=float)
        self._weights = np.array([a.weight for a in atoms], dtype=float)

    @classmethod
    def from_pairs(cls, pairs):
        """Build from ``(lambda_s, lambda_t, weight)`` triples."""
        return cls(SpectralAtom(ls, lt, w) for ls, lt, w in pairs)

    @classmethod
    def point_mass(cls, lambda_s, lambda_t):
        return cls([SpectralAtom(lambda_s, lambda_t, 1.0)])

    def arrays(self):
        return self._lambda_s, self._lambda_t, self._weights

    def eigenvalues(self, domain):
        if domain == "s":
            return self._lambda_s
        if domain == "t":
            return self._lambda_t
        raise ValueError(f"domain must be 's' or 't', got {domain!r}")

    def __len__(self):
        return len(self.atoms)

    def __repr__(self):
        inner = " + ".join(
            f"{a.weight:g}*d({a.lambda_s:g},{a.lambda_t:g})" for a in self.atoms
        )
        return f"SpectralMeasure({inner})"

    def to_json_obj(self):
        return [
            {"lambda_s": a.lambda_s, "lambda_t": a.lambda_t, "weight": a.weight}
            for a in self.atoms
        ]

    @classmethod
    def from_json_obj(cls, obj):
        return cls(
            SpectralAtom(float(d["lambda_s"]), float(d["lambda_t"]), float(d["weight"]))
            for d in obj
        )


def moments(measure):
    """Weighted means ``(m_s, m_t)`` of the two eigenvalue coordinates."""
    lam_s, lam_t, w = measure.arrays()
    return float(w @ lam_s), float(w @ lam_t)


def integral_functional(measure, a, b, domain, kappa, phi):
    """Spectral summary ``phi * E[(lambda_s)^(a-1) * lambda_j / (phi + kappa*lambda_s)^b]``.

    ``domain`` selects which eigenvalue coordinate ``lambda_j`` appears in the
    numerator.  Exact finite sum over the atoms.
    """
    if a < 1 or b < 1:
        raise ValueError(f"orders must satisfy a >= 1 and b >= 1, got ({a}, {b})")
    if phi <= 0:
        raise ValueError("phi must be positive")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    lam_s, _, w = measure.arrays()
    lam_j = measure.eigenvalues(domain)
    terms = lam_s ** (a - 1) * lam_j / (phi + kappa * lam_s) ** b
    return float(phi * (w @ terms))


def empirical_joint_spectrum(sigma_s_hat, sigma_t_hat):
    """Uniform-weight joint spectrum of two covariance estimates.

    Eigendecomposes the source matrix; each eigenpair ``(lam_i, v_i)``
    contributes the atom ``(lam_i, v_i' @ sigma_t_hat @ v_i, 1/d)``.
    Eigenvalues in ``[EIGENVALUE_NOISE_FLOOR, 0)`` are clamped to zero.
    """
    sigma_s_hat = check_symmetric_matrix(sigma_s_hat, name="sigma_s_hat")
    sigma_t_hat = check_symmetric_matrix(sigma_t_hat, name="sigma_t_hat")
    if sigma_s_hat.shape != sigma_t_hat.shape:
        raise ValueError(
            f"covariance shapes differ: {sigma_s_hat.shape} vs {sigma_t_hat.shape}"
        )
    eigvals, eigvecs = np.linalg.eigh(sigma_s_hat)
    if eigvals.min() < EIGENVALUE_NOISE_FLOOR:
        raise ValueError(
            f"source covariance has eigenvalue {eigvals.min()!r} below the noise floor"
        )
    eigvals = np.clip(eigvals, 0.0, None)
    lam_t = np.einsum("ij,jk,ki->i", eigvecs.T, sigma_t_hat, eigvecs)
    if lam_t.min() < EIGENVALUE_NOISE_FLOOR:
        raise ValueError(
            f"target quadratic form has value {lam_t.min()!r} below the noise floor"
        )
    lam_t = np.clip(lam_t, 0.0, None)
    d = len(eigvals)
    return SpectralMeasure.from_pairs(
        (float(ls), float(lt), 1.0 / d) for ls, lt in zip(eigvals, lam_t)
    )
