"""Scalar activations and their Gaussian nonlinearity constants.

For an activation ``sigma`` and a scale ``m > 0`` the constants are built
from moments of ``sigma(sqrt(m) Z)`` with ``Z`` standard normal:

    rho   = E[Z sigma(sqrt(m) Z)]^2 / m
    omega = V[sigma(sqrt(m) Z)] / rho - m

``rho`` is the squared linear component of the activation, ``omega`` the
excess variance the nonlinearity adds on top of it.  ReLU and identity get
closed forms; everything else goes through quadrature.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive

DEFAULT_NODES = 200

# Integration window in standard deviations.  The normal density at 13 is
# ~1e-37, far below any tolerance used here.
QUADRATURE_RADIUS = 13.0

DEGENERATE_RHO = 1e-12


class DegenerateActivationError(ValueError):
    """The activation has no linear component at the requested scale."""


class Activation:
    """Named scalar activation, vectorized over numpy arrays."""

    def __init__(self, kind, fn):
        self.kind = kind
        self._fn = fn

    def __call__(self, x):
        return self._fn(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"Activation({self.kind!r})"

    @classmethod
    def custom(cls, fn, name="custom"):
        """Wrap a deterministic scalar function. Must accept numpy arrays."""
        return cls(name, fn)


_BUILTINS = {
    "relu": lambda x: np.maximum(x, 0.0),
    "identity": lambda x: x,
    "tanh": np.tanh,
}


def get_activation(name):
    if isinstance(name, Activation):
        return name
    try:
        return Activation(name, _BUILTINS[name])
    except KeyError:
        raise ValueError(
            f"unknown activation {name!r}; choose from {sorted(_BUILTINS)}"
        ) from None


@dataclass(frozen=True)
class ActivationProfile:
    """Nonlinearity constants and spectral means for both domains."""

    rho_s: float
    rho_t: float
    omega_s: float
    omega_t: float
    m_s: float
    m_t: float

    def rho(self, domain):
        return self.rho_s if domain == "s" else self.rho_t

    def omega(self, domain):
        return self.omega_s if domain == "s" else self.omega_t

    def m(self, domain):
        return self.m_s if domain == "s" else self.m_t


def _quadrature_rule(nodes):
    # Gauss-Legendre panels on (-R, 0) and (0, R) against the normal
    # density.  Splitting at zero keeps piecewise-smooth activations
    # (ReLU and friends) spectrally convergent; plain Gauss-Hermite
    # stalls near 1e-3 on the kink.  Nodes are mirrored so odd
    # integrands cancel exactly.
    x, w = np.polynomial.legendre.leggauss(int(nodes))
    half = 0.5 * QUADRATURE_RADIUS * (x + 1.0)
    half_w = 0.5 * QUADRATURE_RADIUS * w
    z = np.concatenate([-half[::-1], half])
    wz = np.concatenate([half_w[::-1], half_w])
    density = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return z, wz * density


def gaussian_moments(activation, m, nodes=DEFAULT_NODES):
    """Quadrature values of ``(E[sigma(sqrt(m)Z)], E[Z sigma(sqrt(m)Z)], V[sigma(sqrt(m)Z)])``."""
    activation = get_activation(activation)
    m = check_positive(m, "m")
    if nodes < 2:
        raise ValueError("nodes must be at least 2")
    z, w = _quadrature_rule(nodes)
    values = activation(math.sqrt(m) * z)
    if not np.isfinite(values).all():
        raise ValueError("activation produced non-finite values on quadrature nodes")
    mean = float(w @ values)
    corr = float(w @ (z * values))
    var = float(w @ (values * values)) - mean * mean
    return mean, corr, var


def _constants_from_moments(corr, var, m):
    rho = corr * corr / m
    if rho < DEGENERATE_RHO:
        raise DegenerateActivationError(
            f"activation has vanishing linear response at scale m={m!r}"
        )
    return rho, var / rho - m


def activation_constants(activation, m_s, m_t, nodes=DEFAULT_NODES):
    """Profile of ``(rho, omega)`` per domain at spectral means ``(m_s, m_t)``.

    ReLU: rho = 1/4 and omega = m (1 - 2/pi).  Identity: rho = 1, omega = 0.
    These closed forms are authoritative; quadrature covers the rest.
    """
    activation = get_activation(activation)
    m_s = check_positive(m_s, "m_s")
    m_t = check_positive(m_t, "m_t")
    if activation.kind == "relu":
        consts = [(0.25, m * (1.0 - 2.0 / math.pi)) for m in (m_s, m_t)]
    elif activation.kind == "identity":
        consts = [(1.0, 0.0), (1.0, 0.0)]
    else:
        consts = []
        for m in (m_s, m_t):
            _, corr, var = gaussian_moments(activation, m, nodes=nodes)
            consts.append(_constants_from_moments(corr, var, m))
    (rho_s, omega_s), (rho_t, omega_t) = consts
    return ActivationProfile(rho_s, rho_t, omega_s, omega_t, m_s, m_t)


def profile_for_measure(activation, measure, nodes=DEFAULT_NODES):
    """Constants evaluated at the measure's own spectral means."""
    from .spectra import moments

    m_s, m_t = moments(measure)
    return activation_constants(activation, m_s, m_t, nodes=nodes)
