"""Scalar self-consistent equation for the resolvent parameter kappa.

With ridge ``gamma > 0`` the equation is

    kappa = (psi + phi - S(kappa)) / (2 psi (omega_s + I11_s(kappa))),
    S(kappa) = sqrt((psi - phi)^2 + 4 kappa psi phi gamma / rho_s),

and in the ridgeless limit it collapses to

    kappa = min(1, phi/psi) / (omega_s + I11_s(kappa)).

Both right-hand sides have a unique nonnegative fixed point: multiplying
through, ``kappa * (omega_s + I11_s(kappa))`` is strictly increasing, so a
damped iteration plus a bisection backstop is enough.  Normalized resolvent
traces ``tau``/``tau_bar`` and the gamma-derivative of kappa follow in
closed form.
"""

import math
from dataclasses import dataclass

from ._validation import check_nonnegative, check_positive
from .spectra import integral_functional

RIDGE_RESIDUAL_TOL = 1e-10
RIDGELESS_RESIDUAL_TOL = 1e-12

# Internal solve target; the public tolerances above are guaranteed with
# slack so that downstream finite-difference checks stay clean.
_SOLVE_TOL = 1e-13

MAX_FIXED_POINT_ITERS = 10_000
DAMPING = 0.5


class ConvergenceError(RuntimeError):
    """Fixed-point iteration and bisection both failed to converge."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual!r})")
        self.residual = residual


@dataclass(frozen=True)
class RegimeParams:
    """Limit ratios ``phi = d/n``, ``psi = d/N``, ridge and label noise."""

    phi: float
    psi: float
    gamma: float
    sigma_eps2: float

    def __post_init__(self):
        check_positive(self.phi, "phi")
        check_positive(self.psi, "psi")
        check_nonnegative(self.gamma, "gamma")
        check_nonnegative(self.sigma_eps2, "sigma_eps2")


@dataclass(frozen=True)
class SelfConsistentSolution:
    """Converged kappa with its derived traces.

    Ridge solutions carry ``tau``/``tau_bar`` and ``dkappa_dgamma``;
    ridgeless solutions carry only the finite products ``gamma_tau`` and
    ``gamma_tau_bar`` (``tau`` itself diverges as ``gamma -> 0``).
    """

    kappa: float
    residual: float
    iterations: int
    tau: float | None = None
    tau_bar: float | None = None
    gamma_tau: float | None = None
    gamma_tau_bar: float | None = None
    dkappa_dgamma: float | None = None


def _i11s(measure, phi):
    return lambda kappa: integral_functional(measure, 1, 1, "s", kappa, phi)


def _initial_kappa(profile, phi, psi):
    if profile.omega_s > 0:
        return min(1.0, phi / psi) / profile.omega_s
    return 1.0


def _bisection_ceiling(profile):
    if profile.omega_s > 0:
        return max(1.0 / profile.omega_s, 1e3)
    return 1e3


def _solve_unique_root(g, g_prime, kappa0, hi0, tol):
    """Find the unique nonnegative fixed point of ``g``.

    Damped iteration first; bisection on ``kappa - g(kappa)`` over
    ``[0, hi0]`` (expanding as needed) if it stalls; Newton steps at the
    end to polish the residual toward machine noise.
    """
    kappa = max(float(kappa0), 0.0)
    residual = kappa - g(kappa)
    iterations = 0
    diverged = False
    for iterations in range(1, MAX_FIXED_POINT_ITERS + 1):
        if abs(residual) <= tol:
            break
        kappa = max((1.0 - DAMPING) * kappa + DAMPING * g(kappa), 0.0)
        if not math.isfinite(kappa) or kappa > 1e12:
            diverged = True
            break
        residual = kappa - g(kappa)
    else:
        diverged = True
    if diverged:
        kappa, residual = _bisect(g, hi=hi0, tol=tol)

    best_kappa, best_residual = kappa, abs(residual)
    for _ in range(8):
        slope = 1.0 - g_prime(kappa)
        if slope <= 0 or not math.isfinite(slope):
            break
        kappa = max(kappa - (kappa - g(kappa)) / slope, 0.0)
        residual = abs(kappa - g(kappa))
        if residual < best_residual:
            best_kappa, best_residual = kappa, residual
        if best_residual == 0.0:
            break
    if best_residual > tol:
        raise ConvergenceError("kappa iteration did not converge", best_residual)
    return best_kappa, best_residual, iterations


def _bisect(g, hi, tol, max_expand=80, max_steps=200):
    f = lambda kappa: kappa - g(kappa)
    lo = 0.0
    for _ in range(max_expand):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket the fixed point", f(hi))
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < max(tol * 1e-2, 1e-300):
            break
    mid = 0.5 * (lo + hi)
    return mid, f(mid)


def solve_kappa(measure, profile, params, tol=_SOLVE_TOL):
    """Solve the ridge equation (``gamma > 0``) and derive tau, tau_bar.

    The returned residual is the absolute fixed-point defect; it is kept
    well below ``RIDGE_RESIDUAL_TOL``.
    """
    if params.gamma <= 0:
        raise ValueError("solve_kappa requires gamma > 0; use solve_kappa_ridgeless")
    phi, psi, gamma = params.phi, params.psi, params.gamma
    rho_s, omega_s = profile.rho_s, profile.omega_s
    i11s = _i11s(measure, phi)

    def s_of(kappa):
        return math.sqrt((psi - phi) ** 2 + 4.0 * kappa * psi * phi * gamma / rho_s)

    def g(kappa):
        return (psi + phi - s_of(kappa)) / (2.0 * psi * (omega_s + i11s(kappa)))

    def g_prime(kappa):
        s = s_of(kappa)
        if s <= 0:
            return math.inf
        ds = 2.0 * psi * phi * gamma / (rho_s * s)
        denom = omega_s + i11s(kappa)
        ddenom = -integral_functional(measure, 2, 2, "s", kappa, phi)
        return (-ds * denom - (psi + phi - s) * ddenom) / (2.0 * psi * denom * denom)

    kappa, residual, iterations = _solve_unique_root(
        g, g_prime, _initial_kappa(profile, phi, psi), _bisection_ceiling(profile), tol
    )
    tau, tau_bar = tau_pair(kappa, params, rho_s)
    return SelfConsistentSolution(
        kappa=kappa,
        residual=residual,
        iterations=iterations,
        tau=tau,
        tau_bar=tau_bar,
        gamma_tau=gamma * tau,
        gamma_tau_bar=gamma * tau_bar,
        dkappa_dgamma=_dkappa_dgamma_value(kappa, tau, tau_bar, measure, profile, params),
    )


def solve_kappa_ridgeless(measure, profile, phi, psi, tol=_SOLVE_TOL):
    """Solve the ridgeless equation; requires ``phi != psi``.

    For ``phi > psi`` the equation (hence kappa) does not involve psi.
    The finite limits of ``gamma*tau`` and ``gamma*tau_bar`` are attached.
    """
    phi = check_positive(phi, "phi")
    psi = check_positive(psi, "psi")
    if phi == psi:
        raise ValueError("ridgeless formulas require phi != psi")
    omega_s = profile.omega_s
    i11s = _i11s(measure, phi)
    c = min(1.0, phi / psi)

    def g(kappa):
        return c / (omega_s + i11s(kappa))

    def g_prime(kappa):
        denom = omega_s + i11s(kappa)
        return c * integral_functional(measure, 2, 2, "s", kappa, phi) / (denom * denom)

    kappa, residual, iterations = _solve_unique_root(
        g, g_prime, _initial_kappa(profile, phi, psi), _bisection_ceiling(profile), tol
    )
    gamma_tau = (abs(psi - phi) + psi - phi) / (2.0 * psi)
    gamma_tau_bar = (abs(psi - phi) + phi - psi) / (2.0 * phi)
    return SelfConsistentSolution(
        kappa=kappa,
        residual=residual,
        iterations=iterations,
        gamma_tau=gamma_tau,
        gamma_tau_bar=gamma_tau_bar,
    )


def tau_pair(kappa, params, rho_s):
    """Normalized resolvent traces ``(tau, tau_bar)`` at a solved kappa."""
    phi, psi, gamma = params.phi, params.psi, params.gamma
    if gamma <= 0:
        raise ValueError("tau_pair requires gamma > 0; use the ridgeless limits")
    s = math.sqrt((psi - phi) ** 2 + 4.0 * kappa * psi * phi * gamma / rho_s)
    tau = (s + psi - phi) / (2.0 * psi * gamma)
    tau_bar = 1.0 / gamma + (psi / phi) * (tau - 1.0 / gamma)
    return tau, tau_bar


def _dkappa_dgamma_value(kappa, tau, tau_bar, measure, profile, params):
    phi, psi, gamma = params.phi, params.psi, params.gamma
    i12s = integral_functional(measure, 1, 2, "s", kappa, phi)
    trace_sum = psi * gamma * tau + phi * gamma * tau_bar
    denom = phi * gamma + profile.rho_s * trace_sum * (profile.omega_s + phi * i12s)
    return -phi * kappa / denom


def dkappa_dgamma(solution, measure, profile, params):
    """Derivative of kappa with respect to gamma, by implicit differentiation.

    Always nonpositive: raising the ridge shrinks kappa.
    """
    if params.gamma <= 0:
        raise ValueError("dkappa_dgamma requires gamma > 0")
    tau, tau_bar = solution.tau, solution.tau_bar
    if tau is None or tau_bar is None:
        tau, tau_bar = tau_pair(solution.kappa, params, profile.rho_s)
    return _dkappa_dgamma_value(solution.kappa, tau, tau_bar, measure, profile, params)
