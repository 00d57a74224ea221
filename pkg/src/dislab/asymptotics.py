"""Closed-form limits: disagreement, bias/variance/risk, and line geometry.

All quantities are evaluated at the solved self-consistent ``kappa`` via the
spectral summaries ``I[a,b,j] = phi E[(lambda_s)^(a-1) lambda_j /
(phi + kappa lambda_s)^b]``.  Three disagreement flavors are covered:

* ``I``  -- two models sharing nothing but the signal vector,
* ``SS`` -- two models trained on the same sample, independent weights,
* ``SW`` -- two models sharing the weight matrix, independent samples.

In the ridgeless overparameterized regime (``phi > psi``) the target-domain
curves for I and SS are exact affine functions of the source-domain curves,
with a shared slope and intercepts ``b_SS = 0`` and ``b_I``; the risk curve
shares the slope with intercept ``b_risk``.  SW admits no such line.
"""

import math
from dataclasses import dataclass

from .selfconsistent import (
    RegimeParams,
    dkappa_dgamma,
    solve_kappa,
    solve_kappa_ridgeless,
)
from .spectra import integral_functional, moments

DISAGREEMENT_KINDS = ("I", "SS", "SW")
DENOMINATOR_GUARD = 1e-12


class RegimeDegeneracyError(ValueError):
    """A correction-term denominator lost positivity; the formulas do not apply."""


class _Snapshot:
    """Spectral functionals of one measure frozen at a solved kappa."""

    def __init__(self, measure, phi, kappa):
        self.phi = phi
        self.kappa = kappa
        self._measure = measure
        self._cache = {}

    def i(self, a, b, domain):
        key = (a, b, domain)
        if key not in self._cache:
            self._cache[key] = integral_functional(
                self._measure, a, b, domain, self.kappa, self.phi
            )
        return self._cache[key]


def _ss_denominator(snap):
    return 1.0 - snap.kappa**2 * snap.i(2, 2, "s")


def _sw_denominator(snap, psi):
    return snap.phi - psi * snap.kappa**2 * snap.i(2, 2, "s")


def _guard(value, label):
    if value <= DENOMINATOR_GUARD:
        raise RegimeDegeneracyError(
            f"{label} denominator {value!r} is not positive; "
            "disagreement is undefined in this regime"
        )
    return value


def disagreement_ridge(kind, domain, measure, profile, params, solution=None):
    """One disagreement value at ridge ``gamma > 0``.

    ``kind`` is one of ``I``, ``SS``, ``SW``; ``domain`` is ``s`` or ``t``.
    """
    if kind not in DISAGREEMENT_KINDS:
        raise ValueError(f"kind must be one of {DISAGREEMENT_KINDS}, got {kind!r}")
    if solution is None:
        solution = solve_kappa(measure, profile, params)
    phi, psi, gamma = params.phi, params.psi, params.gamma
    sigma_eps2 = params.sigma_eps2
    rho_s = profile.rho_s
    rho_j, omega_j = profile.rho(domain), profile.omega(domain)
    snap = _Snapshot(measure, phi, solution.kappa)
    kappa, tau, tau_bar = solution.kappa, solution.tau, solution.tau_bar

    omega_mix_s = profile.omega_s + phi * snap.i(1, 2, "s")
    trace_sum = gamma * (tau * psi + tau_bar * phi)
    lead = 2.0 * rho_j * psi * kappa / (phi * gamma + rho_s * trace_sum * omega_mix_s)
    bracket = (
        gamma * tau * (omega_j + phi * snap.i(1, 2, domain)) * snap.i(2, 2, "s")
        + (sigma_eps2 + snap.i(1, 1, "s")) * omega_mix_s * (omega_j + snap.i(1, 1, domain))
        + (phi / psi)
        * gamma
        * tau_bar
        * (sigma_eps2 + phi * snap.i(1, 2, "s"))
        * snap.i(2, 2, domain)
    )
    dis_independent = lead * bracket
    if kind == "I":
        return dis_independent
    if kind == "SS":
        denom = _guard(_ss_denominator(snap), "shared-sample")
        correction = (
            2.0
            * rho_j
            * kappa**2
            * (sigma_eps2 + phi * snap.i(1, 2, "s"))
            * snap.i(2, 2, domain)
            / (rho_s * denom)
        )
    else:
        denom = _guard(_sw_denominator(snap, psi), "shared-weight")
        correction = (
            2.0
            * rho_j
            * psi
            * kappa**2
            * (omega_j + phi * snap.i(1, 2, domain))
            * snap.i(2, 2, "s")
            / (rho_s * denom)
        )
    return dis_independent - correction


def disagreement_ridgeless(kind, domain, measure, profile, phi, psi, sigma_eps2, solution=None):
    """One disagreement value in the ridgeless limit; requires ``phi != psi``."""
    if kind not in DISAGREEMENT_KINDS:
        raise ValueError(f"kind must be one of {DISAGREEMENT_KINDS}, got {kind!r}")
    if phi == psi:
        raise ValueError("ridgeless disagreement requires phi != psi")
    if solution is None:
        solution = solve_kappa_ridgeless(measure, profile, phi, psi)
    rho_s = profile.rho_s
    rho_j, omega_j = profile.rho(domain), profile.omega(domain)
    snap = _Snapshot(measure, phi, solution.kappa)
    kappa = solution.kappa

    shared = (
        2.0
        * rho_j
        * psi
        * kappa
        / (rho_s * abs(phi - psi))
        * (sigma_eps2 + snap.i(1, 1, "s"))
        * (omega_j + snap.i(1, 1, domain))
    )
    omega_mix_s = profile.omega_s + phi * snap.i(1, 2, "s")
    over = phi > psi
    if kind == "I":
        if over:
            extra = (
                2.0 * rho_j * kappa * (sigma_eps2 + phi * snap.i(1, 2, "s"))
                * snap.i(2, 2, domain) / (rho_s * omega_mix_s)
            )
        else:
            extra = (
                2.0 * rho_j * kappa * (omega_j + phi * snap.i(1, 2, domain))
                * snap.i(2, 2, "s") / (rho_s * omega_mix_s)
            )
    elif kind == "SS":
        if over:
            extra = 0.0
        else:
            denom = _guard(_ss_denominator(snap), "shared-sample")
            extra = (2.0 * rho_j * kappa / rho_s) * (
                (omega_j + phi * snap.i(1, 2, domain)) * snap.i(2, 2, "s") / omega_mix_s
                - kappa * (sigma_eps2 + phi * snap.i(1, 2, "s")) * snap.i(2, 2, domain) / denom
            )
    else:
        if over:
            denom = _guard(_sw_denominator(snap, psi), "shared-weight")
            extra = (2.0 * rho_j * kappa / rho_s) * (
                (sigma_eps2 + phi * snap.i(1, 2, "s")) * snap.i(2, 2, domain) / omega_mix_s
                - psi * kappa * (omega_j + phi * snap.i(1, 2, domain)) * snap.i(2, 2, "s") / denom
            )
        else:
            extra = 0.0
    return shared + extra


def bias_variance(domain, measure, profile, params, solution=None):
    """Asymptotic ``(bias, variance, risk)`` for one test domain.

    ``gamma == 0`` routes to the ridgeless variance limit, with the bias
    formula (which has no explicit gamma) evaluated at the ridgeless kappa.
    """
    phi, psi, gamma = params.phi, params.psi, params.gamma
    sigma_eps2 = params.sigma_eps2
    rho_s = profile.rho_s
    rho_j, omega_j = profile.rho(domain), profile.omega(domain)
    ridgeless = gamma == 0
    if solution is None:
        if ridgeless:
            solution = solve_kappa_ridgeless(measure, profile, phi, psi)
        else:
            solution = solve_kappa(measure, profile, params)
    kappa = solution.kappa
    snap = _Snapshot(measure, phi, kappa)

    ratio = math.sqrt(rho_j / rho_s)
    m_j = moments(measure)[0 if domain == "s" else 1]
    bias = (
        (1.0 - ratio) ** 2 * m_j
        + 2.0 * (1.0 - ratio) * ratio * snap.i(1, 1, domain)
        + (rho_j * phi / rho_s) * snap.i(1, 2, domain)
    )

    if ridgeless:
        shared = (
            rho_j * psi * kappa / (rho_s * abs(phi - psi))
            * (sigma_eps2 + snap.i(1, 1, "s"))
            * (omega_j + snap.i(1, 1, domain))
        )
        if phi >= psi:
            denom = _guard(_ss_denominator(snap), "shared-sample")
            extra = (
                rho_j * kappa / rho_s
                * (1.0 - kappa * (profile.omega_s - sigma_eps2) / denom)
                * snap.i(2, 2, domain)
            )
        else:
            denom = _guard(_sw_denominator(snap, psi), "shared-weight")
            extra = (
                rho_j * kappa**2 * psi * snap.i(2, 2, "s")
                * (omega_j + phi * snap.i(1, 2, domain))
                / (rho_s * denom)
            )
        variance = shared + extra
    else:
        dkappa = solution.dkappa_dgamma
        if dkappa is None:
            dkappa = dkappa_dgamma(solution, measure, profile, params)
        tau, tau_bar = solution.tau, solution.tau_bar
        omega_mix_s = profile.omega_s + phi * snap.i(1, 2, "s")
        bracket = (
            snap.i(1, 1, "s") * omega_mix_s * (omega_j + snap.i(1, 1, domain))
            + (phi**2 / psi) * gamma * tau_bar * snap.i(1, 2, "s") * snap.i(2, 2, domain)
            + gamma * tau * snap.i(2, 2, "s") * (omega_j + phi * snap.i(1, 2, domain))
            + sigma_eps2
            * (
                omega_mix_s * (omega_j + snap.i(1, 1, domain))
                + (phi / psi) * gamma * tau_bar * snap.i(2, 2, domain)
            )
        )
        variance = -(rho_j * psi / phi) * dkappa * bracket
    return bias, variance, bias + variance


@dataclass(frozen=True)
class DomainReport:
    dis_I: float
    dis_SS: float
    dis_SW: float
    bias: float
    variance: float
    risk: float


@dataclass(frozen=True)
class TheoryReport:
    """Every closed-form quantity for one regime, both domains."""

    params: RegimeParams
    kappa: float
    source: DomainReport
    target: DomainReport

    def domain(self, domain):
        return self.source if domain == "s" else self.target


def theory_report(measure, profile, params):
    """Evaluate all disagreements, bias, variance, and risk at one regime."""
    ridgeless = params.gamma == 0
    if ridgeless:
        solution = solve_kappa_ridgeless(measure, profile, params.phi, params.psi)
    else:
        solution = solve_kappa(measure, profile, params)
    reports = {}
    for domain in ("s", "t"):
        if ridgeless:
            dis = {
                kind: disagreement_ridgeless(
                    kind, domain, measure, profile, params.phi, params.psi,
                    params.sigma_eps2, solution=solution,
                )
                for kind in DISAGREEMENT_KINDS
            }
        else:
            dis = {
                kind: disagreement_ridge(
                    kind, domain, measure, profile, params, solution=solution
                )
                for kind in DISAGREEMENT_KINDS
            }
        bias, variance, risk = bias_variance(
            domain, measure, profile, params, solution=solution
        )
        reports[domain] = DomainReport(
            dis_I=dis["I"], dis_SS=dis["SS"], dis_SW=dis["SW"],
            bias=bias, variance=variance, risk=risk,
        )
    return TheoryReport(
        params=params, kappa=solution.kappa,
        source=reports["s"], target=reports["t"],
    )


@dataclass(frozen=True)
class LineCoefficients:
    """Affine relation between target and source curves over model widths.

    ``slope_a`` is shared by I/SS disagreement and risk; the intercepts
    differ per quantity (``intercept_b_SS`` is identically zero).
    """

    slope_a: float
    intercept_b_I: float
    intercept_b_SS: float
    intercept_b_risk: float
    kappa: float


def line_coefficients(measure, profile, phi, sigma_eps2):
    """Slope and intercepts of the ridgeless overparameterized line.

    Uses the psi-free branch of the ridgeless equation (valid whenever
    ``phi > psi``), so no psi argument is needed.
    """
    # any psi < phi selects the min(1, phi/psi) = 1 branch
    solution = solve_kappa_ridgeless(measure, profile, phi, psi=phi / 2.0)
    kappa = solution.kappa
    snap = _Snapshot(measure, phi, kappa)
    rho_s, rho_t = profile.rho_s, profile.rho_t

    denom_s = rho_s * (profile.omega_s + snap.i(1, 1, "s"))
    if denom_s <= 0:
        raise RegimeDegeneracyError("source nonlinearity denominator is not positive")
    slope = rho_t * (profile.omega_t + snap.i(1, 1, "t")) / denom_s

    ss_denom = _guard(_ss_denominator(snap), "shared-sample")
    intercept_i = (
        2.0 * kappa**2 * (sigma_eps2 + phi * snap.i(1, 2, "s"))
        * (rho_t * snap.i(2, 2, "t") - slope * rho_s * snap.i(2, 2, "s"))
        / (rho_s * ss_denom)
    )

    params = RegimeParams(phi=phi, psi=phi / 2.0, gamma=0.0, sigma_eps2=sigma_eps2)
    bias_s = bias_variance("s", measure, profile, params, solution=solution)[0]
    bias_t = bias_variance("t", measure, profile, params, solution=solution)[0]
    intercept_risk = 0.5 * intercept_i + (bias_t - slope * bias_s)
    return LineCoefficients(
        slope_a=slope,
        intercept_b_I=intercept_i,
        intercept_b_SS=0.0,
        intercept_b_risk=intercept_risk,
        kappa=kappa,
    )


def risk_line_slope(measure, profile, phi):
    """Slope of the target-vs-source risk line, coded from the risk side.

    Same expression as the disagreement slope; kept as an independent
    evaluation so the equality can be asserted rather than assumed.
    """
    solution = solve_kappa_ridgeless(measure, profile, phi, psi=phi / 2.0)
    snap = _Snapshot(measure, phi, solution.kappa)
    return (
        profile.rho_t
        * (profile.omega_t + snap.i(1, 1, "t"))
        / (profile.rho_s * (profile.omega_s + snap.i(1, 1, "s")))
    )


def sweep_psi(quantity, measure, profile, phi, gamma, sigma_eps2, psi_grid):
    """Evaluate one quantity over a psi grid, for both domains.

    ``quantity`` is ``dis_I``, ``dis_SS``, ``dis_SW`` or ``risk``.
    ``gamma == 0`` selects the ridgeless formulas.  Returns a list of
    ``(psi, source_value, target_value)`` triples in grid order.
    """
    psi_grid = list(psi_grid)
    if not psi_grid:
        raise ValueError("psi_grid must be nonempty")
    if any(p == phi for p in psi_grid):
        raise ValueError("psi_grid values must differ from phi")
    rows = []
    for psi in psi_grid:
        params = RegimeParams(phi=phi, psi=psi, gamma=gamma, sigma_eps2=sigma_eps2)
        values = {}
        if quantity == "risk":
            solution = (
                solve_kappa_ridgeless(measure, profile, phi, psi)
                if gamma == 0 else solve_kappa(measure, profile, params)
            )
            for domain in ("s", "t"):
                values[domain] = bias_variance(
                    domain, measure, profile, params, solution=solution
                )[2]
        elif quantity.startswith("dis_"):
            kind = quantity[4:]
            if gamma == 0:
                solution = solve_kappa_ridgeless(measure, profile, phi, psi)
                for domain in ("s", "t"):
                    values[domain] = disagreement_ridgeless(
                        kind, domain, measure, profile, phi, psi, sigma_eps2,
                        solution=solution,
                    )
            else:
                solution = solve_kappa(measure, profile, params)
                for domain in ("s", "t"):
                    values[domain] = disagreement_ridge(
                        kind, domain, measure, profile, params, solution=solution
                    )
        else:
            raise ValueError(f"unknown quantity {quantity!r}")
        rows.append((psi, values["s"], values["t"]))
    return rows


def deviation_profile(kind, measure, profile, phi, psi_grid, gamma_list, sigma_eps2):
    """Distance of ridge curves from the ridgeless line, per ``(psi, gamma)``.

    ``kind`` is ``I``, ``SS`` or ``risk``.  All psi must sit below phi and
    all gammas must be positive; the line coefficients come from the
    ridgeless limit.  Returns ``(gamma, psi, deviation)`` triples.
    """
    psi_grid, gamma_list = list(psi_grid), list(gamma_list)
    if any(p >= phi for p in psi_grid):
        raise ValueError("deviation profile requires every psi < phi")
    if any(g <= 0 for g in gamma_list):
        raise ValueError("deviation profile requires gamma > 0")
    line = line_coefficients(measure, profile, phi, sigma_eps2)
    if kind == "I":
        intercept = line.intercept_b_I
    elif kind == "SS":
        intercept = line.intercept_b_SS
    elif kind == "risk":
        intercept = line.intercept_b_risk
    else:
        raise ValueError(f"kind must be 'I', 'SS' or 'risk', got {kind!r}")
    rows = []
    for gamma in gamma_list:
        for psi in psi_grid:
            params = RegimeParams(phi=phi, psi=psi, gamma=gamma, sigma_eps2=sigma_eps2)
            solution = solve_kappa(measure, profile, params)
            if kind == "risk":
                source = bias_variance("s", measure, profile, params, solution=solution)[2]
                target = bias_variance("t", measure, profile, params, solution=solution)[2]
            else:
                source = disagreement_ridge(
                    kind, "s", measure, profile, params, solution=solution
                )
                target = disagreement_ridge(
                    kind, "t", measure, profile, params, solution=solution
                )
            rows.append((gamma, psi, target - line.slope_a * source - intercept))
    return rows
