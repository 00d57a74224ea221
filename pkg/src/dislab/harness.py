"""Experiment orchestration: JSON configs in, CSV curves and JSON reports out.

Modes
-----
theory          closed-form sweeps over a psi grid (plus line coefficients
                when the regime is ridgeless and overparameterized)
simulate        Monte Carlo sweeps over a feature-width grid
compare         theory and simulation on matched grids, with z-scores
estimate-slope  slope of the target-vs-source line from sample matrices
                or covariance files
dataset         risk/disagreement curves from user-supplied feature files

Numbers are written with ``repr`` so every emitted file re-parses to
bit-identical values, and identical configs with identical seeds produce
byte-identical outputs at any thread count.
"""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import asymptotics, simulator
from .activation import activation_constants, get_activation
from .matrixio import load_matrix
from .selfconsistent import RegimeParams, solve_kappa_ridgeless
from .spectra import SpectralMeasure, empirical_joint_spectrum, integral_functional, moments

QUANTITIES = ("dis_I", "dis_SS", "dis_SW", "risk")

CSV_HEADER = (
    "quantity,psi,n_features,gamma,source_value,target_value,"
    "source_std_error,target_std_error"
)


class ConfigError(ValueError):
    """Invalid experiment config; the message names the offending field."""

    def __init__(self, path, problem):
        super().__init__(f"config field '{path}': {problem}")
        self.path = path


def _get(cfg, path, default=None, required=False):
    node = cfg
    walked = []
    for part in path.split("."):
        walked.append(part)
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(".".join(walked), "missing")
            return default
        node = node[part]
    return node


def _number(cfg, path, default=None, required=False, minimum=None, strict=False):
    value = _get(cfg, path, default=default, required=required)
    if value is None:
        return None
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a number, got {value!r}") from None
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if minimum is not None and (value < minimum or (strict and value == minimum)):
        cmp = ">" if strict else ">="
        raise ConfigError(path, f"must be {cmp} {minimum}")
    return value


def _integer(cfg, path, default=None, required=False, minimum=None):
    value = _number(cfg, path, default=default, required=required, minimum=minimum)
    if value is None:
        return None
    if value != int(value):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return int(value)


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError("<document>", f"invalid JSON: {err}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("<document>", "top level must be an object")
    return cfg


def _parse_measure(cfg):
    atoms = _get(cfg, "measure.atoms")
    files = _get(cfg, "measure.covariance_files")
    if atoms is None and files is None:
        raise ConfigError("measure", "needs 'atoms' or 'covariance_files'")
    if atoms is not None:
        try:
            return SpectralMeasure.from_json_obj(atoms)
        except (ValueError, KeyError, TypeError) as err:
            raise ConfigError("measure.atoms", str(err)) from None
    source = _get(cfg, "measure.covariance_files.source", required=True)
    target = _get(cfg, "measure.covariance_files.target", required=True)
    try:
        return empirical_joint_spectrum(load_matrix(source), load_matrix(target))
    except (OSError, ValueError) as err:
        raise ConfigError("measure.covariance_files", str(err)) from None


def _parse_activation(cfg):
    name = _get(cfg, "activation", default="relu")
    try:
        return get_activation(name)
    except ValueError as err:
        raise ConfigError("activation", str(err)) from None


def _parse_quantities(cfg):
    quantities = _get(cfg, "quantities", default=list(QUANTITIES))
    if not isinstance(quantities, list) or not quantities:
        raise ConfigError("quantities", "expected a nonempty list")
    for q in quantities:
        if q not in QUANTITIES:
            raise ConfigError("quantities", f"unknown quantity {q!r}")
    return quantities


@dataclass(frozen=True)
class CurveRecord:
    """One grid point of a target-vs-source curve."""

    quantity: str
    psi: float
    n_features: int | None
    gamma: float
    source_value: float
    target_value: float
    source_std_error: float | None = None
    target_std_error: float | None = None


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_curves(path, records):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (
                        r.quantity, r.psi, r.n_features, r.gamma,
                        r.source_value, r.target_value,
                        r.source_std_error, r.target_std_error,
                    )
                )
                + "\n"
            )


def read_curves(path):
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: not a curve file")
    records = []
    for line in lines[1:]:
        fields = line.split(",")
        records.append(
            CurveRecord(
                quantity=fields[0],
                psi=float(fields[1]),
                n_features=int(fields[2]) if fields[2] else None,
                gamma=float(fields[3]),
                source_value=float(fields[4]),
                target_value=float(fields[5]),
                source_std_error=float(fields[6]) if fields[6] else None,
                target_std_error=float(fields[7]) if fields[7] else None,
            )
        )
    return records


def _write_json(path, obj):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r2: float
    max_residual: float


def fit_line(source_values, target_values):
    """Ordinary least squares of target on source.

    ``max_residual`` is normalized by the largest absolute target value.
    Raises on fewer than two points or a constant source column.
    """
    x = np.asarray(source_values, dtype=float)
    y = np.asarray(target_values, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("source and target values must be 1-D and equal length")
    if len(x) < 2:
        raise ValueError("line fit needs at least two points")
    x_mean, y_mean = x.mean(), y.mean()
    sxx = float(np.sum((x - x_mean) ** 2))
    if sxx == 0.0:
        raise ValueError("source values are constant; slope is undefined")
    slope = float(np.sum((x - x_mean) * (y - y_mean)) / sxx)
    intercept = float(y_mean - slope * x_mean)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y_mean) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else 1.0 - ss_res / ss_tot
    scale = float(np.max(np.abs(y)))
    max_residual = float(np.max(np.abs(residuals))) / (scale if scale > 0 else 1.0)
    return LineFit(slope=slope, intercept=intercept, r2=r2, max_residual=max_residual)


def records_line_fit(records):
    return fit_line([r.source_value for r in records], [r.target_value for r in records])


# ---------------------------------------------------------------------------
# theory mode

def _theory_context(cfg):
    measure = _parse_measure(cfg)
    activation = _parse_activation(cfg)
    m_s, m_t = moments(measure)
    profile = activation_constants(activation, m_s, m_t)
    phi = _number(cfg, "regime.phi", required=True, minimum=0, strict=True)
    gamma = _number(cfg, "regime.gamma", default=0.0, minimum=0)
    sigma_eps2 = _number(cfg, "regime.sigma_eps2", default=0.0, minimum=0)
    return measure, profile, phi, gamma, sigma_eps2


def _psi_grid(cfg, phi):
    grid = _get(cfg, "sweep.psi_grid", required=True)
    if not isinstance(grid, list) or not grid:
        raise ConfigError("sweep.psi_grid", "expected a nonempty list")
    values = []
    for i, value in enumerate(grid):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"sweep.psi_grid[{i}]", "expected a number") from None
        if value <= 0:
            raise ConfigError(f"sweep.psi_grid[{i}]", "must be > 0")
        if value == phi:
            raise ConfigError(f"sweep.psi_grid[{i}]", "must differ from regime.phi")
        values.append(value)
    return values


def run_theory(cfg, out_path):
    """Closed-form curves for every requested quantity over the psi grid."""
    measure, profile, phi, gamma, sigma_eps2 = _theory_context(cfg)
    psi_grid = _psi_grid(cfg, phi)
    quantities = _parse_quantities(cfg)
    records = []
    for quantity in quantities:
        for psi, source, target in asymptotics.sweep_psi(
            quantity, measure, profile, phi, gamma, sigma_eps2, psi_grid
        ):
            records.append(
                CurveRecord(
                    quantity=quantity, psi=psi, n_features=None, gamma=gamma,
                    source_value=source, target_value=target,
                )
            )
    write_curves(out_path, records)
    outputs = [out_path]
    if gamma == 0 and all(psi < phi for psi in psi_grid):
        line = asymptotics.line_coefficients(measure, profile, phi, sigma_eps2)
        line_path = _sidecar(out_path, "line.json")
        _write_json(
            line_path,
            {
                "slope_a": line.slope_a,
                "intercept_b_I": line.intercept_b_I,
                "intercept_b_SS": line.intercept_b_SS,
                "intercept_b_risk": line.intercept_b_risk,
                "kappa": line.kappa,
                "phi": phi,
                "sigma_eps2": sigma_eps2,
            },
        )
        outputs.append(line_path)
    return outputs


def _sidecar(out_path, suffix):
    stem, _ = os.path.splitext(str(out_path))
    return f"{stem}.{suffix}"


# ---------------------------------------------------------------------------
# simulate / compare modes

def _simulation_config(cfg, n_features, seed_override=None):
    sim = _get(cfg, "simulation", required=True)
    if not isinstance(sim, dict):
        raise ConfigError("simulation", "expected an object")
    n = _integer(cfg, "simulation.n", required=True, minimum=2)
    d = _integer(cfg, "simulation.d", required=True, minimum=2)
    trials = _integer(cfg, "simulation.trials", default=100, minimum=1)
    n_test = _integer(cfg, "simulation.n_test", default=2000, minimum=1)
    seed = _integer(cfg, "simulation.seed", default=0)
    if seed_override is not None:
        seed = seed_override
    gamma = _number(cfg, "regime.gamma", default=0.0, minimum=0)
    sigma_eps2 = _number(cfg, "regime.sigma_eps2", default=0.0, minimum=0)
    measure = _parse_measure(cfg)
    diag_s, diag_t = simulator.covariance_from_measure(measure, d)
    return simulator.SimulationConfig(
        n=n, d=d, N=n_features, gamma=gamma, sigma_eps2=sigma_eps2,
        sigma_s=diag_s, sigma_t=diag_t,
        activation=_parse_activation(cfg),
        trials=trials, n_test=n_test, master_seed=seed,
        center_features=bool(_get(cfg, "simulation.center_features", default=False)),
        use_gaussian_equivalent=bool(
            _get(cfg, "simulation.use_gaussian_equivalent", default=False)
        ),
    )


def _estimate_all(config, threads):
    # the shared-fit suite cannot interleave gaussian-equivalent feature
    # noise across pairings; fall back to the one-quantity estimators there
    if not config.use_gaussian_equivalent:
        return simulator.estimate_suite(config, threads=threads)
    out = {}
    for kind in ("I", "SS", "SW"):
        for domain in ("s", "t"):
            out[(f"dis_{kind}", domain)] = simulator.estimate_disagreement(
                config, kind, domain, threads=threads
            )
    for domain in ("s", "t"):
        out[("risk", domain)] = simulator.estimate_risk(config, domain, threads=threads)
    return out


def _n_grid(cfg):
    grid = _get(cfg, "simulation.N_grid", required=True)
    if not isinstance(grid, list) or not grid:
        raise ConfigError("simulation.N_grid", "expected a nonempty list")
    values = []
    for i, value in enumerate(grid):
        if not isinstance(value, (int, float)) or int(value) != value or value < 2:
            raise ConfigError(f"simulation.N_grid[{i}]", "expected an integer >= 2")
        values.append(int(value))
    return values


def run_simulate(cfg, out_path, seed_override=None, threads=None):
    """Monte Carlo curves over the feature-width grid."""
    quantities = _parse_quantities(cfg)
    n_grid = _n_grid(cfg)
    d = _integer(cfg, "simulation.d", required=True, minimum=2)
    records = []
    for n_features in n_grid:
        config = _simulation_config(cfg, n_features, seed_override)
        suite = _estimate_all(config, threads)
        psi = d / n_features
        for quantity in quantities:
            src = suite[(quantity, "s")]
            tgt = suite[(quantity, "t")]
            records.append(
                CurveRecord(
                    quantity=quantity, psi=psi, n_features=n_features,
                    gamma=config.gamma,
                    source_value=src.mean, target_value=tgt.mean,
                    source_std_error=src.std_error, target_std_error=tgt.std_error,
                )
            )
    write_curves(out_path, records)
    return [out_path]


def _check_matched_grids(cfg, d, n_grid):
    psi_grid = _get(cfg, "sweep.psi_grid")
    if psi_grid is None:
        return
    implied = [d / n_features for n_features in n_grid]
    if len(psi_grid) != len(implied) or any(
        abs(float(a) - b) > 1e-12 * max(1.0, abs(b)) for a, b in zip(psi_grid, implied)
    ):
        raise ConfigError(
            "sweep.psi_grid",
            f"does not match simulation.N_grid (implied psi grid {implied!r})",
        )


def run_compare(cfg, out_path, seed_override=None, threads=None):
    """Theory and simulation on matched grids, with per-point z-scores."""
    measure, profile, phi, gamma, sigma_eps2 = _theory_context(cfg)
    quantities = _parse_quantities(cfg)
    n_grid = _n_grid(cfg)
    d = _integer(cfg, "simulation.d", required=True, minimum=2)
    n = _integer(cfg, "simulation.n", required=True, minimum=2)
    if abs(d / n - phi) > 1e-9 * max(1.0, phi):
        raise ConfigError("regime.phi", f"must equal simulation.d/simulation.n = {d / n!r}")
    _check_matched_grids(cfg, d, n_grid)

    rows = []
    insufficient = False
    for n_features in n_grid:
        psi = d / n_features
        params = RegimeParams(phi=phi, psi=psi, gamma=gamma, sigma_eps2=sigma_eps2)
        report = asymptotics.theory_report(measure, profile, params)
        config = _simulation_config(cfg, n_features, seed_override)
        suite = _estimate_all(config, threads)
        for quantity in quantities:
            for domain in ("s", "t"):
                theory = getattr(report.domain(domain), quantity)
                empirical = suite[(quantity, domain)]
                gap = abs(theory - empirical.mean)
                if empirical.trials < 2 or not math.isfinite(empirical.std_error) \
                        or empirical.std_error == 0.0:
                    z = None
                    insufficient = True
                else:
                    z = gap / empirical.std_error
                rows.append(
                    {
                        "quantity": quantity,
                        "domain": domain,
                        "psi": psi,
                        "n_features": n_features,
                        "theory": theory,
                        "empirical": empirical.mean,
                        "std_error": None
                        if not math.isfinite(empirical.std_error)
                        else empirical.std_error,
                        "trials": empirical.trials,
                        "z": z,
                        "rel_gap": gap / abs(theory) if theory != 0 else None,
                    }
                )
    scored = [r["z"] for r in rows if r["z"] is not None]
    summary = {
        "points": len(rows),
        "max_z": max(scored) if scored else None,
        "fraction_z_le_3": (
            sum(1 for z in scored if z <= 3.0) / len(scored) if scored else None
        ),
        "insufficient_trials": insufficient,
    }
    _write_json(out_path, {"mode": "compare", "phi": phi, "gamma": gamma,
                           "records": rows, "summary": summary})
    return [out_path]


# ---------------------------------------------------------------------------
# estimate-slope mode

def estimate_slope(activation, sigma_s_hat, sigma_t_hat, phi, psi=None):
    """Plug-in slope of the target-vs-source line from covariance estimates.

    Builds the joint sample spectrum, evaluates the nonlinearity constants
    at the sample spectral means, solves the ridgeless equation and forms
    the slope.  ``psi`` only matters underparameterized; by default the
    overparameterized branch (``min(1, phi/psi) = 1``) is used.
    """
    measure = empirical_joint_spectrum(sigma_s_hat, sigma_t_hat)
    m_s, m_t = moments(measure)
    profile = activation_constants(activation, m_s, m_t)
    if psi is None:
        psi = phi / 2.0
    solution = solve_kappa_ridgeless(measure, profile, phi, psi)
    i11s = integral_functional(measure, 1, 1, "s", solution.kappa, phi)
    i11t = integral_functional(measure, 1, 1, "t", solution.kappa, phi)
    slope = (profile.rho_t * (profile.omega_t + i11t)
             / (profile.rho_s * (profile.omega_s + i11s)))
    return {
        "slope_a": slope,
        "kappa": solution.kappa,
        "phi": phi,
        "psi": psi,
        "m_s": m_s,
        "m_t": m_t,
        "rho_s": profile.rho_s,
        "rho_t": profile.rho_t,
        "omega_s": profile.omega_s,
        "omega_t": profile.omega_t,
    }


def sample_covariance(rows):
    """Covariance of sample rows about their mean (denominator n - 1)."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise ValueError("need a 2-D sample matrix with at least two rows")
    centered = rows - rows.mean(axis=0)
    return centered.T @ centered / (rows.shape[0] - 1)


def run_estimate_slope(cfg, out_path):
    activation = _parse_activation(cfg)
    phi = _number(cfg, "slope.phi", required=True, minimum=0, strict=True)
    psi = _number(cfg, "slope.psi", minimum=0, strict=True)
    src_samples = _get(cfg, "slope.source_samples")
    tgt_samples = _get(cfg, "slope.target_samples")
    src_cov = _get(cfg, "slope.source_covariance")
    tgt_cov = _get(cfg, "slope.target_covariance")
    if src_samples is not None and tgt_samples is not None:
        source = load_matrix(src_samples)
        target = load_matrix(tgt_samples)
        if source.shape[1] != target.shape[1]:
            raise ConfigError(
                "slope.target_samples",
                f"feature count {target.shape[1]} does not match source "
                f"{source.shape[1]}",
            )
        if source.shape[0] < 2 or target.shape[0] < 2:
            raise ConfigError("slope", "need at least two samples per domain")
        sigma_s_hat = sample_covariance(source)
        sigma_t_hat = sample_covariance(target)
    elif src_cov is not None and tgt_cov is not None:
        sigma_s_hat = load_matrix(src_cov)
        sigma_t_hat = load_matrix(tgt_cov)
    else:
        raise ConfigError(
            "slope", "needs source/target 'samples' files or 'covariance' files"
        )
    result = estimate_slope(activation, sigma_s_hat, sigma_t_hat, phi, psi)
    _write_json(out_path, result)
    return [out_path]


# ---------------------------------------------------------------------------
# dataset mode

def _dataset_rng(seed, n_features, role):
    seq = np.random.SeedSequence(seed, spawn_key=(int(n_features), role))
    return np.random.default_rng(seq)


def _dataset_features(activation, W, rows):
    return activation(W @ rows.T / math.sqrt(rows.shape[1]))


def _dataset_fit(activation, W, rows, labels, gamma):
    n = rows.shape[0]
    F = _dataset_features(activation, W, rows)
    K = F.T @ F / W.shape[0]
    if gamma > 0:
        coef = np.linalg.solve(K + gamma * np.eye(n), labels)
    else:
        eigvals, eigvecs = np.linalg.eigh(K)
        cutoff = max(n, W.shape[0]) * np.finfo(float).eps * max(eigvals.max(), 0.0)
        inv = np.zeros_like(eigvals)
        keep = eigvals > cutoff
        inv[keep] = 1.0 / eigvals[keep]
        coef = eigvecs @ (inv * (eigvecs.T @ labels))
    return F @ coef


def _dataset_predict(activation, W, feature_sum, rows):
    return feature_sum @ _dataset_features(activation, W, rows) / W.shape[0]


def dataset_curves(activation, train_rows, train_labels, test_sets, n_grid,
                   gamma, seed, kinds=("SS",), n_train=None):
    """Risk and disagreement curves on fixed data, one point per width.

    ``test_sets`` maps domain tags ('s', 't') to ``(rows, labels)``.  The
    SS pairing refits with a second weight draw on the same rows; I and SW
    need two disjoint training blocks and therefore ``2 * n_train`` rows.
    """
    activation = get_activation(activation)
    train_rows = np.asarray(train_rows, dtype=float)
    train_labels = np.asarray(train_labels, dtype=float).ravel()
    if train_rows.shape[0] != train_labels.shape[0]:
        raise ValueError("training features and labels disagree on row count")
    if n_train is None:
        n_train = train_rows.shape[0]
    needs_two_blocks = any(k in ("I", "SW") for k in kinds)
    if train_rows.shape[0] < (2 * n_train if needs_two_blocks else n_train):
        raise ValueError("not enough training rows for the requested pairings")
    d = train_rows.shape[1]
    for tag, (rows, labels) in test_sets.items():
        if rows.shape[1] != d:
            raise ValueError(
                f"test set {tag!r} has {rows.shape[1]} features, expected {d}"
            )
        if rows.shape[0] != len(labels):
            raise ValueError(f"test set {tag!r} features and labels disagree")

    block1 = (train_rows[:n_train], train_labels[:n_train])
    block2 = (train_rows[n_train:2 * n_train], train_labels[n_train:2 * n_train]) \
        if needs_two_blocks else None
    records = []
    for n_features in n_grid:
        W1 = _dataset_rng(seed, n_features, 0).standard_normal((n_features, d))
        W2 = _dataset_rng(seed, n_features, 1).standard_normal((n_features, d))
        sum11 = _dataset_fit(activation, W1, *block1, gamma)
        fits = {"11": (W1, sum11)}
        if "SS" in kinds:
            fits["21"] = (W2, _dataset_fit(activation, W2, *block1, gamma))
        if "I" in kinds:
            fits["22"] = (W2, _dataset_fit(activation, W2, *block2, gamma))
        if "SW" in kinds:
            fits["12"] = (W1, _dataset_fit(activation, W1, *block2, gamma))
        values = {}
        for tag, (rows, labels) in test_sets.items():
            preds = {
                key: _dataset_predict(activation, W, fsum, rows)
                for key, (W, fsum) in fits.items()
            }
            values[("risk", tag)] = float(np.mean((labels - preds["11"]) ** 2))
            if "SS" in kinds:
                values[("dis_SS", tag)] = float(np.mean((preds["11"] - preds["21"]) ** 2))
            if "I" in kinds:
                values[("dis_I", tag)] = float(np.mean((preds["11"] - preds["22"]) ** 2))
            if "SW" in kinds:
                values[("dis_SW", tag)] = float(np.mean((preds["11"] - preds["12"]) ** 2))
        psi = d / n_features
        for quantity in ("risk", "dis_SS", "dis_I", "dis_SW"):
            if ("s" in test_sets and (quantity, "s") in values
                    and "t" in test_sets and (quantity, "t") in values):
                records.append(
                    CurveRecord(
                        quantity=quantity, psi=psi, n_features=n_features,
                        gamma=gamma,
                        source_value=values[(quantity, "s")],
                        target_value=values[(quantity, "t")],
                    )
                )
    return records


def run_dataset(cfg, out_path, seed_override=None):
    activation = _parse_activation(cfg)
    gamma = _number(cfg, "dataset.gamma", default=0.0, minimum=0)
    seed = _integer(cfg, "dataset.seed", default=0)
    if seed_override is not None:
        seed = seed_override
    kinds = _get(cfg, "dataset.kinds", default=["SS"])
    if not isinstance(kinds, list) or any(k not in ("I", "SS", "SW") for k in kinds):
        raise ConfigError("dataset.kinds", "expected a list drawn from ['I','SS','SW']")
    n_grid = _get(cfg, "dataset.N_grid", required=True)
    if not isinstance(n_grid, list) or not n_grid:
        raise ConfigError("dataset.N_grid", "expected a nonempty list")
    n_train = _integer(cfg, "dataset.n", default=None, minimum=2)

    def _load(field):
        path = _get(cfg, field, required=True)
        try:
            return load_matrix(path)
        except (OSError, ValueError) as err:
            raise ConfigError(field, str(err)) from None

    train_rows = _load("dataset.source_train_features")
    train_labels = _load("dataset.source_train_labels").ravel()
    test_sets = {
        "s": (
            _load("dataset.source_test_features"),
            _load("dataset.source_test_labels").ravel(),
        ),
        "t": (
            _load("dataset.target_test_features"),
            _load("dataset.target_test_labels").ravel(),
        ),
    }
    d = train_rows.shape[1]
    for tag, field in (("s", "dataset.source_test_features"),
                       ("t", "dataset.target_test_features")):
        if test_sets[tag][0].shape[1] != d:
            raise ConfigError(
                field,
                f"has {test_sets[tag][0].shape[1]} features, training data has {d}",
            )
    try:
        records = dataset_curves(
            activation, train_rows, train_labels, test_sets,
            [int(v) for v in n_grid], gamma, seed, kinds=kinds, n_train=n_train,
        )
    except ValueError as err:
        raise ConfigError("dataset", str(err)) from None
    write_curves(out_path, records)

    phi = d / (n_train if n_train is not None else train_rows.shape[0])
    slope = estimate_slope(
        activation,
        sample_covariance(test_sets["s"][0]),
        sample_covariance(test_sets["t"][0]),
        phi,
    )
    slope_path = _sidecar(out_path, "slope.json")
    _write_json(slope_path, slope)
    return [out_path, slope_path]
