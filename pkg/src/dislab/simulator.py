"""Finite-size Monte Carlo for random-features ridge regression.

Data model: inputs are Gaussian with a source covariance, labels are a
random linear signal (scaled by ``1/sqrt(d)``) plus noise.  A model is a
two-layer network with a fixed random first layer ``W`` and a ridge-trained
linear readout.  Trials estimate the three disagreement flavors and the
squared-error risk under source and target test distributions.

Every random draw comes from a stream keyed by ``(master_seed, trial,
role)``, so shared-sample / shared-weight pairings are exact and estimates
are bit-identical no matter how trials are scheduled across threads.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_nonnegative, check_symmetric_matrix
from .activation import activation_constants, gaussian_moments, get_activation

_ROLES = {
    "beta": 0,
    "X1": 1,
    "X2": 2,
    "W1": 3,
    "W2": 4,
    "noise1": 5,
    "noise2": 6,
    "test": 7,
    "theta1": 8,
    "theta2": 9,
    "theta_test1": 10,
    "theta_test2": 11,
}


def trial_rng(master_seed, trial, role):
    """Independent generator for one (trial, role) cell of the experiment."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(trial, _ROLES[role]))
    return np.random.default_rng(seq)


def _coerce_covariance(value, d, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != d:
            raise ValueError(f"{name} diagonal must have length {d}")
        if not np.isfinite(arr).all() or (arr < 0).any():
            raise ValueError(f"{name} diagonal must be finite and nonnegative")
        return arr
    arr = check_symmetric_matrix(arr, name=name)
    if arr.shape[0] != d:
        raise ValueError(f"{name} must be {d}x{d}, got {arr.shape}")
    return arr


def _sqrt_covariance(cov):
    if cov.ndim == 1:
        return np.sqrt(cov)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals.min() < -1e-8 * max(1.0, eigvals.max()):
        raise ValueError("covariance is not positive semidefinite")
    eigvals = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def _apply_sqrt(sqrt_cov, z):
    if sqrt_cov.ndim == 1:
        return sqrt_cov[:, None] * z
    return sqrt_cov @ z


def covariance_from_measure(measure, d):
    """Diagonal covariance pair realizing a discrete joint spectrum at size d.

    Each atom gets ``floor(weight * d)`` coordinates; leftover coordinates
    go to the heaviest atom.
    """
    lam_s, lam_t, weights = measure.arrays()
    counts = np.floor(weights * d).astype(int)
    counts[int(np.argmax(weights))] += d - int(counts.sum())
    diag_s = np.repeat(lam_s, counts)
    diag_t = np.repeat(lam_t, counts)
    return diag_s, diag_t


@dataclass
class SimulationConfig:
    """Finite-size experiment description.

    ``sigma_s`` / ``sigma_t`` may be full symmetric matrices or 1-D
    diagonals.  ``center_features`` subtracts the Gaussian mean of the
    activation from train and test features; ``use_gaussian_equivalent``
    swaps the nonlinear features for moment-matched noisy linear ones.
    """

    n: int
    d: int
    N: int
    gamma: float
    sigma_eps2: float
    sigma_s: np.ndarray
    sigma_t: np.ndarray
    activation: object = "relu"
    trials: int = 100
    n_test: int = 2000
    master_seed: int = 0
    center_features: bool = False
    use_gaussian_equivalent: bool = False

    def __post_init__(self):
        for name in ("n", "d", "N"):
            if int(getattr(self, name)) < 2:
                raise ValueError(f"{name} must be at least 2")
            setattr(self, name, int(getattr(self, name)))
        check_nonnegative(self.gamma, "gamma")
        check_nonnegative(self.sigma_eps2, "sigma_eps2")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.n_test < 1:
            raise ValueError("n_test must be at least 1")
        self.sigma_s = _coerce_covariance(self.sigma_s, self.d, "sigma_s")
        self.sigma_t = _coerce_covariance(self.sigma_t, self.d, "sigma_t")
        self.activation = get_activation(self.activation)
        self._sqrt_s = _sqrt_covariance(self.sigma_s)
        self._sqrt_t = _sqrt_covariance(self.sigma_t)
        self.m_s = float(np.mean(self.sigma_s) if self.sigma_s.ndim == 1
                         else np.trace(self.sigma_s) / self.d)
        self.m_t = float(np.mean(self.sigma_t) if self.sigma_t.ndim == 1
                         else np.trace(self.sigma_t) / self.d)
        self.profile = activation_constants(self.activation, self.m_s, self.m_t)
        self._feature_means = {
            "s": gaussian_moments(self.activation, self.m_s)[0],
            "t": gaussian_moments(self.activation, self.m_t)[0],
        }

    def sqrt_cov(self, domain):
        return self._sqrt_s if domain == "s" else self._sqrt_t

    def feature_mean(self, domain):
        return self._feature_means[domain]


@dataclass(frozen=True)
class EmpiricalEstimate:
    """Trial-averaged value with its standard error."""

    mean: float
    std_error: float
    trials: int


def _aggregate(values):
    trials = len(values)
    mean = math.fsum(values) / trials
    if trials < 2:
        return EmpiricalEstimate(mean, float("nan"), trials)
    var = math.fsum((v - mean) ** 2 for v in values) / (trials - 1)
    return EmpiricalEstimate(mean, math.sqrt(var / trials), trials)


def generate_dataset(config, beta, rng, noise_rng=None):
    """Draw ``(X, Y)``: Gaussian columns from the source domain with noisy
    linear labels ``Y = X'beta/sqrt(d) + eps``."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (config.d,) or not np.isfinite(beta).all():
        raise ValueError(f"beta must be a finite vector of length {config.d}")
    if noise_rng is None:
        noise_rng = rng
    z = rng.standard_normal((config.d, config.n))
    X = _apply_sqrt(config.sqrt_cov("s"), z)
    Y = X.T @ beta / math.sqrt(config.d)
    if config.sigma_eps2 > 0:
        Y = Y + math.sqrt(config.sigma_eps2) * noise_rng.standard_normal(config.n)
    return X, Y


def gaussian_equivalent_features(config, W, X, rng):
    """Noisy linear stand-in for the activation features of training inputs:
    ``sqrt(rho_s/d) W X + sqrt(rho_s omega_s) Theta``."""
    rho, omega = config.profile.rho_s, config.profile.omega_s
    noise = math.sqrt(rho * omega) * rng.standard_normal((W.shape[0], X.shape[1]))
    return math.sqrt(rho / config.d) * (W @ X) + noise


def _ge_test_features(config, W, X, rng, domain):
    rho = config.profile.rho(domain)
    omega = config.profile.omega(domain)
    noise = math.sqrt(rho * omega) * rng.standard_normal((W.shape[0], X.shape[1]))
    return math.sqrt(rho / config.d) * (W @ X) + noise


def _activation_features(config, W, X, domain):
    F = config.activation(W @ X / math.sqrt(config.d))
    if config.center_features:
        F = F - config.feature_mean(domain)
    return F


@dataclass
class FittedModel:
    """Trained readout over a fixed random first layer."""

    config: SimulationConfig
    W: np.ndarray
    F: np.ndarray
    coef: np.ndarray
    gamma: float
    _feature_sum: np.ndarray = field(init=False)

    def __post_init__(self):
        # F @ coef cached: prediction on fresh points is one inner product
        self._feature_sum = self.F @ self.coef

    def predict(self, X_new, domain="s", theta_rng=None):
        """Predictions at new input columns drawn from ``domain``."""
        config = self.config
        if config.use_gaussian_equivalent:
            if theta_rng is None:
                raise ValueError("gaussian-equivalent prediction needs theta_rng")
            f = _ge_test_features(config, self.W, X_new, theta_rng, domain)
        else:
            f = _activation_features(config, self.W, X_new, domain)
        return self._feature_sum @ f / config.N


def fit(config, W, X, Y, theta=None):
    """Fit the ridge readout for weights ``W`` on data ``(X, Y)``.

    ``gamma > 0`` solves the regularized normal system directly;
    ``gamma == 0`` returns the minimum-norm least-squares readout via an
    eigenvalue pseudoinverse with relative cutoff
    ``max(n, N) * eps * largest``.
    """
    N, n = config.N, config.n
    if W.shape != (N, config.d):
        raise ValueError(f"W must be {N}x{config.d}, got {W.shape}")
    if X.shape != (config.d, n) or Y.shape != (n,):
        raise ValueError("X must be d x n and Y length n")
    if config.use_gaussian_equivalent:
        if theta is None:
            raise ValueError("gaussian-equivalent fit needs a theta noise matrix")
        F = math.sqrt(config.profile.rho_s / config.d) * (W @ X) \
            + math.sqrt(config.profile.rho_s * config.profile.omega_s) * theta
    else:
        F = _activation_features(config, W, X, "s")
    if not np.isfinite(F).all():
        raise FloatingPointError("non-finite feature values")
    K = F.T @ F / N
    if config.gamma > 0:
        coef = np.linalg.solve(K + config.gamma * np.eye(n), Y)
    else:
        eigvals, eigvecs = np.linalg.eigh(K)
        cutoff = max(n, N) * np.finfo(float).eps * max(eigvals.max(), 0.0)
        inv = np.zeros_like(eigvals)
        keep = eigvals > cutoff
        inv[keep] = 1.0 / eigvals[keep]
        coef = eigvecs @ (inv * (eigvecs.T @ Y))
    return FittedModel(config=config, W=W, F=F, coef=coef, gamma=config.gamma)


def _fit_slot(config, W, X, Y, trial, slot):
    theta = None
    if config.use_gaussian_equivalent:
        theta = trial_rng(config.master_seed, trial, f"theta{slot}").standard_normal(
            (config.N, config.n)
        )
    return fit(config, W, X, Y, theta=theta)


def _test_inputs(config, trial, domain):
    z = trial_rng(config.master_seed, trial, "test").standard_normal(
        (config.d, config.n_test)
    )
    return _apply_sqrt(config.sqrt_cov(domain), z)


def _predict_slot(config, model, X_test, trial, domain, slot):
    theta_rng = None
    if config.use_gaussian_equivalent:
        theta_rng = trial_rng(config.master_seed, trial, f"theta_test{slot}")
    return model.predict(X_test, domain=domain, theta_rng=theta_rng)


def _disagreement_pair(config, kind, trial):
    """Fit the two models whose prediction gap defines one disagreement kind."""
    seed = config.master_seed
    beta = trial_rng(seed, trial, "beta").standard_normal(config.d)
    X1, Y1 = generate_dataset(
        config, beta, trial_rng(seed, trial, "X1"), trial_rng(seed, trial, "noise1")
    )
    W1 = trial_rng(seed, trial, "W1").standard_normal((config.N, config.d))
    if kind == "SS":
        W2 = trial_rng(seed, trial, "W2").standard_normal((config.N, config.d))
        data2 = (X1, Y1)
        weights = (W1, W2)
    elif kind == "SW":
        X2, Y2 = generate_dataset(
            config, beta, trial_rng(seed, trial, "X2"), trial_rng(seed, trial, "noise2")
        )
        data2 = (X2, Y2)
        weights = (W1, W1)
    elif kind == "I":
        X2, Y2 = generate_dataset(
            config, beta, trial_rng(seed, trial, "X2"), trial_rng(seed, trial, "noise2")
        )
        W2 = trial_rng(seed, trial, "W2").standard_normal((config.N, config.d))
        data2 = (X2, Y2)
        weights = (W1, W2)
    else:
        raise ValueError(f"kind must be 'I', 'SS' or 'SW', got {kind!r}")
    model1 = _fit_slot(config, weights[0], X1, Y1, trial, 1)
    model2 = _fit_slot(config, weights[1], data2[0], data2[1], trial, 2)
    return model1, model2


def _run_trials(config, one_trial, threads=None):
    threads = resolve_threads(threads)
    trials = range(config.trials)
    if threads <= 1:
        return [one_trial(t) for t in trials]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one_trial, trials))


def resolve_threads(threads=None):
    if threads is None:
        threads = os.environ.get("DISLAB_THREADS", "1")
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be at least 1")
    return threads


def estimate_disagreement(config, kind, domain, threads=None):
    """Monte Carlo mean squared prediction gap for one pairing and domain."""

    def one_trial(trial):
        model1, model2 = _disagreement_pair(config, kind, trial)
        X_test = _test_inputs(config, trial, domain)
        p1 = _predict_slot(config, model1, X_test, trial, domain, 1)
        p2 = _predict_slot(config, model2, X_test, trial, domain, 2)
        return float(np.mean((p1 - p2) ** 2))

    return _aggregate(_run_trials(config, one_trial, threads))


def estimate_risk(config, domain, threads=None):
    """Monte Carlo squared error against the scaled linear signal."""

    def one_trial(trial):
        seed = config.master_seed
        beta = trial_rng(seed, trial, "beta").standard_normal(config.d)
        X1, Y1 = generate_dataset(
            config, beta, trial_rng(seed, trial, "X1"), trial_rng(seed, trial, "noise1")
        )
        W1 = trial_rng(seed, trial, "W1").standard_normal((config.N, config.d))
        model = _fit_slot(config, W1, X1, Y1, trial, 1)
        X_test = _test_inputs(config, trial, domain)
        truth = X_test.T @ beta / math.sqrt(config.d)
        preds = _predict_slot(config, model, X_test, trial, domain, 1)
        return float(np.mean((truth - preds) ** 2))

    return _aggregate(_run_trials(config, one_trial, threads))


def estimate_suite(config, threads=None):
    """All disagreement kinds, both domains, and both risks in one sweep.

    Shares the four fits per trial across quantities (the model pairs
    ``(W1,X1)/(W2,X2)``, ``(W1,X1)/(W2,X1)`` and ``(W1,X1)/(W1,X2)``
    realize the I, SS and SW pairings), which is several times cheaper
    than estimating each quantity separately.  Only defined for the
    activation path (not the gaussian-equivalent toggle, where feature
    noise cannot be shared across pairings).
    """
    if config.use_gaussian_equivalent:
        raise ValueError("estimate_suite does not support gaussian-equivalent features")

    def one_trial(trial):
        seed = config.master_seed
        beta = trial_rng(seed, trial, "beta").standard_normal(config.d)
        X1, Y1 = generate_dataset(
            config, beta, trial_rng(seed, trial, "X1"), trial_rng(seed, trial, "noise1")
        )
        X2, Y2 = generate_dataset(
            config, beta, trial_rng(seed, trial, "X2"), trial_rng(seed, trial, "noise2")
        )
        W1 = trial_rng(seed, trial, "W1").standard_normal((config.N, config.d))
        W2 = trial_rng(seed, trial, "W2").standard_normal((config.N, config.d))
        m11 = fit(config, W1, X1, Y1)
        m22 = fit(config, W2, X2, Y2)
        m21 = fit(config, W2, X1, Y1)
        m12 = fit(config, W1, X2, Y2)
        out = {}
        z = trial_rng(seed, trial, "test").standard_normal((config.d, config.n_test))
        for domain in ("s", "t"):
            X_test = _apply_sqrt(config.sqrt_cov(domain), z)
            p11, p22, p21, p12 = (
                m.predict(X_test, domain=domain) for m in (m11, m22, m21, m12)
            )
            truth = X_test.T @ beta / math.sqrt(config.d)
            out[("dis_I", domain)] = float(np.mean((p11 - p22) ** 2))
            out[("dis_SS", domain)] = float(np.mean((p11 - p21) ** 2))
            out[("dis_SW", domain)] = float(np.mean((p11 - p12) ** 2))
            out[("risk", domain)] = float(np.mean((truth - p11) ** 2))
        return out

    per_trial = _run_trials(config, one_trial, threads)
    keys = per_trial[0].keys()
    return {key: _aggregate([row[key] for row in per_trial]) for key in keys}
