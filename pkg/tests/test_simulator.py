import math

import numpy as np
import pytest

from dislab import (
    RegimeParams,
    SimulationConfig,
    SpectralMeasure,
    covariance_from_measure,
    estimate_disagreement,
    estimate_risk,
    estimate_suite,
    fit,
    gaussian_equivalent_features,
    generate_dataset,
    theory_report,
    trial_rng,
)

from conftest import relu_profile


def small_config(**overrides):
    measure = SpectralMeasure.from_pairs([(1.5, 5.0, 0.5), (1.0, 1.0, 0.5)])
    diag_s, diag_t = covariance_from_measure(measure, overrides.get("d", 64))
    base = dict(
        n=128, d=64, N=256, gamma=0.01, sigma_eps2=0.25,
        sigma_s=diag_s, sigma_t=diag_t, activation="relu",
        trials=30, n_test=300, master_seed=42,
    )
    base.update(overrides)
    return SimulationConfig(**base)


class TestGenerateDataset:
    def test_zero_signal_zero_noise(self):
        config = small_config(sigma_eps2=0.0)
        X, Y = generate_dataset(config, np.zeros(config.d), np.random.default_rng(0))
        assert np.all(Y == 0.0)

    def test_sample_covariance_matches_population(self):
        config = SimulationConfig(
            n=100_000, d=4, N=2, gamma=0.0, sigma_eps2=0.0,
            sigma_s=np.ones(4), sigma_t=np.ones(4), trials=1,
        )
        X, _ = generate_dataset(config, np.zeros(4), np.random.default_rng(7))
        emp = X @ X.T / config.n
        se = math.sqrt(2.0 / config.n)  # diagonal entries; off-diagonal smaller
        for i in range(4):
            for j in range(4):
                target = 1.0 if i == j else 0.0
                width = se if i == j else se / math.sqrt(2)
                assert abs(emp[i, j] - target) <= 5 * width

    def test_label_variance_approaches_trace_limit(self):
        d, n = 2000, 10_000
        config = SimulationConfig(
            n=n, d=d, N=2, gamma=0.0, sigma_eps2=0.25,
            sigma_s=np.ones(d), sigma_t=np.ones(d), trials=1,
        )
        rng = np.random.default_rng(21)
        beta = rng.standard_normal(d)
        _, Y = generate_dataset(config, beta, rng)
        target = 1.0 + 0.25  # trace scale plus label noise
        sample_var = float(np.var(Y, ddof=1))
        # var of a variance estimate plus the signal-strength wobble
        se = math.sqrt(2.0 / n) * target + math.sqrt(2.0 / d)
        assert abs(sample_var - target) <= 3 * se

    def test_bad_beta_rejected(self):
        config = small_config()
        with pytest.raises(ValueError, match="beta"):
            generate_dataset(config, np.zeros(3), np.random.default_rng(0))


class TestFit:
    def test_ridgeless_interpolates_when_overfeatured(self):
        config = small_config(n=40, d=16, N=80, gamma=0.0, sigma_eps2=0.1)
        rng = np.random.default_rng(3)
        beta = rng.standard_normal(16)
        X, Y = generate_dataset(config, beta, rng)
        W = rng.standard_normal((80, 16))
        model = fit(config, W, X, Y)
        preds = model.predict(X, domain="s")
        assert np.max(np.abs(preds - Y)) <= 1e-6 * max(1.0, np.max(np.abs(Y)))

    def test_huge_ridge_flattens_predictions(self):
        rng = np.random.default_rng(4)
        beta = rng.standard_normal(16)
        X_test = rng.standard_normal((16, 50))
        preds = {}
        for gamma in (0.01, 1e6):
            config = small_config(n=40, d=16, N=80, gamma=gamma)
            data_rng = np.random.default_rng(5)
            X, Y = generate_dataset(config, beta, data_rng)
            W = np.random.default_rng(6).standard_normal((80, 16))
            preds[gamma] = fit(config, W, X, Y).predict(X_test, domain="s")
        assert np.max(np.abs(preds[1e6])) <= 1e-3 * np.max(np.abs(preds[0.01]))

    def test_identity_features_reach_linear_regression(self):
        # with a huge width the feature regression collapses onto plain
        # least squares of Y on X
        d, n, N = 12, 240, 600
        config = SimulationConfig(
            n=n, d=d, N=N, gamma=0.0, sigma_eps2=0.01,
            sigma_s=np.ones(d), sigma_t=np.ones(d),
            activation="identity", trials=1,
        )
        rng = np.random.default_rng(8)
        beta = rng.standard_normal(d)
        X, Y = generate_dataset(config, beta, rng)
        W = rng.standard_normal((N, d))
        model = fit(config, W, X, Y)
        X_test = rng.standard_normal((d, 100))
        coef, *_ = np.linalg.lstsq(X.T, Y, rcond=None)
        oracle = X_test.T @ coef
        preds = model.predict(X_test, domain="s")
        scale = float(np.max(np.abs(oracle)))
        assert np.max(np.abs(preds - oracle)) <= 0.05 * scale

    def test_identical_models_never_disagree(self):
        config = small_config(n=30, d=16, N=32, trials=1)
        rng = np.random.default_rng(9)
        beta = rng.standard_normal(16)
        X, Y = generate_dataset(config, beta, rng)
        W = rng.standard_normal((32, 16))
        a = fit(config, W, X, Y)
        b = fit(config, W, X, Y)
        X_test = rng.standard_normal((16, 40))
        assert np.mean((a.predict(X_test) - b.predict(X_test)) ** 2) == 0.0

    def test_shape_errors(self):
        config = small_config(n=30, d=16, N=32)
        rng = np.random.default_rng(1)
        with pytest.raises(ValueError, match="W must be"):
            fit(config, rng.standard_normal((5, 5)),
                rng.standard_normal((16, 30)), rng.standard_normal(30))


class TestDisagreementEstimates:
    def test_independent_dominates_shared_pairings(self):
        config = small_config()
        suite = estimate_suite(config)
        for domain in ("s", "t"):
            dis_i = suite[("dis_I", domain)]
            for other in ("dis_SS", "dis_SW"):
                shared = suite[(other, domain)]
                slack = 2 * math.hypot(dis_i.std_error, shared.std_error)
                assert shared.mean <= dis_i.mean + slack

    def test_shared_sample_fades_with_width(self):
        config = small_config(n=64, d=32, N=2048, trials=20, n_test=200)
        dis_ss = estimate_disagreement(config, "SS", "t")
        dis_i = estimate_disagreement(config, "I", "t")
        assert dis_ss.mean - 3 * dis_ss.std_error <= 0.1 * dis_i.mean

    def test_per_kind_matches_suite_streams(self):
        config = small_config(trials=8)
        suite = estimate_suite(config)
        assert estimate_disagreement(config, "I", "t") == suite[("dis_I", "t")]
        assert estimate_disagreement(config, "SS", "s") == suite[("dis_SS", "s")]
        assert estimate_disagreement(config, "SW", "t") == suite[("dis_SW", "t")]
        assert estimate_risk(config, "s") == suite[("risk", "s")]

    def test_thread_count_cannot_change_results(self):
        config = small_config(trials=12)
        lone = estimate_suite(config, threads=1)
        pooled = estimate_suite(config, threads=2)
        assert lone == pooled

    def test_same_seed_same_estimates(self):
        a = estimate_disagreement(small_config(trials=6), "SS", "t")
        b = estimate_disagreement(small_config(trials=6), "SS", "t")
        assert a == b

    def test_centering_toggle_is_statistically_invisible(self):
        plain = estimate_suite(small_config(trials=25))
        centered = estimate_suite(small_config(trials=25, center_features=True))
        for key in plain:
            gap = abs(plain[key].mean - centered[key].mean)
            slack = 3 * math.hypot(plain[key].std_error, centered[key].std_error)
            assert gap <= slack, (key, gap, slack)

    def test_theory_tracks_estimates_at_moderate_size(self):
        measure = SpectralMeasure.from_pairs([(1.5, 5.0, 0.5), (1.0, 1.0, 0.5)])
        profile = relu_profile(measure)
        d, n, N = 128, 256, 512
        params = RegimeParams(phi=d / n, psi=d / N, gamma=0.01, sigma_eps2=0.25)
        report = theory_report(measure, profile, params)
        config = small_config(d=d, n=n, N=N, trials=30, n_test=300)
        suite = estimate_suite(config)
        for quantity in ("dis_I", "dis_SS", "dis_SW", "risk"):
            for domain in ("s", "t"):
                theory = getattr(report.domain(domain), quantity)
                est = suite[(quantity, domain)]
                # moderate d leaves a visible finite-size bias; allow 10%
                assert abs(theory - est.mean) <= max(4 * est.std_error, 0.10 * theory)

    def test_well_conditioned_regression_has_tiny_risk(self):
        # plenty of samples and features with a whisper of ridge recovers
        # the signal almost exactly
        d = 12
        config = SimulationConfig(
            n=20 * d, d=d, N=25 * d, gamma=1e-6, sigma_eps2=0.0,
            sigma_s=np.ones(d), sigma_t=np.ones(d),
            activation="identity", trials=5, n_test=300, master_seed=3,
        )
        risk = estimate_risk(config, "s")
        assert risk.mean <= 0.05 * config.m_s

    def test_quadrature_profile_tracks_simulation(self):
        # tanh has distinct rho per domain (scales differ), so this guards
        # the cross-domain wiring that relu cannot distinguish
        measure = SpectralMeasure.from_pairs([(1.5, 5.0, 0.5), (1.0, 1.0, 0.5)])
        from dislab import activation_constants, moments

        prof = activation_constants("tanh", *moments(measure))
        assert prof.rho_s != prof.rho_t
        d, n, N = 128, 256, 512
        params = RegimeParams(phi=d / n, psi=d / N, gamma=0.01, sigma_eps2=0.25)
        report = theory_report(measure, prof, params)
        config = small_config(d=d, n=n, N=N, activation="tanh",
                              trials=20, n_test=250, master_seed=13)
        suite = estimate_suite(config)
        for quantity in ("dis_I", "dis_SS", "dis_SW", "risk"):
            for domain in ("s", "t"):
                theory = getattr(report.domain(domain), quantity)
                est = suite[(quantity, domain)]
                assert abs(theory - est.mean) <= max(4 * est.std_error, 0.10 * theory)

    def test_risk_connects_to_refit_variance(self):
        # prediction variance across refits at a fixed signal is half the
        # independent disagreement; estimate both from the same ensemble
        config = small_config(n=64, d=32, N=64, trials=40, n_test=150)
        dis_i = estimate_disagreement(config, "I", "t")
        refits = 8
        values = []
        for trial in range(config.trials):
            beta = trial_rng(config.master_seed, trial, "beta").standard_normal(config.d)
            preds = []
            for refit in range(refits):
                rng = np.random.default_rng((config.master_seed, trial, 1000 + refit))
                X, Y = generate_dataset(config, beta, rng)
                W = rng.standard_normal((config.N, config.d))
                model = fit(config, W, X, Y)
                X_test = trial_rng(config.master_seed, trial, "test").standard_normal(
                    (config.d, config.n_test)
                )
                X_test = config.sqrt_cov("t")[:, None] * X_test
                preds.append(model.predict(X_test, domain="t"))
            stack = np.stack(preds)
            values.append(float(np.mean(np.var(stack, axis=0, ddof=1))))
        refit_var = float(np.mean(values))
        refit_se = float(np.std(values, ddof=1) / math.sqrt(len(values)))
        gap = abs(dis_i.mean - 2 * refit_var)
        assert gap <= 3 * math.hypot(dis_i.std_error, 2 * refit_se)


class TestGaussianEquivalent:
    def test_identity_activation_is_its_own_equivalent(self):
        d = 16
        config = SimulationConfig(
            n=24, d=d, N=32, gamma=0.01, sigma_eps2=0.0,
            sigma_s=np.ones(d), sigma_t=np.ones(d),
            activation="identity", trials=1,
        )
        rng = np.random.default_rng(2)
        W = rng.standard_normal((32, d))
        X = rng.standard_normal((d, 24))
        equiv = gaussian_equivalent_features(config, W, X, np.random.default_rng(3))
        np.testing.assert_array_equal(equiv, W @ X / math.sqrt(d))

    def test_entrywise_moments_match_activation(self):
        measure = SpectralMeasure.from_pairs([(1.5, 5.0, 0.5), (1.0, 1.0, 0.5)])
        d = 512
        diag_s, diag_t = covariance_from_measure(measure, d)
        config = SimulationConfig(
            n=200, d=d, N=500, gamma=0.01, sigma_eps2=0.0,
            sigma_s=diag_s, sigma_t=diag_t, activation="relu", trials=1,
        )
        rng = np.random.default_rng(11)
        W = rng.standard_normal((500, d))
        X = config.sqrt_cov("s")[:, None] * rng.standard_normal((d, 200))
        equiv = gaussian_equivalent_features(config, W, X, rng)
        flat = equiv.ravel()
        prof = config.profile
        want_var = prof.rho_s * (config.m_s + prof.omega_s)
        n_entries = flat.size
        assert abs(flat.mean()) <= 3 * math.sqrt(want_var / n_entries) * 3
        # entries are dependent through W and X; allow a generous factor
        assert abs(flat.var() - want_var) <= 0.05 * want_var

    def test_disagreement_is_invariant_to_the_substitution(self):
        plain = estimate_disagreement(small_config(trials=25), "SS", "t")
        noisy = estimate_disagreement(
            small_config(trials=25, use_gaussian_equivalent=True), "SS", "t"
        )
        gap = abs(plain.mean - noisy.mean)
        assert gap <= 3 * math.hypot(plain.std_error, noisy.std_error)


class TestCovarianceRealization:
    def test_counts_add_up_and_remainder_goes_to_heaviest(self):
        measure = SpectralMeasure.from_pairs([(2.0, 1.0, 0.3), (1.0, 3.0, 0.7)])
        diag_s, diag_t = covariance_from_measure(measure, 11)
        assert len(diag_s) == 11
        assert int(np.sum(diag_s == 2.0)) == 3   # floor(0.3 * 11)
        assert int(np.sum(diag_s == 1.0)) == 8   # remainder lands here
        assert int(np.sum(diag_t == 3.0)) == 8

    def test_even_split(self):
        measure = SpectralMeasure.from_pairs([(1.5, 5.0, 0.5), (1.0, 1.0, 0.5)])
        diag_s, _ = covariance_from_measure(measure, 512)
        assert int(np.sum(diag_s == 1.5)) == 256


class TestEstimatorApi:
    def test_fit_predict_and_params_round_trip(self):
        from sklearn.base import clone

        from dislab import RandomFeaturesRidge

        rng = np.random.default_rng(31)
        X = rng.standard_normal((60, 8))
        beta = rng.standard_normal(8)
        y = X @ beta / math.sqrt(8)
        est = RandomFeaturesRidge(n_features=120, gamma=0.0, random_state=0)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()
        est.fit(X, y)
        preds = est.predict(X)
        assert preds.shape == (60,)
        assert np.max(np.abs(preds - y)) <= 1e-6  # interpolation when overfeatured

    def test_predict_requires_fit_and_matching_width(self):
        from sklearn.exceptions import NotFittedError

        from dislab import RandomFeaturesRidge

        est = RandomFeaturesRidge(n_features=16)
        with pytest.raises(NotFittedError):
            est.predict(np.zeros((3, 4)))
        rng = np.random.default_rng(1)
        est.fit(rng.standard_normal((20, 4)), rng.standard_normal(20))
        with pytest.raises(ValueError, match="features"):
            est.predict(np.zeros((3, 5)))

    def test_seeded_layers_reproduce(self):
        from dislab import RandomFeaturesRidge

        rng = np.random.default_rng(2)
        X = rng.standard_normal((30, 6))
        y = rng.standard_normal(30)
        a = RandomFeaturesRidge(n_features=40, gamma=0.1, random_state=7).fit(X, y)
        b = RandomFeaturesRidge(n_features=40, gamma=0.1, random_state=7).fit(X, y)
        np.testing.assert_array_equal(a.predict(X), b.predict(X))
