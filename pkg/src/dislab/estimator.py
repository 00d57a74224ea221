"""Scikit-learn estimator wrapper around the random-features regressor."""

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .activation import gaussian_moments, get_activation


class RandomFeaturesRidge(BaseEstimator, RegressorMixin):
    """Ridge regression on a fixed random feature map.

    The first layer is an ``n_features x d`` matrix of standard normal
    weights frozen at fit time; only the linear readout is trained, by
    ridge regression when ``gamma > 0`` and by minimum-norm least squares
    when ``gamma == 0``.

    Parameters
    ----------
    n_features : width of the random layer.
    gamma : ridge penalty on the readout; 0 selects the min-norm solution.
    activation : name ('relu', 'identity', 'tanh') or a vectorized callable.
    center : subtract the Gaussian mean of the activation from features,
        using the mean squared norm of the training rows as the scale.
    random_state : seed for the random layer.
    """

    def __init__(self, n_features=512, gamma=0.0, activation="relu",
                 center=False, random_state=None):
        self.n_features = n_features
        self.gamma = gamma
        self.activation = activation
        self.center = center
        self.random_state = random_state

    def _features(self, X):
        raw = self._activation_(self.weights_ @ X.T / math.sqrt(self.n_features_in_))
        if self.center:
            raw = raw - self.feature_mean_
        return raw

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if self.n_features < 1:
            raise ValueError("n_features must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        self._activation_ = get_activation(self.activation)
        n, d = X.shape
        self.n_features_in_ = d
        rng = np.random.default_rng(self.random_state)
        self.weights_ = rng.standard_normal((self.n_features, d))
        if self.center:
            scale = float(np.mean(np.sum(X * X, axis=1)) / d)
            self.feature_mean_ = gaussian_moments(self._activation_, scale)[0] \
                if scale > 0 else 0.0
        F = self._features(X)
        K = F.T @ F / self.n_features
        if self.gamma > 0:
            coef = np.linalg.solve(K + self.gamma * np.eye(n), y)
        else:
            eigvals, eigvecs = np.linalg.eigh(K)
            cutoff = max(n, self.n_features) * np.finfo(float).eps \
                * max(eigvals.max(), 0.0)
            inv = np.zeros_like(eigvals)
            keep = eigvals > cutoff
            inv[keep] = 1.0 / eigvals[keep]
            coef = eigvecs @ (inv * (eigvecs.T @ y))
        self.dual_coef_ = coef
        self._feature_sum_ = F @ coef
        return self

    def predict(self, X):
        check_is_fitted(self, "dual_coef_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, estimator was fit with "
                f"{self.n_features_in_}"
            )
        return self._feature_sum_ @ self._features(X) / self.n_features
