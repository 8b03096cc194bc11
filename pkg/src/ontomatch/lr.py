"""Logistic regression matcher over the 32 engineered features.

Trained by deterministic full-batch gradient descent with backtracking
line search on mean BCE plus an L2 penalty on the weights (bias excluded),
from zero initialization.
"""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import ValidationError
from .features import N_FEATURES

ARMIJO_C = 1e-4
BACKTRACK_RATIO = 0.5
MIN_STEP = 1e-12


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _loss_and_grad(w, b, X, y, l2_lambda):
    z = X @ w + b
    # log(1 + exp(-z)) and friends via the stable softplus identity.
    softplus = np.logaddexp(0.0, z)
    loss = float(np.mean(softplus - y * z) + 0.5 * l2_lambda * w @ w)
    p = _sigmoid(z)
    err = (p - y) / len(y)
    grad_w = X.T @ err + l2_lambda * w
    grad_b = float(err.sum())
    return loss, grad_w, grad_b


class LogisticRegressionMatcher(BaseEstimator, ClassifierMixin):
    """Feature-based pair classifier with a scikit-learn estimator surface."""

    def __init__(self, l2_lambda: float = 1e-4, tol: float = 1e-6, max_iter: int = 10000):
        self.l2_lambda = l2_lambda
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X = self._check_features(X)
        y = np.asarray(y, dtype=np.float64)
        if X.shape[0] != y.shape[0]:
            raise ValidationError("X and y length mismatch")
        if not np.isin(y, (0.0, 1.0)).all():
            raise ValidationError("labels must be 0 or 1")
        if y.min() == y.max():
            raise ValidationError("training data must contain both classes")

        w = np.zeros(X.shape[1], dtype=np.float64)
        b = 0.0
        loss, grad_w, grad_b = _loss_and_grad(w, b, X, y, self.l2_lambda)
        self.loss_history_ = [loss]
        step = 1.0
        for _ in range(self.max_iter):
            grad_inf = max(np.abs(grad_w).max(), abs(grad_b))
            if grad_inf < self.tol:
                break
            grad_sq = float(grad_w @ grad_w + grad_b * grad_b)
            # Backtracking line search (Armijo), warm-started from the last
            # accepted step and allowed to grow back.
            step = min(step * 2.0, 1.0)
            while step > MIN_STEP:
                w_try = w - step * grad_w
                b_try = b - step * grad_b
                loss_try, grad_w_try, grad_b_try = _loss_and_grad(
                    w_try, b_try, X, y, self.l2_lambda
                )
                if loss_try <= loss - ARMIJO_C * step * grad_sq:
                    break
                step *= BACKTRACK_RATIO
            w, b = w_try, b_try
            loss, grad_w, grad_b = loss_try, grad_w_try, grad_b_try
            self.loss_history_.append(loss)

        self.weights_ = w
        self.bias_ = b
        self.classes_ = np.array([0, 1])
        self.is_fitted_ = True
        return self

    def decision_function(self, X) -> np.ndarray:
        self._require_fitted()
        X = self._check_features(X)
        return X @ self.weights_ + self.bias_

    def predict_proba(self, X) -> np.ndarray:
        p = _sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0.0).astype(np.int64)

    def _require_fitted(self):
        if not getattr(self, "is_fitted_", False):
            raise ValidationError("LogisticRegressionMatcher is not fitted")

    @staticmethod
    def _check_features(X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != N_FEATURES:
            raise ValidationError(
                f"feature matrix must be (n, {N_FEATURES}), got {X.shape}"
            )
        if not np.all(np.isfinite(X)):
            raise ValidationError("feature matrix contains non-finite values")
        return X

    # -- serialization -----------------------------------------------------

    def save(self, path) -> None:
        self._require_fitted()
        payload = {
            "weights": self.weights_.tolist(),
            "bias": self.bias_,
            "l2_lambda": self.l2_lambda,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "LogisticRegressionMatcher":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        weights = np.asarray(payload["weights"], dtype=np.float64)
        if weights.shape != (N_FEATURES,):
            raise ValidationError(f"expected {N_FEATURES} weights, got {weights.shape}")
        if not np.all(np.isfinite(weights)) or not np.isfinite(payload["bias"]):
            raise ValidationError("model parameters must be finite")
        model = cls(l2_lambda=payload.get("l2_lambda", 1e-4))
        model.weights_ = weights
        model.bias_ = float(payload["bias"])
        model.classes_ = np.array([0, 1])
        model.is_fitted_ = True
        return model
