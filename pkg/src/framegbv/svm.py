"""Linear L1-loss SVM trained in the dual.

Solves::

    min_{w,b}  1/2 ||w||^2 + C * sum_i c_i * max(0, 1 - y_i (w.x_i + b))

The bias is unregularised, so the dual carries the constraint
``sum_i alpha_i y_i = 0`` and updates move two coordinates at a time
(second-order working-set selection).  Training stops when the maximal
KKT violation ``m(alpha) - M(alpha)`` drops below ``tol``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonFiniteError, ShapeError, SingleClassError

_TAU = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    class_weight: str = "balanced"
    tol: float = 1e-4
    max_epochs: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.C > 0:
            raise ConfigError("C must be > 0")
        if not self.tol > 0:
            raise ConfigError("tol must be > 0")
        if self.class_weight not in ("none", "balanced"):
            raise ConfigError("class_weight must be 'none' or 'balanced'")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")


@dataclass(frozen=True)
class SvmModel:
    w: np.ndarray
    b: float
    alpha: np.ndarray
    sample_weight: np.ndarray
    config: TrainConfig
    n_iter: int
    converged: bool

    @property
    def n_features(self):
        return len(self.w)


def class_weights(y, mode):
    y = np.asarray(y)
    if mode == "none":
        return np.ones(len(y))
    n = len(y)
    n_pos = np.sum(y == 1)
    n_neg = n - n_pos
    return np.where(y == 1, n / (2.0 * n_pos), n / (2.0 * n_neg))


def primal_objective(w, b, X, y, C, sample_weight=None):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    cw = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight)
    margins = y * (X @ w + b)
    return 0.5 * float(w @ w) + C * float(np.sum(cw * np.maximum(0.0, 1.0 - margins)))


def dual_objective(alpha, X, y):
    v = np.asarray(X).T @ (alpha * y)
    return float(np.sum(alpha) - 0.5 * v @ v)


def _check_xy(X, y):
    X = np.asarray(X.toarray() if hasattr(X, "toarray") else X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ShapeError(f"X has shape {X.shape}, y has length {len(y)}")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    if not np.all(np.isfinite(X)):
        raise NonFiniteError("non-finite entries in training matrix")
    if len(np.unique(y)) < 2:
        raise SingleClassError("training labels contain a single class")
    return X, y.astype(np.float64)


def svm_train(X, y, cfg=None, callback=None):
    """Fit a linear SVM.

    ``callback(epoch, alpha)`` is invoked after every ``n`` pair updates
    (one "epoch") with a copy of the dual variables in the caller's order.
    """
    cfg = cfg or TrainConfig()
    X, y = _check_xy(X, y)
    n = len(y)
    cw = class_weights(y, cfg.class_weight)

    # the seeded permutation fixes tie-breaking in working-set selection
    perm = np.random.default_rng(cfg.seed).permutation(n)
    Xp, yp = X[perm], y[perm]
    upper = cfg.C * cw[perm]
    K = Xp @ Xp.T
    diag = np.diag(K).copy()

    alpha = np.zeros(n)
    grad = -np.ones(n)
    max_iter = cfg.max_epochs * n
    converged = False
    it = 0
    pos = yp > 0
    while it < max_iter:
        at_upper = alpha >= upper
        at_lower = alpha <= 0
        in_up = np.where(pos, ~at_upper, ~at_lower)
        in_low = np.where(pos, ~at_lower, ~at_upper)
        score = -yp * grad
        if not in_up.any() or not in_low.any():
            converged = True
            break
        up_scores = np.where(in_up, score, -np.inf)
        i = int(np.argmax(up_scores))
        m_val = up_scores[i]
        low_scores = np.where(in_low, score, np.inf)
        if m_val - low_scores.min() < cfg.tol:
            converged = True
            break

        b_it = m_val - score
        cand = in_low & (b_it > 0)
        a_it = diag[i] + diag - 2.0 * K[i]
        a_it = np.where(a_it > 0, a_it, _TAU)
        gain = np.where(cand, -(b_it * b_it) / a_it, np.inf)
        j = int(np.argmin(gain))

        yi, yj = yp[i], yp[j]
        Ci, Cj = upper[i], upper[j]
        old_i, old_j = alpha[i], alpha[j]
        quad = diag[i] + diag[j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = _TAU
        if yi != yj:
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > Ci - Cj:
                if alpha[i] > Ci:
                    alpha[i] = Ci
                    alpha[j] = Ci - diff
            elif alpha[j] > Cj:
                alpha[j] = Cj
                alpha[i] = Cj + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > Ci:
                if alpha[i] > Ci:
                    alpha[i] = Ci
                    alpha[j] = total - Ci
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > Cj:
                if alpha[j] > Cj:
                    alpha[j] = Cj
                    alpha[i] = total - Cj
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total

        d_i = alpha[i] - old_i
        d_j = alpha[j] - old_j
        grad += yp * (K[:, i] * (yi * d_i) + K[:, j] * (yj * d_j))
        it += 1
        if callback is not None and it % n == 0:
            out = np.empty(n)
            out[perm] = alpha
            callback(it // n, out)

    if not converged:
        warnings.warn(f"SVM did not reach tol={cfg.tol} within {cfg.max_epochs} epochs",
                      RuntimeWarning, stacklevel=2)

    b = _bias(alpha, grad, yp, upper)
    w = Xp.T @ (alpha * yp)
    alpha_out = np.empty(n)
    alpha_out[perm] = alpha
    return SvmModel(w=w, b=b, alpha=alpha_out, sample_weight=cw, config=cfg,
                    n_iter=it, converged=converged)


def _bias(alpha, grad, y, upper):
    yg = y * grad
    free = (alpha > 0) & (alpha < upper)
    if free.any():
        rho = float(np.mean(yg[free]))
    else:
        at_upper = alpha >= upper
        # rho must satisfy the KKT bounds of every bounded variable
        ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (~at_upper & (y < 0))
        ub = yg[ub_mask].min() if ub_mask.any() else np.inf
        lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = 0.5 * (ub + lb)
        else:
            rho = float(ub if np.isfinite(ub) else lb if np.isfinite(lb) else 0.0)
    return -rho


def svm_decision(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.n_features:
        raise ShapeError(f"expected {model.n_features} features, got {x.shape[-1]}")
    return x @ model.w + model.b


def svm_predict(model, x):
    """Sign of the decision value; ties go to the positive class."""
    return np.where(svm_decision(model, x) >= 0, 1, -1)
