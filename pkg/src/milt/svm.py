"""Linear support vector machines trained by sequential two-variable updates.

C-SVC solves ``min 1/2 a'Qa - e'a`` subject to ``y'a = 0, 0 <= a <= C`` with
Q_ts = y_t y_s <x_t, x_s>. nu-SVC solves ``min 1/2 a'Qa`` subject to
``y'a = 0, e'a = nu*n, 0 <= a <= 1``; because both equality constraints pin
the per-class alpha sums, its working pairs stay inside one class. Pair
selection is the first-order maximal-violating rule with first-index
tie-breaks, so training is deterministic. Only the linear kernel exists here.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "SvmConfig",
    "LinearModel",
    "MulticlassModel",
    "train_binary",
    "train_multiclass",
    "kkt_gap",
]

_TAU = 1e-12  # curvature floor for degenerate directions


@dataclass(frozen=True)
class SvmConfig:
    variant: str = "c"  # "c" | "nu"
    c: float = 1.0
    nu: float = 0.6
    tolerance: float = 1e-3
    max_passes: int = 100_000

    def __post_init__(self):
        if self.variant not in ("c", "nu"):
            raise ValueError(f"variant must be 'c' or 'nu', got {self.variant!r}")
        if self.c <= 0:
            raise ValueError("c must be > 0")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must be in (0, 1]")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")


@dataclass
class LinearModel:
    """Trained linear decision function ``<weights, x> + bias``."""

    weights: np.ndarray
    bias: float
    support_indices: np.ndarray
    classes: tuple[int, int]  # (negative id, positive id)
    variant: str
    params: dict = field(default_factory=dict)
    alphas: np.ndarray | None = None  # raw dual variables, kept for diagnostics

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights.shape[0]:
            raise ValueError(f"expected dimension {self.weights.shape[0]}, got {X.shape[1]}")
        return X @ self.weights + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        # decision >= 0 maps to the positive class (documented tie rule)
        d = self.decision(X)
        neg, pos = self.classes
        return np.where(d >= 0.0, pos, neg)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "params": self.params,
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "classes": list(self.classes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(
            weights=np.asarray(d["weights"], dtype=float),
            bias=float(d["bias"]),
            support_indices=np.asarray(d.get("support_indices", []), dtype=int),
            classes=tuple(d["classes"]),
            variant=d["variant"],
            params=dict(d.get("params", {})),
        )


class MulticlassModel:
    """One-vs-all ensemble; prediction is the argmax decision value."""

    def __init__(self, models: list[LinearModel], class_ids: list[int]):
        if len(models) != len(class_ids):
            raise ValueError("one model per class id required")
        self.models = models
        self.class_ids = list(class_ids)

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([m.decision(X) for m in self.models])

    def predict(self, X: np.ndarray) -> np.ndarray:
        scores = self.decision(X)
        # np.argmax takes the first maximum -> lowest class id wins ties
        order = np.argsort(self.class_ids, kind="stable")
        sorted_scores = scores[:, order]
        winners = np.argmax(sorted_scores, axis=1)
        ids = np.asarray(self.class_ids)[order]
        return ids[winners]

    def to_dict(self) -> dict:
        return {
            "classes": self.class_ids,
            "models": [m.to_dict() for m in self.models],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MulticlassModel":
        return cls([LinearModel.from_dict(m) for m in d["models"]], list(d["classes"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "MulticlassModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) with one label per row")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature value")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1/+1")
    if len(np.unique(y)) < 2:
        raise ValueError("training data contains a single class")
    return X, y


def _solve_pair(alpha, G, Q, i, j, same_class, ub_i, ub_j):
    """Optimal step along the feasible two-variable direction, clipped."""
    if same_class:
        # d = e_i - e_j keeps both constraint types intact
        g = G[i] - G[j]
        quad = max(Q[i, i] + Q[j, j] - 2.0 * Q[i, j], _TAU)
        lo = max(-alpha[i], alpha[j] - ub_j)
        hi = min(ub_i - alpha[i], alpha[j])
    else:
        # d = e_i + e_j (opposite labels cancel inside y'a = 0)
        g = G[i] + G[j]
        quad = max(Q[i, i] + Q[j, j] + 2.0 * Q[i, j], _TAU)
        lo = max(-alpha[i], -alpha[j])
        hi = min(ub_i - alpha[i], ub_j - alpha[j])
    t = np.clip(-g / quad, lo, hi)
    return t


def _masked_argmax(values, mask):
    v = np.where(mask, values, -np.inf)
    return int(np.argmax(v)), float(np.max(v))


def _masked_argmin(values, mask):
    v = np.where(mask, values, np.inf)
    return int(np.argmin(v)), float(np.min(v))


def _smo_c(K, y, C, tol, max_passes):
    n = K.shape[0]
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of 1/2 a'Qa - e'a at a = 0
    it = 0
    while it < max_passes:
        it += 1
        neg_yG = -y * G
        up = ((y > 0) & (alpha < C - _TAU)) | ((y < 0) & (alpha > _TAU))
        low = ((y < 0) & (alpha < C - _TAU)) | ((y > 0) & (alpha > _TAU))
        i, m_val = _masked_argmax(neg_yG, up)
        j, M_val = _masked_argmin(neg_yG, low)
        if m_val - M_val <= tol:
            break
        t = _solve_pair(alpha, G, Q, i, j, y[i] == y[j], C, C)
        if t == 0.0:
            break  # boundary-locked pair; gap is within numerical slack
        if y[i] == y[j]:
            da_i, da_j = t, -t
        else:
            da_i, da_j = t, t
        alpha[i] += da_i
        alpha[j] += da_j
        G += Q[:, i] * da_i + Q[:, j] * da_j
    else:
        warnings.warn("max_passes reached before the KKT gap closed", RuntimeWarning)
    return alpha, G


def _smo_nu(K, y, nu, tol, max_passes):
    n = K.shape[0]
    Q = (y[:, None] * y[None, :]) * K
    # feasible start: per-class alpha sums of nu*n/2, each alpha <= 1
    alpha = np.zeros(n)
    for cls in (1.0, -1.0):
        budget = nu * n / 2.0
        for t in np.flatnonzero(y == cls):
            take = min(1.0, budget)
            alpha[t] = take
            budget -= take
            if budget <= 0:
                break
    G = Q @ alpha  # gradient of 1/2 a'Qa
    it = 0
    while it < max_passes:
        it += 1
        best = None
        for cls in (1.0, -1.0):
            in_cls = y == cls
            up = in_cls & (alpha < 1.0 - _TAU)
            low = in_cls & (alpha > _TAU)
            if not up.any() or not low.any():
                continue
            # within a class, moving along e_i - e_j needs G_i < G_j
            i, gi = _masked_argmin(G, up)
            j, gj = _masked_argmax(G, low)
            viol = gj - gi
            if best is None or viol > best[0]:
                best = (viol, i, j)
        if best is None or best[0] <= tol:
            break
        _, i, j = best
        t = _solve_pair(alpha, G, Q, i, j, True, 1.0, 1.0)
        if t == 0.0:
            break
        alpha[i] += t
        alpha[j] -= t
        G += Q[:, i] * t - Q[:, j] * t
    else:
        warnings.warn("max_passes reached before the KKT gap closed", RuntimeWarning)
    return alpha, G


def _class_rho(G, y, alpha, cls):
    """Stationarity value of (Qa)_t on class ``cls``; midpoint if no free SVs."""
    in_cls = y == cls
    free = in_cls & (alpha > _TAU) & (alpha < 1.0 - _TAU)
    if free.any():
        return float(G[free].mean())
    upper = in_cls & (alpha >= 1.0 - _TAU)
    lower = in_cls & (alpha <= _TAU)
    hi = float(G[upper].max()) if upper.any() else -np.inf
    lo = float(G[lower].min()) if lower.any() else np.inf
    if np.isinf(hi):
        return lo
    if np.isinf(lo):
        return hi
    return 0.5 * (hi + lo)


def train_binary(X, y, cfg: SvmConfig | None = None, classes: tuple[int, int] = (0, 1)) -> LinearModel:
    """Train one linear SVM on -1/+1 labels.

    ``classes`` records which original ids the -1/+1 sides stand for. Raises
    on single-class input and on an infeasible nu.
    """
    cfg = cfg or SvmConfig()
    X, y = _check_xy(X, y)
    n = X.shape[0]
    K = X @ X.T
    if cfg.variant == "c":
        alpha, G = _smo_c(K, y, cfg.c, cfg.tolerance, cfg.max_passes)
        ub = cfg.c
        neg_yG = -y * G
        free = (alpha > _TAU * ub) & (alpha < ub * (1.0 - 1e-9))
        if free.any():
            bias = float(neg_yG[free].mean())
        else:
            up = ((y > 0) & (alpha < ub - _TAU)) | ((y < 0) & (alpha > _TAU))
            low = ((y < 0) & (alpha < ub - _TAU)) | ((y > 0) & (alpha > _TAU))
            m_val = np.max(np.where(up, neg_yG, -np.inf))
            M_val = np.min(np.where(low, neg_yG, np.inf))
            bias = float(0.5 * (m_val + M_val))
        weights = X.T @ (alpha * y)
        params = {"c": cfg.c, "tolerance": cfg.tolerance}
    else:
        counts = {1.0: int(np.sum(y > 0)), -1.0: int(np.sum(y < 0))}
        if cfg.nu * n / 2.0 > min(counts.values()) + 1e-12:
            raise ValueError(
                f"nu={cfg.nu} infeasible: requires nu <= 2*min(n+,n-)/n = "
                f"{2 * min(counts.values()) / n:.4f}"
            )
        alpha, G = _smo_nu(K, y, cfg.nu, cfg.tolerance, cfg.max_passes)
        r_pos = _class_rho(G, y, alpha, 1.0)
        r_neg = _class_rho(G, y, alpha, -1.0)
        rho = 0.5 * (r_pos + r_neg)
        bias_raw = -0.5 * (r_pos - r_neg)
        weights_raw = X.T @ (alpha * y)
        scale = math.sqrt(max(float(np.mean(np.diag(K))), 1.0))
        if rho <= 1e-8 * scale:
            # class overlap exceeds what this nu can absorb; the dual optimum
            # is the trivial zero-margin solution
            raise ValueError(
                f"nu={cfg.nu} too small for this data: degenerate zero-margin solution"
            )
        weights = weights_raw / rho
        bias = float(bias_raw / rho)
        ub = 1.0
        params = {"nu": cfg.nu, "tolerance": cfg.tolerance}
    support = np.flatnonzero(alpha > 1e-8 * ub)
    return LinearModel(
        weights=weights,
        bias=float(bias),
        support_indices=support,
        classes=classes,
        variant=cfg.variant,
        params=params,
        alphas=alpha,
    )


def train_multiclass(X, labels, cfg: SvmConfig | None = None) -> MulticlassModel:
    """One-vs-all ensemble over dense integer labels (>= 2 classes)."""
    cfg = cfg or SvmConfig()
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels).astype(int).ravel()
    class_ids = sorted(set(labels.tolist()))
    if len(class_ids) < 2:
        raise ValueError("need at least two classes")
    models = []
    for c in class_ids:
        y = np.where(labels == c, 1.0, -1.0)
        models.append(train_binary(X, y, cfg, classes=(-1, c)))
    return MulticlassModel(models, class_ids)


def kkt_gap(model: LinearModel, X, y) -> float:
    """Recomputed first-order optimality gap of the stored dual variables."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if model.alphas is None:
        raise ValueError("model has no stored dual variables")
    K = X @ X.T
    Q = (y[:, None] * y[None, :]) * K
    alpha = model.alphas
    if model.variant == "c":
        G = Q @ alpha - 1.0
        C = model.params["c"]
        neg_yG = -y * G
        up = ((y > 0) & (alpha < C - _TAU)) | ((y < 0) & (alpha > _TAU))
        low = ((y < 0) & (alpha < C - _TAU)) | ((y > 0) & (alpha > _TAU))
        m_val = np.max(np.where(up, neg_yG, -np.inf))
        M_val = np.min(np.where(low, neg_yG, np.inf))
        return float(m_val - M_val)
    G = Q @ alpha
    worst = 0.0
    for cls in (1.0, -1.0):
        in_cls = y == cls
        up = in_cls & (alpha < 1.0 - _TAU)
        low = in_cls & (alpha > _TAU)
        if up.any() and low.any():
            worst = max(worst, float(np.max(G[low]) - np.min(G[up])))
    return worst
