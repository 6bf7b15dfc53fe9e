"""IPC prediction from IPC-scaled, z-scored hardware-event counts.

The model is

    IPC_p = sum_i beta_i * z(N_i * IPC_s) + sigma

where ``N_i`` are window-total event counts, ``IPC_s`` the sampled IPC of
the same window, ``z`` the zero score against the training set and
``sigma`` the fitted intercept. Coefficients come from ordinary least
squares with backward elimination on Student-t p-values.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    DomainError,
    IncompatibleFeatureError,
    InsufficientDataError,
    NvmLensError,
)

EVENT_NAMES = ("p0", "p1", "p2", "p3", "p4", "p5")
EVENT_ROLES = {
    "p0": "instructions retired",
    "p1": "cycles active",
    "p2": "cycles stalled on resources",
    "p3": "cycles waiting on outstanding offcore requests",
    "p4": "reads issued to memory controllers",
    "p5": "writes issued to memory controllers",
}
MODEL_FORMAT = "nvmlens-model"
MODEL_VERSION = 1


# -- Student-t tail ----------------------------------------------------------


def _betacf(a, b, x, tol=1e-15, max_iter=500):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc_reg(a, b, x):
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    lnfront = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
               + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(lnfront) * _betacf(a, b, x) / a
    return 1.0 - math.exp(lnfront) * _betacf(b, a, 1.0 - x) / b


def t_pvalue(t, dof):
    """Two-sided Student-t tail probability P(|T| >= |t|)."""
    if dof < 1:
        raise DomainError("dof must be >= 1")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    return betainc_reg(dof / 2.0, 0.5, dof / (dof + t * t))


# -- features ----------------------------------------------------------------


@dataclass(frozen=True)
class FeatureVector:
    raw_counts: tuple
    ipc_s: float
    normalized: tuple | None = None

    @property
    def scaled(self):
        return tuple(c * self.ipc_s for c in self.raw_counts)


def extract_features(core_samples, window=None):
    """Window-total event counts and window IPC from a list of ``CoreSample``.

    ``window`` is an inclusive ``(start_ms, end_ms)`` filter on sample
    timestamps; ``None`` takes every sample.
    """
    if window is not None:
        lo, hi = window
        core_samples = [c for c in core_samples if lo <= c.timestamp <= hi]
    if not core_samples:
        raise InsufficientDataError("no core samples in window")
    totals = [sum(c.counts[i] for c in core_samples) for i in range(6)]
    if totals[1] == 0:
        raise DomainError("cycles-active total is zero; IPC undefined")
    return FeatureVector(tuple(float(v) for v in totals), totals[0] / totals[1])


def windowed_features(core_samples, window_len=1):
    """Features for consecutive, non-overlapping runs of ``window_len`` samples."""
    core_samples = list(core_samples)
    out = []
    for i in range(0, len(core_samples) - window_len + 1, window_len):
        out.append(extract_features(core_samples[i:i + window_len]))
    return out


@dataclass(frozen=True)
class NormalizationParams:
    mean: tuple
    std: tuple

    @property
    def constant(self):
        return tuple(s == 0 for s in self.std)

    def as_dict(self):
        return {"mean": list(self.mean), "std": list(self.std), "constant": list(self.constant)}


def fit_normalization(features):
    """Population (1/n) mean and standard deviation of the scaled features."""
    if len(features) < 2:
        raise InsufficientDataError("need at least 2 feature vectors to normalize")
    m = np.array([f.scaled for f in features], dtype=float)
    mean = m.mean(axis=0)
    std = m.std(axis=0)
    # spread below float resolution of the mean is treated as exactly constant
    std[std <= 1e-12 * np.maximum(np.abs(mean), 1e-300)] = 0.0
    return NormalizationParams(tuple(mean.tolist()), tuple(std.tolist()))


def apply_normalization(params, feature):
    """Zero scores of ``feature.scaled``; constant features map to 0."""
    x = np.asarray(feature.scaled, dtype=float)
    mean = np.asarray(params.mean)
    std = np.asarray(params.std)
    z = np.zeros_like(x)
    ok = std > 0
    z[ok] = (x[ok] - mean[ok]) / std[ok]
    return z


def normalize(params, feature):
    return FeatureVector(feature.raw_counts, feature.ipc_s,
                         tuple(apply_normalization(params, feature).tolist()))


# -- regression --------------------------------------------------------------


@dataclass
class RegressionModel:
    included: list
    beta: np.ndarray
    sigma: float
    std_err: np.ndarray
    t_stat: np.ndarray
    p_value: np.ndarray
    r_squared: float
    dof: int
    rss: float
    rank_deficient: bool = False
    removed: list = field(default_factory=list)
    status: str = "ok"
    norm: NormalizationParams | None = None
    feature_names: tuple = EVENT_NAMES

    @property
    def pvalues_available(self):
        return not self.rank_deficient and bool(np.all(np.isfinite(self.p_value)))

    def predict_matrix(self, x):
        """Predictions for rows of ``x`` holding just the included columns."""
        return np.asarray(x, dtype=float) @ self.beta + self.sigma

    def as_dict(self):
        def clean(a):
            return [None if not math.isfinite(v) else float(v) for v in np.asarray(a, float)]

        out = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "target": "observed IPC (not normalized)",
            "intercept": "sigma is the fitted regression intercept",
            "feature_names": list(self.feature_names),
            "included": list(self.included),
            "beta": clean(self.beta),
            "sigma": float(self.sigma),
            "std_err": clean(self.std_err),
            "t_stat": clean(self.t_stat),
            "p_value": clean(self.p_value),
            "r_squared": float(self.r_squared),
            "dof": int(self.dof),
            "rss": float(self.rss),
            "rank_deficient": bool(self.rank_deficient),
            "removed": list(self.removed),
            "status": self.status,
        }
        if self.norm is not None:
            out["norm"] = self.norm.as_dict()
        return out


def _design(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return np.column_stack((np.ones(len(x)), x))


def ols_fit(x, y, names=None):
    """Least squares with intercept, standard errors and two-sided p-values.

    Columns are equilibrated before solving so raw counts (~1e9) and unit
    zero scores are handled alike. A rank-deficient design gets the
    minimum-norm solution with p-values set to NaN.
    """
    y = np.asarray(y, dtype=float)
    a = _design(x)
    n, k = a.shape
    p = k - 1
    names = list(names) if names is not None else [f"x{i}" for i in range(p)]
    if n <= k:
        raise InsufficientDataError(f"{n} rows cannot fit {p} features plus intercept")
    scale = np.linalg.norm(a, axis=0)
    scale[scale == 0] = 1.0
    a_s = a / scale
    coef_s, _, rank, sv = np.linalg.lstsq(a_s, y, rcond=None)
    tol = sv.max() * max(n, k) * np.finfo(float).eps
    rank = int((sv > tol).sum())
    coef = coef_s / scale
    resid = y - a @ coef
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    dof = n - k
    if rank < k:
        nan = np.full(p, np.nan)
        return RegressionModel(names, coef[1:], float(coef[0]), nan, nan.copy(), nan.copy(),
                               r2, dof, rss, rank_deficient=True)
    _, r = np.linalg.qr(a_s)
    r_inv = np.linalg.inv(r)
    cov_s = r_inv @ r_inv.T
    s2 = rss / dof
    se = np.sqrt(s2 * np.diag(cov_s)) / scale
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / se
    t = np.where((se == 0) & (coef == 0), np.nan, t)
    pv = np.array([t_pvalue(float(v), dof) for v in t[1:]])
    return RegressionModel(names, coef[1:], float(coef[0]), se[1:], t[1:], pv, r2, dof, rss)


def _independent_columns(x):
    """Indices of columns kept by a left-to-right rank scan (intercept included)."""
    keep = []
    base = np.ones((len(x), 1))
    for j in range(x.shape[1]):
        trial = np.column_stack((base, x[:, keep + [j]]))
        t = trial / np.maximum(np.linalg.norm(trial, axis=0), 1e-300)
        if np.linalg.matrix_rank(t) == trial.shape[1]:
            keep.append(j)
    return keep


def backward_eliminate(x, y, names=None, alpha=0.05):
    """Refit after dropping the least significant feature until all p <= alpha.

    Perfectly collinear columns are dropped first (later index first), then
    one feature per iteration, largest p-value first, ties to the lower
    index. At least one feature always survives. ``removed`` records the
    order as ``(name, reason)`` pairs.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    names = list(names) if names is not None else [f"x{i}" for i in range(x.shape[1])]
    active = list(range(x.shape[1]))
    removed = []
    model = ols_fit(x[:, active], y, [names[i] for i in active])
    if model.rank_deficient:
        keep = _independent_columns(x)
        if not keep:
            keep = [0]
        for j in active:
            if j not in keep:
                removed.append((names[j], "collinear"))
        active = keep
        model = ols_fit(x[:, active], y, [names[i] for i in active])
    if not model.pvalues_available:
        warnings.warn("p-values unavailable; backward elimination skipped", RuntimeWarning)
        model.removed = removed
        model.status = "pruning-skipped"
        return model
    while len(active) > 1:
        pv = model.p_value
        worst = int(np.argmax(pv))
        if not pv[worst] > alpha:
            break
        removed.append((names[active[worst]], f"p={pv[worst]:.4g}"))
        del active[worst]
        model = ols_fit(x[:, active], y, [names[i] for i in active])
    model.removed = removed
    return model


def fit_ipc_model(features, observed_ipc, alpha=0.05):
    """Normalize training features, drop constant ones, fit and prune."""
    norm = fit_normalization(features)
    z = np.array([apply_normalization(norm, f) for f in features])
    live = [i for i, c in enumerate(norm.constant) if not c]
    if not live:
        raise InsufficientDataError("every feature is constant over the training set")
    model = backward_eliminate(z[:, live], observed_ipc, [EVENT_NAMES[i] for i in live], alpha)
    model.removed = [(EVENT_NAMES[i], "constant") for i, c in enumerate(norm.constant) if c] \
        + list(model.removed)
    model.norm = norm
    return model


def predict_ipc(model, feature):
    if model.norm is None:
        raise IncompatibleFeatureError("model carries no normalization parameters")
    if len(feature.raw_counts) != len(model.feature_names):
        raise IncompatibleFeatureError(
            f"feature has {len(feature.raw_counts)} events, model expects "
            f"{len(model.feature_names)}")
    z = apply_normalization(model.norm, feature)
    idx = [model.feature_names.index(n) for n in model.included]
    for i in idx:
        if not math.isfinite(z[i]):
            raise IncompatibleFeatureError(f"event {model.feature_names[i]} is missing")
    return float(z[idx] @ model.beta + model.sigma)


def accuracy(predicted, observed):
    """1 - |predicted - observed| / observed, unclamped."""
    if not observed > 0:
        raise DomainError(f"observed IPC must be > 0, got {observed}")
    return 1.0 - abs(predicted - observed) / observed


# -- training plans ----------------------------------------------------------


class Strategy(str, Enum):
    MID_CONCURRENCY = "MidConcurrency"
    SMALL_SIZE = "SmallSize"


@dataclass(frozen=True)
class TrainingPlan:
    strategy: Strategy
    concurrency: int
    size: object = None


def make_training_plan(strategy, ht=None, sizes=None, concurrency=None):
    """Pick the single configuration that training data is collected from.

    MidConcurrency trains at round(0.75 * ht), clamped to [1, ht]. SmallSize
    trains at the smallest entry of ``sizes`` (ordered by value) at a fixed
    ``concurrency`` (default: the MidConcurrency anchor when ``ht`` is given).
    """
    strategy = Strategy(strategy)
    if strategy is Strategy.MID_CONCURRENCY:
        if ht is None or ht < 1:
            raise DomainError("hardware thread count must be >= 1")
        anchor = min(max(int(math.floor(0.75 * ht + 0.5)), 1), ht)
        return TrainingPlan(strategy, anchor)
    if not sizes:
        raise InsufficientDataError("size ladder is empty")
    if concurrency is None:
        if ht is None:
            raise DomainError("SmallSize needs a fixed concurrency or ht")
        concurrency = make_training_plan(Strategy.MID_CONCURRENCY, ht=ht).concurrency
    return TrainingPlan(strategy, int(concurrency), min(sizes))


# -- model files -------------------------------------------------------------


def save_model(model, path):
    Path(path).write_text(json.dumps(model.as_dict(), indent=2, sort_keys=True) + "\n")


def load_model(path):
    d = json.loads(Path(path).read_text())
    if d.get("format") != MODEL_FORMAT:
        raise NvmLensError(f"{path}: not an nvmlens model file")
    if d.get("version") != MODEL_VERSION:
        raise NvmLensError(f"{path}: unsupported model version {d.get('version')}")

    def arr(key):
        return np.array([math.nan if v is None else v for v in d[key]], dtype=float)

    norm = None
    if "norm" in d:
        norm = NormalizationParams(tuple(d["norm"]["mean"]), tuple(d["norm"]["std"]))
    return RegressionModel(
        included=list(d["included"]),
        beta=arr("beta"),
        sigma=float(d["sigma"]),
        std_err=arr("std_err"),
        t_stat=arr("t_stat"),
        p_value=arr("p_value"),
        r_squared=float(d["r_squared"]),
        dof=int(d["dof"]),
        rss=float(d["rss"]),
        rank_deficient=bool(d["rank_deficient"]),
        removed=[tuple(r) for r in d["removed"]],
        status=d["status"],
        norm=norm,
        feature_names=tuple(d["feature_names"]),
    )
