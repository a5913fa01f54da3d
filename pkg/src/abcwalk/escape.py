"""Finite-n estimators for escape exponents, tail shape and LIL scaling.

All estimators take a trials x checkpoints matrix of one statistic together
with the checkpoint list.  ``stat_matrix`` builds that matrix from an
ensemble or a CSV table, including summed columns such as ``"normP+d_P"``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "EstimateError",
    "ExponentFit",
    "TailReport",
    "LilReport",
    "stat_matrix",
    "fit_displacement_exponent",
    "tail_profile",
    "fit_tail_beta",
    "lil_statistic",
]

MIN_CHECKPOINTS = 5
MIN_TAIL_TRIALS = 100
TAIL_QUANTILE = 0.6


class EstimateError(ValueError):
    pass


def stat_matrix(source, expr: str) -> np.ndarray:
    """trials x checkpoints float matrix for a column or a ``+``-sum of columns."""
    names = [s.strip() for s in expr.split("+")]
    if not all(names):
        raise EstimateError(f"bad statistic expression {expr!r}")
    total = None
    for name in names:
        try:
            col = np.asarray(source.column(name))
        except KeyError:
            raise EstimateError(f"unknown statistic column {name!r}") from None
        total = col if total is None else total + col
    return np.asarray(total, dtype=float)


def _slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of y on x (columns of y are separate series) and r^2 for 1-D y."""
    xc = x - x.mean()
    sxx = float(xc @ xc)
    yc = y - y.mean(axis=0)
    slope = (xc @ yc) / sxx
    if y.ndim == 1:
        ss_tot = float(yc @ yc)
        resid = yc - slope * xc
        r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
        return float(slope), r2
    return slope, math.nan


@dataclass
class ExponentFit:
    alpha_hat: float
    ci_low: float
    ci_high: float
    r_squared: float
    checkpoints: tuple[int, ...] = ()
    means: tuple[float, ...] = ()
    n_boot: int = 0

    def lines(self, label: str = "") -> list[str]:
        tag = f"{label}." if label else ""
        return [
            f"{tag}alpha_hat = {self.alpha_hat:.6f}",
            f"{tag}ci95 = [{self.ci_low:.6f}, {self.ci_high:.6f}]",
            f"{tag}r_squared = {self.r_squared:.6f}",
            f"{tag}checkpoints = {len(self.checkpoints)}",
        ]


def fit_displacement_exponent(ns: Sequence[int], values, n_boot: int = 1000, seed: int = 0) -> ExponentFit:
    """Slope of log(mean stat) against log n.

    ``values`` is either the per-checkpoint means (no interval) or a
    trials x checkpoints matrix, in which case trials are resampled with
    replacement ``n_boot`` times for a 95% percentile interval.
    """
    ns = np.asarray(ns, dtype=float)
    v = np.asarray(values, dtype=float)
    if ns.ndim != 1 or len(ns) < MIN_CHECKPOINTS:
        raise EstimateError(f"need at least {MIN_CHECKPOINTS} checkpoints, got {len(ns)}")
    if np.any(ns <= 0):
        raise EstimateError("checkpoints must be positive")
    per_trial = v.ndim == 2
    means = v.mean(axis=0) if per_trial else v
    if means.shape != ns.shape:
        raise EstimateError("values do not match the checkpoint list")
    if not np.all(np.isfinite(means)) or np.any(means <= 0):
        raise EstimateError("mean statistic must be positive and finite at every checkpoint")
    x = np.log(ns)
    alpha, r2 = _slope(x, np.log(means))
    lo = hi = alpha
    if per_trial and n_boot > 0 and v.shape[0] > 1:
        rng = np.random.default_rng(seed)
        T = v.shape[0]
        idx = rng.integers(0, T, size=(n_boot, T))
        bm = v[idx].mean(axis=1)  # n_boot x checkpoints
        ok = np.all(bm > 0, axis=1)
        if ok.any():
            slopes, _ = _slope(x, np.log(bm[ok]).T)
            lo, hi = np.percentile(slopes, [2.5, 97.5])
        # keep the point estimate inside its own interval
        lo, hi = min(float(lo), alpha), max(float(hi), alpha)
    return ExponentFit(alpha, float(lo), float(hi), r2, tuple(int(n) for n in ns),
                       tuple(float(m) for m in means), n_boot if per_trial else 0)


def _profile_loglik(beta: float, t: np.ndarray, x0: float, log_sum: float) -> float:
    s = float(np.sum(t**beta) - len(t) * x0**beta)
    if s <= 0:
        return -math.inf
    k = len(t)
    b = k / s
    return k * math.log(b * beta) + (beta - 1) * log_sum - k


def fit_tail_beta(samples, quantile: float = TAIL_QUANTILE) -> tuple[float, float, float]:
    """(beta, a, b) for the tail model P(X > x) = exp(a - b x^beta).

    Maximum likelihood on the samples above the ``quantile`` point ``x0``,
    conditioned on exceeding it; ``b`` is profiled out and ``a`` follows from
    the empirical mass above ``x0``.  Returns NaNs when the tail is empty or
    degenerate.
    """
    x = np.asarray(samples, dtype=float)
    x0 = float(np.quantile(x, quantile))
    t = x[x > x0]
    if len(t) < 2:
        return math.nan, math.nan, math.nan
    log_sum = float(np.log(t).sum())

    def nll(beta):
        return -_profile_loglik(beta, t, x0, log_sum)

    grid = np.arange(0.1, 8.0 + 1e-9, 0.05)
    vals = np.array([nll(g) for g in grid])
    if not np.isfinite(vals).any():
        return math.nan, math.nan, math.nan
    g = grid[int(np.argmin(vals))]
    res = minimize_scalar(nll, bounds=(max(0.05, g - 0.05), g + 0.05), method="bounded",
                          options={"xatol": 1e-6})
    beta = float(res.x) if res.fun <= vals.min() else float(g)
    b = len(t) / float(np.sum(t**beta) - len(t) * x0**beta)
    a = math.log(len(t) / len(x)) + b * x0**beta
    return beta, a, b


@dataclass
class TailReport:
    n: int
    trials: int
    grid: np.ndarray = field(repr=False)
    exceedance: np.ndarray = field(repr=False)
    beta_hat: float = math.nan
    a_hat: float = math.nan
    b_hat: float = math.nan
    gamma_hat: float = math.nan
    delta_hat: float = math.nan

    def lines(self, label: str = "") -> list[str]:
        tag = f"{label}." if label else ""
        return [
            f"{tag}n = {self.n}",
            f"{tag}trials = {self.trials}",
            f"{tag}beta_hat = {self.beta_hat:.6f}",
            f"{tag}a_hat = {self.a_hat:.6f}",
            f"{tag}b_hat = {self.b_hat:.6f}",
            f"{tag}gamma_hat = {self.gamma_hat:.6f}",
            f"{tag}delta_hat = {self.delta_hat:.6f}",
        ]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "exceedance"])
            for x, p in zip(self.grid, self.exceedance):
                w.writerow([repr(float(x)), repr(float(p))])


def tail_profile(ns: Sequence[int], values, checkpoint: int | None = None, points: int = 101) -> TailReport:
    """Exceedance of stat / n^(1/2) at one checkpoint (default: the largest)."""
    ns = list(ns)
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise EstimateError("tail_profile needs a trials x checkpoints matrix")
    n = ns[-1] if checkpoint is None else checkpoint
    if n not in ns:
        raise EstimateError(f"checkpoint {n} not present")
    T = v.shape[0]
    if T < MIN_TAIL_TRIALS:
        raise EstimateError(f"tail_profile needs at least {MIN_TAIL_TRIALS} trials, got {T}")
    x = v[:, ns.index(n)] / math.sqrt(n)
    top = float(x.max()) if x.size else 0.0
    grid = np.linspace(0.0, max(top, 0.0), points)
    xs = np.sort(x)
    exceed = (T - np.searchsorted(xs, grid, side="right")) / T
    beta, a, b = fit_tail_beta(x)
    half = np.nonzero(exceed >= 0.5)[0]
    if len(half):
        gamma, delta = float(grid[half[-1]]), float(exceed[half[-1]])
    else:
        gamma, delta = 0.0, float(exceed[0])
    return TailReport(n, T, grid, exceed, beta, a, b, gamma, delta)


@dataclass
class LilReport:
    sups: np.ndarray = field(repr=False)
    quantiles: dict = field(default_factory=dict)

    @property
    def median(self) -> float:
        return float(np.median(self.sups))

    def lines(self, label: str = "") -> list[str]:
        tag = f"{label}." if label else ""
        out = [f"{tag}lil_median = {self.median:.6f}"]
        out += [f"{tag}lil_q{k} = {q:.6f}" for k, q in self.quantiles.items()]
        return out


def lil_statistic(ns: Sequence[int], values, quantiles: Sequence[float] = (0.1, 0.5, 0.9)) -> LilReport:
    """Per-trajectory sup over checkpoints n >= 16 of stat / sqrt(n log log n)."""
    ns = np.asarray(ns, dtype=float)
    v = np.atleast_2d(np.asarray(values, dtype=float))
    keep = ns >= 16
    if not keep.any():
        raise EstimateError("no checkpoints with n >= 16")
    scale = np.sqrt(ns[keep] * np.log(np.log(ns[keep])))
    sups = np.max(np.abs(v[:, keep]) / scale, axis=1)
    qs = {f"{int(round(q * 100)):02d}": float(np.quantile(sups, q)) for q in quantiles}
    return LilReport(sups, qs)
