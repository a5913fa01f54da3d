"""Monte Carlo trajectories X_n = (W_n, Y_n) with their polynomial traces.

A kernel step ``+-w_g`` taken at height ``Y`` adds ``+-1`` to the degree-``Y``
coefficient of the trace polynomial ``P_n^(g)``, so that
``W_n = sum_g P_n^(g)(phi) w_g`` exactly.  Traces are rebuilt at each
checkpoint from the stored step sequence, then measured.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .group import (
    GroupElement,
    GroupSpec,
    annihilates,
    evaluate_word,
    length_lower_bound,
    trace_value,
    upper_bound_from_polys,
)
from .laurent import LaurentPoly
from .spectral import SpectralSplit
from .toppling import reduce_poly, verify_membership

__all__ = [
    "MODES",
    "COLUMNS",
    "INT_COLUMNS",
    "WalkConfig",
    "TrajectoryRecord",
    "Ensemble",
    "InvariantViolation",
    "dyadic_checkpoints",
    "run_trajectory",
    "upper_bound_statistic",
    "run_ensemble",
    "verify_trajectory",
    "write_csv",
    "read_csv",
    "CsvTable",
    "CsvSchemaError",
]

MODES = ("full_edp", "split_plus", "none")
INT_COLUMNS = ("n", "Y", "M", "m", "normP", "K_P", "d_P", "normQ", "L", "U")
FLOAT_COLUMNS = ("euclid_W", "dplus_W", "dzero_W")
COLUMNS = ("n", "Y", "M", "m", "normP", "K_P", "d_P", "normQ", "euclid_W", "dplus_W", "L", "U")


class InvariantViolation(RuntimeError):
    pass


def dyadic_checkpoints(n_steps: int, lo: int = 4, hi: int = 14) -> tuple[int, ...]:
    cps = tuple(2**j for j in range(lo, hi + 1) if 2**j <= n_steps)
    return cps or (n_steps,)


@dataclass
class WalkConfig:
    spec: GroupSpec
    n_steps: int
    trials: int = 1
    seed: int = 0
    mode: str = "none"
    reducer: LaurentPoly | None = None
    split: SpectralSplit | None = None
    weights: tuple[float, ...] | None = None
    checkpoints: tuple[int, ...] | None = None
    c_A: int | float | None = None

    def __post_init__(self):
        spec = self.spec
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        n = spec.n_generators
        if self.weights is None:
            self.weights = tuple([1.0 / n] * n)
        w = np.asarray(self.weights, dtype=float)
        if len(w) != n or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be positive, one per generator, summing to 1")
        if any(w[i] != w[i ^ 1] for i in range(n)):
            raise ValueError("weights must be symmetric: weight(s) == weight(s^-1)")
        self.weights = tuple(float(x) for x in w)
        if self.checkpoints is None:
            self.checkpoints = dyadic_checkpoints(self.n_steps)
        self.checkpoints = tuple(sorted(set(int(c) for c in self.checkpoints)))
        if any(c < 0 or c > self.n_steps for c in self.checkpoints):
            raise ValueError("checkpoints must lie in [0, n_steps]")
        if self.c_A is None:
            self.c_A = spec.dim
        if self.mode == "full_edp":
            if self.reducer is None:
                raise ValueError("full_edp mode needs a reducer")
            if not annihilates(spec, self.reducer):
                raise ValueError(f"reducer {self.reducer} does not annihilate phi on the generators")
        if self.mode == "split_plus":
            if self.split is None or self.split.proj is None:
                raise ValueError("split_plus mode needs a verified split with projections")

    def describe(self) -> dict:
        return {
            "group": self.spec.name,
            "n_steps": self.n_steps,
            "trials": self.trials,
            "seed": self.seed,
            "mode": self.mode,
            "reducer": None if self.reducer is None else str(self.reducer),
            "split": None if self.split is None else {
                "p_plus": str(self.split.p_plus),
                "p_zero": str(self.split.p_zero),
                "edp_reducer": str(self.split.edp_reducer),
            },
            "weights": list(self.weights),
            "checkpoints": list(self.checkpoints),
            "c_A": self.c_A,
        }


@dataclass
class TrajectoryRecord:
    trial: int
    rows: list[dict]
    steps: np.ndarray = field(repr=False)
    polys: list[tuple[LaurentPoly, ...]] = field(repr=False, default_factory=list)
    kernel: list[tuple] = field(repr=False, default_factory=list)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream keyed by (master seed, trial index)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
    return np.random.Generator(np.random.Philox(ss))


def _float_norm(v: Sequence) -> float:
    if all(isinstance(x, int) for x in v):
        s = sum(x * x for x in v)
        try:
            return math.sqrt(s)
        except OverflowError:
            try:
                return float(math.isqrt(s))
            except OverflowError:
                return math.inf
    s = sum(Fraction(x) ** 2 for x in v)
    try:
        return math.sqrt(s)
    except OverflowError:
        return math.inf


def _ceil_scaled_norm(c, v: Sequence) -> int:
    """ceil(c * ||v||_2), exact for integer c and integer v."""
    if isinstance(c, int) and all(isinstance(x, int) for x in v):
        s = c * c * sum(x * x for x in v)
        if s == 0:
            return 0
        r = math.isqrt(s)
        return r if r * r == s else r + 1
    return math.ceil(c * _float_norm(v))


def _build_traces(spec: GroupSpec, steps: np.ndarray, heights_before: np.ndarray, n: int) -> tuple[LaurentPoly, ...]:
    s = steps[:n]
    h = heights_before[:n]
    kern = s < spec.t_index
    out = []
    for g in range(spec.n_kernel):
        sel = kern & ((s >> 1) == g)
        if not sel.any():
            out.append(LaurentPoly())
            continue
        hs = h[sel]
        signs = 1 - 2 * (s[sel] & 1).astype(np.int64)
        lo = int(hs.min())
        coeffs = _bincount_int(hs - lo, signs)
        out.append(LaurentPoly(coeffs.tolist(), lo))
    return tuple(out)


def _bincount_int(idx: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = np.zeros(int(idx.max()) + 1, dtype=np.int64)
    np.add.at(out, idx, w)
    return out


def _span(polys: Sequence[LaurentPoly]) -> tuple[int, int] | None:
    live = [P for P in polys if P]
    if not live:
        return None
    return min(P.min_degree for P in live), max(P.max_degree for P in live)


def upper_bound_statistic(config: WalkConfig, polys: Sequence[LaurentPoly], Y: int,
                          mode: str | None = None) -> tuple[int, int]:
    """(U_n, ||Q_n||_P) for the trace ``polys`` ending at height ``Y``.

    full_edp reduces every trace by the configured reducer; split_plus reduces
    by the dissipative multiple of p_plus and adds the word cost of the
    neutral remainder (P_n - Q_n)(phi) w; none measures the raw trace.

    The neutral remainder is a multiple of p_plus(phi) applied to w, so it
    already lies in E_0 and (I - pi_plus) fixes it.  Its norm is therefore
    taken exactly from the integer vector rather than through pi_plus.
    """
    mode = mode or config.mode
    spec = config.spec
    if mode == "none":
        return upper_bound_from_polys(polys, Y), sum(P.length for P in polys)
    if mode == "full_edp":
        if config.reducer is None:
            raise ValueError("full_edp mode needs a reducer")
        reducer = config.reducer
    elif mode == "split_plus":
        if config.split is None:
            raise ValueError("split_plus mode needs a split")
        reducer = config.split.edp_reducer
    else:
        raise ValueError(f"unknown mode {mode!r}")
    Qs = []
    for P in polys:
        rep = reduce_poly(P, reducer)
        if not verify_membership(rep):
            raise InvariantViolation(f"toppling certificate failed for {P}")
        Qs.append(rep.Q)
    U = upper_bound_from_polys(Qs, Y)
    if mode == "split_plus":
        rest = trace_value(spec, [P - Q for P, Q in zip(polys, Qs)])
        U += _ceil_scaled_norm(config.c_A, rest)
    return U, sum(Q.length for Q in Qs)


def run_trajectory(config: WalkConfig, trial_index: int = 0, steps: Sequence[int] | None = None,
                   checkpoints: Sequence[int] | None = None) -> TrajectoryRecord:
    """One trajectory, measured at every checkpoint.

    ``steps`` forces a generator sequence (then ``checkpoints`` defaults to its
    length); otherwise steps are drawn from the trial's seeded stream.
    """
    spec = config.spec
    if steps is None:
        rng = trial_rng(config.seed, trial_index)
        steps = rng.choice(spec.n_generators, size=config.n_steps, p=np.asarray(config.weights))
        cps = config.checkpoints if checkpoints is None else tuple(checkpoints)
    else:
        cps = (len(steps),) if checkpoints is None else tuple(checkpoints)
    steps = np.asarray(steps, dtype=np.int64)
    t = spec.t_index
    dz = np.where(steps == t, 1, np.where(steps == t + 1, -1, 0))
    Y = np.concatenate([[0], np.cumsum(dz)]).astype(np.int64)
    run_max = np.maximum.accumulate(Y)
    run_min = np.minimum.accumulate(Y)
    kernel_count = np.concatenate([[0], np.cumsum(steps < t)])
    proj = config.split.proj if config.split is not None else None

    rows, all_polys, kernels = [], [], []
    for n in cps:
        polys = _build_traces(spec, steps, Y[:-1], n)
        W = trace_value(spec, polys)
        y = int(Y[n])
        span = _span(polys)
        row = {
            "n": n,
            "Y": y,
            "M": int(run_max[n]),
            "m": int(run_min[n]),
            "normP": sum(P.length for P in polys),
            "K_P": max(P.height for P in polys),
            "d_P": 0 if span is None else span[1] - span[0],
            "euclid_W": _float_norm(W),
        }
        if proj is not None:
            row["dplus_W"], row["dzero_W"] = proj.trace_deviations(polys, spec.kernel_gens)
        else:
            row["dplus_W"] = row["dzero_W"] = math.nan
        row["L"] = length_lower_bound(spec, GroupElement(W, y))
        row["U"], row["normQ"] = upper_bound_statistic(config, polys, y)
        if row["d_P"] > row["M"] - row["m"]:
            raise InvariantViolation(f"trace diameter {row['d_P']} exceeds the height range at n={n}")
        if row["normP"] > kernel_count[n]:
            raise InvariantViolation(f"trace length {row['normP']} exceeds kernel steps at n={n}")
        if row["L"] > row["U"]:
            raise InvariantViolation(f"lower bound {row['L']} exceeds upper bound {row['U']} at n={n}")
        rows.append(row)
        all_polys.append(polys)
        kernels.append(W)
    return TrajectoryRecord(trial_index, rows, steps, all_polys, kernels)


def verify_trajectory(config: WalkConfig, rec: TrajectoryRecord) -> bool:
    """Re-evaluate the stored word at every checkpoint and compare exactly."""
    spec = config.spec
    for row, W in zip(rec.rows, rec.kernel):
        g = evaluate_word(spec, rec.steps[: row["n"]].tolist())
        if g != GroupElement(tuple(W), row["Y"]):
            return False
    return True


def _run_one(args) -> TrajectoryRecord:
    config, trial = args
    return run_trajectory(config, trial)


@dataclass
class Ensemble:
    config: WalkConfig
    records: list[TrajectoryRecord]

    @property
    def checkpoints(self) -> tuple[int, ...]:
        return self.config.checkpoints

    def column(self, name: str) -> np.ndarray:
        """trials x checkpoints array of one statistic."""
        dtype = object if name in INT_COLUMNS else float
        if not self.records or name not in self.records[0].rows[0]:
            raise KeyError(name)
        return np.array([[r[name] for r in rec.rows] for rec in self.records], dtype=dtype)

    def table(self, quantiles: Sequence[float] = (0.1, 0.5, 0.9)) -> list[dict]:
        """Per-checkpoint mean / max / quantiles of every statistic, folded in trial order."""
        out = []
        T = len(self.records)
        for ci, n in enumerate(self.checkpoints):
            entry = {"n": n}
            for name in COLUMNS[1:] + ("dzero_W",):
                vals = [rec.rows[ci][name] for rec in self.records]
                if name in INT_COLUMNS:
                    total = sum(vals)
                    entry[f"{name}_sum"] = total
                    entry[f"{name}_mean"] = float(Fraction(total, T))
                    entry[f"{name}_max"] = max(vals)
                else:
                    entry[f"{name}_mean"] = math.fsum(vals) / T
                    entry[f"{name}_max"] = max(vals)
                arr = np.asarray(vals, dtype=float)
                for q in quantiles:
                    entry[f"{name}_q{int(round(q * 100)):02d}"] = float(np.quantile(arr, q))
            out.append(entry)
        return out


def run_ensemble(config: WalkConfig, workers: int = 1, spot_check: float = 0.01,
                 keep_exact: bool = False) -> Ensemble:
    """All trials of ``config``; trial ``i`` always uses stream (seed, i).

    A fraction ``spot_check`` of trajectories (every ``round(1/spot_check)``-th
    trial, starting at 0) is re-verified against direct word evaluation.
    """
    jobs = [(config, i) for i in range(config.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        records = [_run_one(j) for j in jobs]
    if spot_check > 0:
        every = max(1, int(round(1 / spot_check)))
        for rec in records[::every]:
            if not verify_trajectory(config, rec):
                raise InvariantViolation(f"trial {rec.trial}: trace disagrees with word evaluation")
    if not keep_exact:
        for rec in records:
            rec.polys = []
            rec.kernel = []
    return Ensemble(config, records)


CSV_HEADER = ("trial",) + COLUMNS


def _fmt(name: str, v) -> str:
    if name in FLOAT_COLUMNS:
        return repr(float(v))
    return str(int(v))


def write_csv(ensemble: Ensemble, path) -> int:
    """One row per (trial, checkpoint), trials in index order.  Returns the row count."""
    import csv

    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rec in ensemble.records:
            for r in rec.rows:
                w.writerow([rec.trial] + [_fmt(c, r[c]) for c in COLUMNS])
                rows += 1
    return rows


class CsvSchemaError(ValueError):
    pass


@dataclass
class CsvTable:
    """A simulate CSV read back as trials x checkpoints columns."""
    checkpoints: tuple[int, ...]
    trials: tuple[int, ...]
    data: dict

    def column(self, name: str) -> np.ndarray:
        return self.data[name]


def read_csv(path) -> CsvTable:
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        missing = [c for c in CSV_HEADER if c not in header]
        if missing:
            raise CsvSchemaError(f"{path}: missing columns {missing}")
        pos = {c: header.index(c) for c in header}
        by_trial: dict[int, list] = {}
        for line in reader:
            if not line:
                continue
            if len(line) != len(header):
                raise CsvSchemaError(f"{path}: row has {len(line)} fields, expected {len(header)}")
            by_trial.setdefault(int(line[pos["trial"]]), []).append(line)
    if not by_trial:
        raise CsvSchemaError(f"{path}: no data rows")
    trials = tuple(sorted(by_trial))
    cps = tuple(int(l[pos["n"]]) for l in by_trial[trials[0]])
    data = {}
    for c in header:
        if c == "trial":
            continue
        conv = float if c in FLOAT_COLUMNS or c not in INT_COLUMNS else int
        mat = []
        for t in trials:
            lines = by_trial[t]
            if tuple(int(l[pos["n"]]) for l in lines) != cps:
                raise CsvSchemaError(f"{path}: trial {t} has different checkpoints")
            mat.append([conv(l[pos[c]]) for l in lines])
        data[c] = np.array(mat, dtype=object if conv is int else float)
    return CsvTable(cps, trials, data)
