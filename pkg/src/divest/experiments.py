"""Benchmark harness: grid sweeps against oracles, log-log rate fits,
supervised approximation checks, and CSV/JSON persistence.

A sweep cell is (divergence, pair, n, k, seed). Each cell's RNG stream is
derived from the root seed and the cell identity, so results are
independent of execution order and worker count.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .divergences import DivergenceKind
from .distributions import (Distribution, derive_seed, log_ratio, make_rng,
                            parse_distribution, sample)
from .errors import DegenerateFit, DivestError, InvalidRequest
from .estimator import EstimateResult, TrainOptions, estimate
from .netclass import (NetClassSpec, ScheduleRequest, class_schedule,
                       init_params, project)
from .oracle import OracleResult, divergence_mc_plugin, divergence_quadrature

CSV_COLUMNS = ["kind", "pair", "d", "n", "k", "seed", "estimate", "oracle",
               "abs_error", "signed_error", "wall_ms", "restarts",
               "m_k", "t_k", "r_k", "status"]


@dataclass(frozen=True)
class SweepConfig:
    kinds: tuple[str, ...]
    pairs: tuple[tuple[str, str], ...]   # (spec_p, spec_q) strings
    n_grid: tuple[int, ...]
    k_rule: str = "paper_schedule"       # fixed | equal_n | sqrt_n | paper_schedule
    k_fixed: Optional[int] = None
    k_cap: int = 512
    seeds: int = 1
    root_seed: int = 0
    oracle_method: str = "auto"
    oracle_n: int = 100_000
    regime: str = "unknown_m"
    M: Optional[float] = None
    support: str = "compact"
    steps: int = 400
    step_size: float = 0.5
    batch: Optional[int] = 1024
    restarts: int = 2
    measure_time: bool = False           # False keeps output files bitwise stable

    def __post_init__(self):
        if not self.kinds or not self.pairs or not self.n_grid:
            raise InvalidRequest("kinds, pairs and n_grid must be nonempty")
        if self.seeds < 1:
            raise InvalidRequest("seeds must be >= 1")
        if self.k_rule not in ("fixed", "equal_n", "sqrt_n", "paper_schedule"):
            raise InvalidRequest(f"unknown k_rule {self.k_rule!r}")
        if self.k_rule == "fixed" and not self.k_fixed:
            raise InvalidRequest("fixed k_rule requires k_fixed")

    def k_for(self, n: int) -> int:
        if self.k_rule == "fixed":
            k = self.k_fixed
        elif self.k_rule == "equal_n":
            k = n
        elif self.k_rule == "sqrt_n":
            k = int(round(math.sqrt(n)))
        else:
            k = min(n, self.k_cap)
        return max(2, min(k, self.k_cap))

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        raw = json.loads(text)
        raw["kinds"] = tuple(raw["kinds"])
        raw["pairs"] = tuple(tuple(p) for p in raw["pairs"])
        raw["n_grid"] = tuple(raw["n_grid"])
        return cls(**raw)


@dataclass(frozen=True)
class SweepRecord:
    kind: str
    pair: str
    d: int
    n: int
    k: int
    seed: int
    estimate: float
    oracle: float
    abs_error: float
    signed_error: float
    wall_ms: float
    restarts: int
    m_k: float
    t_k: Optional[float]
    r_k: Optional[float]
    status: str = "ok"

    def row(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)
        return [fmt(getattr(self, c)) for c in CSV_COLUMNS]

    @classmethod
    def from_row(cls, row: list[str]) -> "SweepRecord":
        vals = dict(zip(CSV_COLUMNS, row))
        opt = lambda s: None if s == "" else float(s)
        return cls(
            kind=vals["kind"], pair=vals["pair"], d=int(vals["d"]),
            n=int(vals["n"]), k=int(vals["k"]), seed=int(vals["seed"]),
            estimate=float(vals["estimate"]), oracle=float(vals["oracle"]),
            abs_error=float(vals["abs_error"]),
            signed_error=float(vals["signed_error"]),
            wall_ms=float(vals["wall_ms"]), restarts=int(vals["restarts"]),
            m_k=float(vals["m_k"]), t_k=opt(vals["t_k"]),
            r_k=opt(vals["r_k"]), status=vals["status"],
        )


def worker_count() -> int:
    env = os.environ.get("DIVEST_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _pair_id(spec_p: str, spec_q: str) -> str:
    return f"{spec_p}|{spec_q}"


def _cell(cfg: SweepConfig, kind: DivergenceKind, spec_p: str, spec_q: str,
          p: Distribution, q: Distribution, oracle_val: float, n: int,
          seed_idx: int) -> SweepRecord:
    k = cfg.k_for(n)
    pair = _pair_id(spec_p, spec_q)
    cell_seed = derive_seed(cfg.root_seed, kind.value, pair, n, k, seed_idx)
    req = ScheduleRequest(kind=kind, k=k, d=p.d, regime=cfg.regime,
                          M=cfg.M, support=cfg.support)
    base = dict(kind=kind.value, pair=pair, d=p.d, n=n, k=k, seed=seed_idx,
                restarts=cfg.restarts)
    t0 = time.perf_counter()
    try:
        X = sample(p, n, derive_seed(cell_seed, "x"))
        Y = sample(q, n, derive_seed(cell_seed, "y"))
        opts = TrainOptions(steps=cfg.steps, step_size=cfg.step_size,
                            batch=cfg.batch, restarts=cfg.restarts,
                            seed=cell_seed)
        res = estimate(kind, req, X, Y, opts)
        wall = (time.perf_counter() - t0) * 1e3 if cfg.measure_time else 0.0
        sched = res.schedule
        return SweepRecord(
            estimate=res.value, oracle=oracle_val,
            abs_error=abs(res.value - oracle_val),
            signed_error=res.value - oracle_val,
            wall_ms=wall, m_k=sched.m_k, t_k=sched.t_k, r_k=sched.r_k,
            status="ok", **base)
    except DivestError as exc:
        wall = (time.perf_counter() - t0) * 1e3 if cfg.measure_time else 0.0
        return SweepRecord(
            estimate=math.nan, oracle=oracle_val, abs_error=math.nan,
            signed_error=math.nan, wall_ms=wall, m_k=math.nan, t_k=None,
            r_k=None, status=f"error:{type(exc).__name__}", **base)


def run_sweep(cfg: SweepConfig) -> list[SweepRecord]:
    """One record per (kind, pair, n, seed); oracle computed once per
    (kind, pair); failing cells get a status tag instead of aborting."""
    tasks = []
    for kind_s in cfg.kinds:
        kind = DivergenceKind.from_string(kind_s)
        for spec_p, spec_q in cfg.pairs:
            p = parse_distribution(spec_p)
            q = parse_distribution(spec_q)
            try:
                if cfg.oracle_method == "mc_plugin" or (
                    cfg.oracle_method == "auto" and p.d > 2
                ):
                    oracle_seed = derive_seed(cfg.root_seed, "oracle",
                                              kind.value, spec_p, spec_q)
                    oracle_val = divergence_mc_plugin(
                        kind, p, q, cfg.oracle_n, oracle_seed).value
                else:
                    oracle_val = divergence_quadrature(kind, p, q).value
            except DivestError:
                oracle_val = math.nan
            for n in cfg.n_grid:
                for s in range(cfg.seeds):
                    tasks.append((kind, spec_p, spec_q, p, q, oracle_val,
                                  n, s))

    def run(task):
        kind, spec_p, spec_q, p, q, ov, n, s = task
        if math.isnan(ov):
            k = cfg.k_for(n)
            return SweepRecord(
                kind=kind.value, pair=_pair_id(spec_p, spec_q), d=p.d, n=n,
                k=k, seed=s, estimate=math.nan, oracle=math.nan,
                abs_error=math.nan, signed_error=math.nan, wall_ms=0.0,
                restarts=cfg.restarts, m_k=math.nan, t_k=None, r_k=None,
                status="error:oracle")
        return _cell(cfg, kind, spec_p, spec_q, p, q, ov, n, s)

    workers = worker_count()
    if workers == 1:
        records = [run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, tasks))
    records.sort(key=lambda r: (r.kind, r.pair, r.n, r.k, r.seed))
    return records


@dataclass(frozen=True)
class RateFit:
    axis: str
    slope: float
    intercept: float
    r2: float
    points: int

    def to_dict(self) -> dict:
        return {"axis": self.axis, "slope": self.slope,
                "intercept": self.intercept, "r2": self.r2,
                "points": self.points}


def fit_rate(records: list[SweepRecord], axis: str = "n") -> RateFit:
    """OLS of log2(seed-mean abs error) on log2(axis value)."""
    if axis not in ("n", "k"):
        raise InvalidRequest("axis must be 'n' or 'k'")
    by_value: dict[int, list[float]] = {}
    for r in records:
        if r.status != "ok":
            continue
        by_value.setdefault(getattr(r, axis), []).append(r.abs_error)
    means = {v: float(np.mean(errs)) for v, errs in by_value.items()}
    zero = [v for v, m in means.items() if m == 0.0]
    if zero:
        warnings.warn(f"excluding exact-zero error cells at {axis}={zero}")
        for v in zero:
            del means[v]
    if len(means) < 3:
        raise DegenerateFit("need >= 3 distinct axis values with "
                            "nonzero mean error")
    xs = np.log2(sorted(means))
    ys = np.array([math.log2(means[v]) for v in sorted(means)])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(axis=axis, slope=float(slope), intercept=float(intercept),
                   r2=r2, points=len(means))


@dataclass(frozen=True)
class ApproxRow:
    k: int
    sup_error: float
    l2_error: float


def approx_check(p: Distribution, q: Distribution, k_grid: list[int],
                 n_seeds: int = 5, steps: int = 200, step_size: float = 0.05,
                 grid_points: int = 4096, M: float = 10.0,
                 root_seed: int = 0) -> list[ApproxRow]:
    """Directly regress the log-ratio potential onto the constrained relu
    class with squared loss on a dense grid (d = 1 only), reporting the
    max-over-grid and q-weighted RMS errors per width; medians over seeds."""
    if p.d != 1:
        raise InvalidRequest("approx_check requires d = 1")
    xs = np.linspace(0.0, 1.0, grid_points)[:, None]
    target = np.asarray(log_ratio(p, q, xs))
    qw = np.asarray(q.density(xs))
    qw = qw / qw.sum()
    rows = []
    for k in k_grid:
        req = ScheduleRequest(kind=DivergenceKind.KL, k=k, d=1,
                              regime="known_m", M=M)
        spec = class_schedule(req).spec
        sups, l2s = [], []
        for s in range(n_seeds):
            fit = _lsq_fit(spec, xs, target, steps, step_size,
                           derive_seed(root_seed, "approx", k, s))
            err = np.abs(fit - target)
            sups.append(float(err.max()))
            l2s.append(float(np.sqrt((err ** 2) @ qw)))
        rows.append(ApproxRow(k=k, sup_error=float(np.median(sups)),
                              l2_error=float(np.median(l2s))))
    return rows


def _lsq_fit(spec: NetClassSpec, xs: np.ndarray, target: np.ndarray,
             steps: int, step_size: float, seed: int) -> np.ndarray:
    from scipy.optimize import lsq_linear

    from .estimator import _ascend, _cosine_lr, _fused_side, _accumulate
    from .netclass import NetParams, net_eval
    rng = make_rng(seed)
    k = spec.k
    a1, a2, a3, a4 = spec.bounds
    # stratified relu kinks over [0, 1]: w = ±1, kink at -b/w; feasible
    # since ||w||_1 = 1 <= a1 and |b| <= 1 <= a1
    sign = rng.choice([-1.0, 1.0], size=k)
    kink = (np.arange(k) + rng.uniform(0.0, 1.0, size=k)) / k
    w = sign[:, None].copy()
    b = -sign * kink
    # with hidden units frozen the model is linear in (beta, w0, b0), so
    # the box-constrained least squares is solved exactly
    feats = np.maximum(xs @ w.T + b, 0.0)
    design = np.hstack([feats, xs, np.ones((xs.shape[0], 1))])
    lb = np.concatenate([np.full(k, -a2), [-a4], [-a3]])
    sol = lsq_linear(design, target, bounds=(lb, -lb)).x
    params = NetParams(beta=sol[:k], w=w, b=b,
                       w0=sol[k:k + 1], b0=float(sol[k + 1]))
    params = project(spec, params)
    best = np.asarray(net_eval(spec, params, xs))
    best_mse = float(((best - target) ** 2).mean())
    n = xs.shape[0]
    for step in range(steps):
        g, tderiv, act, dact = _fused_side(spec, params, xs)
        # descend the mean squared error: weights are the residual
        u = -2.0 * (g - target) * tderiv / n
        grad = _accumulate(spec, params, xs, u, act, dact())
        lr = _cosine_lr(step_size, step, steps)
        params = project(spec, _ascend(spec, params, grad, lr))
    if steps > 0:
        refined = np.asarray(net_eval(spec, params, xs))
        if float(((refined - target) ** 2).mean()) < best_mse:
            best = refined
    return best


def write_results(records: list[SweepRecord], path: str,
                  fmt: str = "csv") -> None:
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for r in records:
                writer.writerow(r.row())
    elif fmt == "json":
        import dataclasses
        with open(path, "w") as fh:
            json.dump([dataclasses.asdict(r) for r in records], fh, indent=1)
            fh.write("\n")
    else:
        raise InvalidRequest(f"unknown format {fmt!r}")


def read_results(path: str) -> list[SweepRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_COLUMNS:
            raise InvalidRequest(f"unexpected CSV header in {path}")
        return [SweepRecord.from_row(row) for row in reader]
