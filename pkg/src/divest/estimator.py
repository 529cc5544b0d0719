"""The neural estimator: empirical variational objectives, their exact
parameter gradients, projected gradient ascent with restarts, and the
top-level estimate API.

The optimizer is deliberately plain: full-batch projected gradient ascent
with cosine step decay, and a handful of independently seeded restarts to
cope with the non-concave parametrization. Every step projects back onto
the feasible set, so iterates are always members of the class.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import special

from .divergences import DivergenceKind, h_derivative, h_value
from .distributions import SampleBatch, derive_seed, make_rng
from .errors import (DomainError, NonFinite, TransformMismatch,
                     UnsupportedKind)
from .netclass import (_ACTIVATIONS, NetClassSpec, NetParams,
                       ScheduleRequest, ScheduleResult, _apply_transform,
                       _as_batch, _mask, _raw_eval, _transform_deriv,
                       class_schedule, init_params, net_eval, project)


@dataclass(frozen=True)
class TrainOptions:
    steps: int = 2000
    step_size: float = 0.05
    batch: Optional[int] = None   # None = full batch
    restarts: int = 5
    seed: int = 0
    record_trace: bool = False

    def __post_init__(self):
        if self.steps < 1 or self.restarts < 1 or self.step_size <= 0:
            raise DomainError("steps, restarts >= 1 and step_size > 0")


@dataclass
class EstimateResult:
    value: float
    params: NetParams
    per_restart: list[float]
    spec: NetClassSpec
    n_mu: int
    n_nu: int
    trace: Optional[list[float]] = None
    schedule: Optional[ScheduleResult] = None

    def to_dict(self, include_trace: bool = False) -> dict:
        out = {
            "value": self.value,
            "per_restart": self.per_restart,
            "spec": self.spec.to_dict(),
            "n_mu": self.n_mu,
            "n_nu": self.n_nu,
            "params": self.params.to_dict(self.spec),
        }
        if self.schedule is not None:
            out["schedule"] = {"m_k": self.schedule.m_k,
                               "t_k": self.schedule.t_k,
                               "r_k": self.schedule.r_k}
        if include_trace and self.trace is not None:
            out["trace"] = self.trace
        return out


def _points(batch: Union[SampleBatch, np.ndarray]) -> np.ndarray:
    return batch.points if isinstance(batch, SampleBatch) else np.asarray(batch)


def _check_transform(kind: DivergenceKind, spec: NetClassSpec) -> None:
    if kind is DivergenceKind.H2 and spec.transform != "cap":
        raise TransformMismatch("H2 objective requires the cap transform")
    if kind is DivergenceKind.TV and spec.transform != "clip":
        raise TransformMismatch("TV objective requires the clip transform")


def empirical_objective(kind: DivergenceKind, spec: NetClassSpec,
                        params: NetParams, X, Y) -> float:
    """Mean over X of g minus mean over Y of h(g); the h-form objective."""
    if kind is DivergenceKind.KL_DV:
        raise UnsupportedKind("use dv_objective for the DV variant")
    _check_transform(kind, spec)
    gX = np.asarray(net_eval(spec, params, _points(X)))
    gY = np.asarray(net_eval(spec, params, _points(Y)))
    val = float(gX.mean() - np.asarray(h_value(kind, gY)).mean())
    if not math.isfinite(val):
        raise NonFinite("objective evaluated to a non-finite value")
    return val


def dv_objective(spec: NetClassSpec, params: NetParams, X, Y) -> float:
    """Donsker-Varadhan objective: mean_X g - log mean_Y e^g."""
    gX = np.asarray(net_eval(spec, params, _points(X)))
    gY = np.asarray(net_eval(spec, params, _points(Y)))
    log_mean_exp = float(special.logsumexp(gY) - math.log(gY.size))
    return float(gX.mean()) - log_mean_exp


def objective_value(kind: DivergenceKind, spec, params, X, Y) -> float:
    if kind is DivergenceKind.KL_DV:
        return dv_objective(spec, params, X, Y)
    return empirical_objective(kind, spec, params, X, Y)


def _fused_side(spec: NetClassSpec, params: NetParams, xb: np.ndarray):
    """One forward pass returning everything both the objective and the
    gradient need for one sample batch."""
    phi, dphi = _ACTIVATIONS[spec.activation]
    raw, z = _raw_eval(spec, params, xb)
    act = phi(z)
    mask = _mask(spec, xb)
    g = _apply_transform(spec, raw) * mask
    tderiv = _transform_deriv(spec, raw) * mask
    return g, tderiv, act, lambda: dphi(z)


def _accumulate(spec: NetClassSpec, params: NetParams, xb: np.ndarray,
                u: np.ndarray, act: np.ndarray,
                dact: np.ndarray) -> NetParams:
    scaled = dact * (u[:, None] * params.beta[None, :])
    return NetParams(
        beta=act.T @ u,
        w=scaled.T @ xb,
        b=scaled.sum(axis=0),
        w0=xb.T @ u,
        b0=float(u.sum()),
    )


def objective_gradient(kind: DivergenceKind, spec: NetClassSpec,
                       params: NetParams, X, Y) -> NetParams:
    """Exact parameter gradient of the chosen empirical objective."""
    if kind is not DivergenceKind.KL_DV:
        _check_transform(kind, spec)
    Xp, _ = _as_batch(spec, _points(X))
    Yp, _ = _as_batch(spec, _points(Y))
    _, tdX, actX, dactX = _fused_side(spec, params, Xp)
    gY, tdY, actY, dactY = _fused_side(spec, params, Yp)
    uX = tdX / Xp.shape[0]
    if kind is DivergenceKind.KL_DV:
        # Y-side weights are the softmax of g over the Y batch
        uY = -special.softmax(gY) * tdY
    else:
        uY = -np.asarray(h_derivative(kind, gY)) * tdY / Yp.shape[0]
    gx = _accumulate(spec, params, Xp, uX, actX, dactX())
    gy = _accumulate(spec, params, Yp, uY, actY, dactY())
    return NetParams(gx.beta + gy.beta, gx.w + gy.w, gx.b + gy.b,
                     gx.w0 + gy.w0, gx.b0 + gy.b0)


def _ascend(spec: NetClassSpec, p: NetParams, g: NetParams,
            lr: float) -> NetParams:
    # per-group diagonal preconditioning: step proportional to the box
    # size of each parameter group, so tight groups (e.g. |beta| <= 2a/k)
    # and wide ones (|b0| <= a) traverse their feasible sets at the same
    # relative speed
    a1, a2, a3, a4 = spec.bounds
    return NetParams(
        p.beta + lr * max(a2, 1e-12) * g.beta,
        p.w + lr * max(a1, 1e-12) * g.w,
        p.b + lr * max(a1, 1e-12) * g.b,
        p.w0 + lr * max(a4, 1e-12) * g.w0,
        p.b0 + lr * max(a3, 1e-12) * g.b0,
    )


def _cosine_lr(base: float, step: int, total: int) -> float:
    # decay from base to base/100
    lo = base / 100.0
    return lo + 0.5 * (base - lo) * (1.0 + math.cos(math.pi * step / total))


def train(kind: DivergenceKind, spec: NetClassSpec, X, Y,
          opts: TrainOptions, seed: int) -> EstimateResult:
    """One projected-gradient-ascent run from a random feasible start.

    The reported value is the final full-data objective (not the best
    mini-batch value seen) to avoid optimistic bias.
    """
    Xp = _points(X)
    Yp = _points(Y)
    if Xp.shape[0] == 0 or Yp.shape[0] == 0:
        raise DomainError("batches must be nonempty")
    rng = make_rng(seed)
    params = project(spec, init_params(spec, rng))
    trace: Optional[list[float]] = [] if opts.record_trace else None
    for step in range(opts.steps):
        if opts.batch is None or opts.batch >= Xp.shape[0]:
            Xb, Yb = Xp, Yp
        else:
            Xb = Xp[rng.integers(0, Xp.shape[0], size=opts.batch)]
            Yb = Yp[rng.integers(0, Yp.shape[0], size=opts.batch)]
        grad = objective_gradient(kind, spec, params, Xb, Yb)
        lr = _cosine_lr(opts.step_size, step, opts.steps)
        params = project(spec, _ascend(spec, params, grad, lr))
        if trace is not None:
            trace.append(objective_value(kind, spec, params, Xp, Yp))
    value = objective_value(kind, spec, params, Xp, Yp)
    return EstimateResult(value=value, params=params, per_restart=[value],
                          spec=spec, n_mu=Xp.shape[0], n_nu=Yp.shape[0],
                          trace=trace)


def estimate(kind: DivergenceKind,
             spec_or_request: Union[NetClassSpec, ScheduleRequest], X, Y,
             opts: TrainOptions = TrainOptions()) -> EstimateResult:
    """Run opts.restarts independent trainings and keep the best final
    full-data objective."""
    schedule: Optional[ScheduleResult] = None
    if isinstance(spec_or_request, ScheduleRequest):
        schedule = class_schedule(spec_or_request)
        spec = schedule.spec
    else:
        spec = spec_or_request
    results = []
    for r in range(opts.restarts):
        seed = derive_seed(opts.seed, "restart", r)
        results.append(train(kind, spec, X, Y, opts, seed))
    per_restart = [r.value for r in results]
    best = results[int(np.argmax(per_restart))]
    return EstimateResult(value=best.value, params=best.params,
                          per_restart=per_restart, spec=spec,
                          n_mu=best.n_mu, n_nu=best.n_nu,
                          trace=best.trace, schedule=schedule)
