"""Shallow single-hidden-layer networks with constrained parameters.

A network is g(x) = sum_i beta_i * phi(w_i . x + b_i) + w0 . x + b0, followed
by an optional output transform (cap at 1-t, or clip to [-1, 1]) and a hard
zero outside a Euclidean ball of a given mask radius. The feasible set is a
product of l1 balls (rows of w, and w0) and boxes (beta, b, b0), so exact
Euclidean projection is cheap; projected gradient ascent relies on that.

Width/divergence schedules (which bound goes with which divergence at which
width k) are produced by :func:`class_schedule`.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .divergences import DivergenceKind
from .errors import DimensionMismatch, InvalidRequest


def relu(z):
    return np.maximum(z, 0.0)


def relu_deriv(z):
    # kink convention: derivative 0 at z == 0
    return (z > 0.0).astype(float)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def sigmoid_deriv(z):
    s = sigmoid(z)
    return s * (1.0 - s)


_ACTIVATIONS = {
    "relu": (relu, relu_deriv),
    "sigmoid": (sigmoid, sigmoid_deriv),
}

PARAMS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetClassSpec:
    """Feasible set of one shallow-net class.

    bounds = (a1, a2, a3, a4): a1 caps each row ||w_i||_1 and |b_i|, a2 caps
    |beta_i|, a3 caps |b0|, a4 caps ||w0||_1. transform is "identity",
    "cap" (output -> min(1 - cap_t, output)) or "clip" (clamp to [-1, 1]).
    mask_radius = inf disables support masking.
    """

    d: int
    k: int
    activation: str = "relu"
    bounds: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 0.0)
    transform: str = "identity"
    cap_t: Optional[float] = None
    mask_radius: float = math.inf

    def __post_init__(self):
        if self.d < 1 or self.k < 1:
            raise InvalidRequest("d and k must be positive")
        if self.activation not in _ACTIVATIONS:
            raise InvalidRequest(f"unknown activation {self.activation!r}")
        if any(a < 0 for a in self.bounds):
            raise InvalidRequest("parameter bounds must be nonnegative")
        if self.transform not in ("identity", "cap", "clip"):
            raise InvalidRequest(f"unknown transform {self.transform!r}")
        if self.transform == "cap":
            if self.cap_t is None or not (0.0 < self.cap_t < 1.0):
                raise InvalidRequest("cap transform requires 0 < t < 1")
        if self.mask_radius <= 0:
            raise InvalidRequest("mask_radius must be positive")

    @classmethod
    def relu_family(cls, d: int, k: int, a: float, **kw) -> "NetClassSpec":
        """Bound pattern (1, 2a/k, a, a) with relu activation."""
        return cls(d=d, k=k, activation="relu",
                   bounds=(1.0, 2.0 * a / k, a, a), **kw)

    @classmethod
    def sigmoid_family(cls, d: int, k: int, a: float, **kw) -> "NetClassSpec":
        """Bound pattern (sqrt(k) log k, 2a/k, a, 0) with sigmoid activation."""
        return cls(d=d, k=k, activation="sigmoid",
                   bounds=(math.sqrt(k) * math.log(k), 2.0 * a / k, a, 0.0),
                   **kw)

    @classmethod
    def star(cls, d: int, k: int, activation: str = "relu") -> "NetClassSpec":
        """The fixed-bound class with a = (1, 1, 1, 0)."""
        return cls(d=d, k=k, activation=activation,
                   bounds=(1.0, 1.0, 1.0, 0.0))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["bounds"] = list(self.bounds)
        out["mask_radius"] = (
            None if math.isinf(self.mask_radius) else self.mask_radius
        )
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "NetClassSpec":
        d = dict(d)
        d["bounds"] = tuple(d["bounds"])
        if d.get("mask_radius") is None:
            d["mask_radius"] = math.inf
        return cls(**d)


@dataclass
class NetParams:
    """Trainable weights of one shallow net."""

    beta: np.ndarray  # (k,)
    w: np.ndarray     # (k, d)
    b: np.ndarray     # (k,)
    w0: np.ndarray    # (d,)
    b0: float

    def copy(self) -> "NetParams":
        return NetParams(self.beta.copy(), self.w.copy(), self.b.copy(),
                         self.w0.copy(), float(self.b0))

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [self.beta, self.w.ravel(), self.b, self.w0, [self.b0]]
        )

    @classmethod
    def unflatten(cls, vec: np.ndarray, k: int, d: int) -> "NetParams":
        vec = np.asarray(vec, dtype=float)
        if vec.size != k + k * d + k + d + 1:
            raise DimensionMismatch("flat vector size mismatch")
        i = 0
        beta = vec[i:i + k]; i += k
        w = vec[i:i + k * d].reshape(k, d); i += k * d
        b = vec[i:i + k]; i += k
        w0 = vec[i:i + d]; i += d
        return cls(beta.copy(), w.copy(), b.copy(), w0.copy(), float(vec[i]))

    @classmethod
    def zeros(cls, k: int, d: int) -> "NetParams":
        return cls(np.zeros(k), np.zeros((k, d)), np.zeros(k),
                   np.zeros(d), 0.0)

    def to_dict(self, spec: NetClassSpec) -> dict:
        return {
            "version": PARAMS_FORMAT_VERSION,
            "k": spec.k,
            "d": spec.d,
            "activation": spec.activation,
            "beta": self.beta.tolist(),
            "w": self.w.tolist(),
            "b": self.b.tolist(),
            "w0": self.w0.tolist(),
            "b0": float(self.b0),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetParams":
        return cls(
            beta=np.asarray(d["beta"], dtype=float),
            w=np.asarray(d["w"], dtype=float),
            b=np.asarray(d["b"], dtype=float),
            w0=np.asarray(d["w0"], dtype=float),
            b0=float(d["b0"]),
        )

    def to_json(self, spec: NetClassSpec) -> str:
        return json.dumps(self.to_dict(spec))


def _check_dims(spec: NetClassSpec, params: NetParams) -> None:
    ok = (
        params.beta.shape == (spec.k,)
        and params.w.shape == (spec.k, spec.d)
        and params.b.shape == (spec.k,)
        and params.w0.shape == (spec.d,)
    )
    if not ok:
        raise DimensionMismatch(
            f"params shapes {params.beta.shape}/{params.w.shape} do not "
            f"match spec k={spec.k}, d={spec.d}"
        )


def _as_batch(spec: NetClassSpec, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.d:
        raise DimensionMismatch(f"input must have d={spec.d} columns")
    return x, single


def _raw_eval(spec: NetClassSpec, params: NetParams, x: np.ndarray):
    phi, _ = _ACTIVATIONS[spec.activation]
    z = x @ params.w.T + params.b  # (n, k)
    return phi(z) @ params.beta + x @ params.w0 + params.b0, z


def _apply_transform(spec: NetClassSpec, raw: np.ndarray) -> np.ndarray:
    if spec.transform == "cap":
        return np.minimum(raw, 1.0 - spec.cap_t)
    if spec.transform == "clip":
        return np.clip(raw, -1.0, 1.0)
    return raw


def _transform_deriv(spec: NetClassSpec, raw: np.ndarray) -> np.ndarray:
    # saturated side contributes zero; the boundary uses the interior side
    if spec.transform == "cap":
        return (raw <= 1.0 - spec.cap_t).astype(float)
    if spec.transform == "clip":
        return (np.abs(raw) <= 1.0).astype(float)
    return np.ones_like(raw)


def _mask(spec: NetClassSpec, x: np.ndarray) -> np.ndarray:
    if math.isinf(spec.mask_radius):
        return np.ones(x.shape[0])
    return (np.linalg.norm(x, axis=1) <= spec.mask_radius).astype(float)


def net_eval(spec: NetClassSpec, params: NetParams, x) -> np.ndarray | float:
    """Evaluate the transformed, masked network at x (a point or a batch)."""
    _check_dims(spec, params)
    xb, single = _as_batch(spec, x)
    raw, _ = _raw_eval(spec, params, xb)
    out = _apply_transform(spec, raw) * _mask(spec, xb)
    return float(out[0]) if single else out


def net_param_gradient(spec: NetClassSpec, params: NetParams,
                       x) -> NetParams:
    """Exact gradient of the transformed, masked output w.r.t. each
    parameter, at a single point x."""
    g = weighted_param_gradient(spec, params, np.asarray(x, dtype=float)[None, :],
                                np.ones(1))
    return g


def weighted_param_gradient(spec: NetClassSpec, params: NetParams,
                            x: np.ndarray, weights: np.ndarray) -> NetParams:
    """Gradient of sum_i weights_i * g(x_i) over all parameters.

    Transform saturation and the support mask zero the corresponding rows.
    Accumulation order is fixed by the underlying BLAS reductions, so a
    given build is run-to-run deterministic.
    """
    _check_dims(spec, params)
    xb, _ = _as_batch(spec, x)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (xb.shape[0],):
        raise DimensionMismatch("weights must match the batch length")
    phi, dphi = _ACTIVATIONS[spec.activation]
    raw, z = _raw_eval(spec, params, xb)
    u = weights * _transform_deriv(spec, raw) * _mask(spec, xb)  # (n,)
    act = phi(z)          # (n, k)
    dact = dphi(z)        # (n, k)
    grad_beta = act.T @ u
    scaled = dact * (u[:, None] * params.beta[None, :])  # (n, k)
    grad_w = scaled.T @ xb
    grad_b = scaled.sum(axis=0)
    grad_w0 = xb.T @ u
    grad_b0 = float(u.sum())
    return NetParams(grad_beta, grad_w, grad_b, grad_w0, grad_b0)


def l1_ball_project(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection of v onto the l1 ball of the given radius,
    by sort-and-soft-threshold."""
    if radius < 0:
        raise InvalidRequest("radius must be nonnegative")
    v = np.asarray(v, dtype=float)
    if radius == 0.0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    # Duchi et al. soft-threshold level on the sorted magnitudes
    s = np.sort(a)[::-1]
    cumsum = np.cumsum(s)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(s > (cumsum - radius) / idx)[0][-1]
    theta = (cumsum[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def _l1_project_rows(m: np.ndarray, radius: float) -> np.ndarray:
    """Row-wise l1 ball projection, vectorized over the rows."""
    if radius == 0.0:
        return np.zeros_like(m)
    a = np.abs(m)
    over = a.sum(axis=1) > radius
    if not np.any(over):
        return m.copy()
    out = m.copy()
    sub = a[over]
    s = -np.sort(-sub, axis=1)
    cumsum = np.cumsum(s, axis=1)
    idx = np.arange(1, m.shape[1] + 1)
    cond = s > (cumsum - radius) / idx
    rho = m.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = (cumsum[np.arange(sub.shape[0]), rho] - radius) / (rho + 1.0)
    out[over] = np.sign(m[over]) * np.maximum(sub - theta[:, None], 0.0)
    return out


def project(spec: NetClassSpec, params: NetParams) -> NetParams:
    """Exact Euclidean projection onto the spec's feasible set."""
    _check_dims(spec, params)
    a1, a2, a3, a4 = spec.bounds
    w = _l1_project_rows(params.w, a1)
    return NetParams(
        beta=np.clip(params.beta, -a2, a2),
        w=w,
        b=np.clip(params.b, -a1, a1),
        w0=l1_ball_project(params.w0, a4),
        b0=float(np.clip(params.b0, -a3, a3)),
    )


def is_feasible(spec: NetClassSpec, params: NetParams,
                tol: float = 1e-9) -> bool:
    a1, a2, a3, a4 = spec.bounds
    return bool(
        np.all(np.abs(params.w).sum(axis=1) <= a1 + tol)
        and np.all(np.abs(params.b) <= a1 + tol)
        and np.all(np.abs(params.beta) <= a2 + tol)
        and abs(params.b0) <= a3 + tol
        and np.abs(params.w0).sum() <= a4 + tol
    )


@dataclass(frozen=True)
class ScheduleRequest:
    """Request for the per-divergence (k, regime) class schedule.

    regime is "unknown_m" or "known_m" (the latter requires M). support is
    "compact" (no mask), "ball" with an explicit radius, or "ball_auto"
    which sets the mask radius to max(1, M) + c1 * sqrt(log k).
    """

    kind: DivergenceKind
    k: int
    d: int
    regime: str = "unknown_m"
    M: Optional[float] = None
    support: str = "compact"
    ball_radius: Optional[float] = None
    smoothness: float = 1.0   # TV only, in (0, 1]
    c0: float = 1.0           # TV bound prefactor
    c1: float = 1.0           # mask-radius prefactor
    activation: str = "relu"

    def __post_init__(self):
        if self.k < 2:
            raise InvalidRequest("schedule requires k >= 2 so that log k > 0")
        if self.regime not in ("unknown_m", "known_m"):
            raise InvalidRequest(f"unknown regime {self.regime!r}")
        if self.regime == "known_m" and (self.M is None or self.M <= 0):
            raise InvalidRequest("known_m regime requires M > 0")
        if self.support not in ("compact", "ball", "ball_auto"):
            raise InvalidRequest(f"unknown support {self.support!r}")
        if self.support == "ball" and (
            self.ball_radius is None or self.ball_radius <= 0
        ):
            raise InvalidRequest("ball support requires a positive radius")
        if not (0.0 < self.smoothness <= 1.0):
            raise InvalidRequest("smoothness must lie in (0, 1]")
        if self.activation not in _ACTIVATIONS:
            raise InvalidRequest(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class ScheduleResult:
    """Materialized schedule: the spec plus the numbers that produced it."""

    spec: NetClassSpec
    m_k: float
    t_k: Optional[float] = None
    r_k: Optional[float] = None

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "m_k": self.m_k,
                "t_k": self.t_k, "r_k": self.r_k}


def class_schedule(req: ScheduleRequest) -> ScheduleResult:
    """Map (divergence, width, regime) to a concrete class spec.

    Widths enter through natural logs throughout. Known-M regimes replace
    the growing bound by M itself; the TV bound grows polynomially in k
    with exponent (d+2)/(2(s+d+2)) regardless of regime.
    """
    k, d, kind = req.k, req.d, req.kind
    logk = math.log(k)
    t_k: Optional[float] = None

    if kind in (DivergenceKind.KL, DivergenceKind.KL_DV):
        m_k = req.M if req.regime == "known_m" else max(math.log(logk), 1.0)
        transform = "identity"
    elif kind is DivergenceKind.CHI2:
        m_k = req.M if req.regime == "known_m" else logk
        transform = "identity"
    elif kind is DivergenceKind.H2:
        if req.regime == "known_m":
            if req.M <= 1.0:
                raise InvalidRequest("H2 known_m schedule requires M > 1")
            m_k, t_k = req.M, req.M ** -0.5
        else:
            m_k, t_k = logk, 1.0 / logk
        transform = "cap"
    else:  # TV
        exponent = (d + 2.0) / (2.0 * (req.smoothness + d + 2.0))
        m_k = req.c0 * k ** exponent
        transform = "clip"

    if req.support == "compact":
        r_k = None
        mask = math.inf
    elif req.support == "ball":
        r_k = req.ball_radius
        mask = r_k
    else:  # ball_auto
        base = max(1.0, req.M) if req.M is not None else 1.0
        r_k = base + req.c1 * math.sqrt(logk)
        mask = r_k

    kw = dict(transform=transform, cap_t=t_k, mask_radius=mask)
    if req.activation == "sigmoid":
        spec = NetClassSpec.sigmoid_family(d, k, m_k, **kw)
    else:
        spec = NetClassSpec.relu_family(d, k, m_k, **kw)
    return ScheduleResult(spec=spec, m_k=m_k, t_k=t_k, r_k=r_k)


def _uniform_l1_ball(rng: np.random.Generator, d: int,
                     radius: float) -> np.ndarray:
    """Uniform draw from the l1 ball: exponential simplex point, random
    signs, and a radial factor u^(1/d)."""
    if radius == 0.0:
        return np.zeros(d)
    e = rng.exponential(size=d)
    simplex = e / e.sum()
    signs = rng.choice([-1.0, 1.0], size=d)
    radial = rng.uniform() ** (1.0 / d)
    return radius * radial * signs * simplex


def init_params(spec: NetClassSpec, rng: np.random.Generator) -> NetParams:
    """Draw feasible parameters uniformly on their feasible intervals."""
    a1, a2, a3, a4 = spec.bounds
    w = np.vstack([_uniform_l1_ball(rng, spec.d, a1) for _ in range(spec.k)])
    return NetParams(
        beta=rng.uniform(-a2, a2, size=spec.k) if a2 > 0 else np.zeros(spec.k),
        w=w,
        b=rng.uniform(-a1, a1, size=spec.k) if a1 > 0 else np.zeros(spec.k),
        w0=_uniform_l1_ball(rng, spec.d, a4),
        b0=float(rng.uniform(-a3, a3)) if a3 > 0 else 0.0,
    )
