"""Ground-truth divergence values.

Three routes: the Gaussian KL closed form, tensor-grid Gauss-Legendre
quadrature of the defining integral (d <= 2 only, refused above), and a
Monte-Carlo plug-in of the optimal potential that works in any dimension
and reports a delta-method standard error.

Conventions follow the variational setup elsewhere in the package: the
squared Hellinger value carries no 1/2 factor (range [0, 2]) and total
variation is the full integral of |p - q| (range [0, 2]).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .divergences import DivergenceKind, h_value, optimal_potential
from .distributions import (Distribution, Gaussian, TruncatedGaussian,
                            integration_window, log_ratio, make_rng)
from .errors import (DimensionTooHigh, DomainError, InvalidSigma,
                     NonIntegrable, UnsupportedKind)

DEFAULT_NODES_PER_AXIS = 2048


@dataclass(frozen=True)
class OracleResult:
    value: float
    method: str               # closed_form | quadrature | mc_plugin
    stderr: float = 0.0
    detail: str = ""

    def to_dict(self, kind: DivergenceKind | None = None) -> dict:
        out = {"method": self.method, "value": self.value,
               "stderr": self.stderr, "detail": self.detail}
        if kind is not None:
            out = {"kind": kind.value, **out}
        return out


def kl_gaussian_closed_form(mp, sp: float, mq, sq: float) -> OracleResult:
    """Exact KL between isotropic Gaussians N(mp, sp^2 I) and N(mq, sq^2 I)."""
    if sp <= 0 or sq <= 0:
        raise InvalidSigma("sigmas must be positive")
    mp = np.atleast_1d(np.asarray(mp, dtype=float))
    mq = np.atleast_1d(np.asarray(mq, dtype=float))
    if mp.size != mq.size:
        raise DomainError("mean dimensions differ")
    d = mp.size
    value = (d * math.log(sq / sp) - 0.5 * d
             + 0.5 * d * sp ** 2 / sq ** 2
             + float(np.sum((mp - mq) ** 2)) / (2.0 * sq ** 2))
    return OracleResult(value=value, method="closed_form",
                        detail=f"d={d}")


def _parent_sigmas(dist: Distribution) -> float | None:
    if isinstance(dist, (Gaussian, TruncatedGaussian)):
        return dist.sigma
    return None


def _check_chi2_integrable(p: Distribution, q: Distribution) -> None:
    # Gaussian chi^2 diverges unless sigma_p^2 < 2 sigma_q^2
    if isinstance(p, Gaussian) and isinstance(q, Gaussian):
        if p.sigma ** 2 >= 2.0 * q.sigma ** 2:
            raise NonIntegrable(
                "chi2 between these Gaussians is infinite "
                f"(sigma_p^2={p.sigma ** 2:g} >= 2*sigma_q^2="
                f"{2 * q.sigma ** 2:g})"
            )


def divergence_quadrature(kind: DivergenceKind, p: Distribution,
                          q: Distribution,
                          nodes_per_axis: int = DEFAULT_NODES_PER_AXIS,
                          ) -> OracleResult:
    """Gauss-Legendre tensor quadrature of the defining integral, d <= 2."""
    if kind is DivergenceKind.KL_DV:
        kind = DivergenceKind.KL
    d = p.d
    if d != q.d:
        raise DomainError("dimension mismatch between p and q")
    if d > 2:
        raise DimensionTooHigh("quadrature oracle supports d <= 2 only")
    if kind is DivergenceKind.CHI2:
        _check_chi2_integrable(p, q)

    lo, hi = integration_window(p, q)
    nodes, weights = np.polynomial.legendre.leggauss(nodes_per_axis)
    axes, wts = [], []
    for j in range(d):
        half = 0.5 * (hi[j] - lo[j])
        axes.append(0.5 * (hi[j] + lo[j]) + half * nodes)
        wts.append(half * weights)
    if d == 1:
        pts = axes[0][:, None]
        wgrid = wts[0]
    else:
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        wgrid = np.outer(wts[0], wts[1]).ravel()

    pd = np.asarray(p.density(pts))
    qd = np.asarray(q.density(pts))
    if kind is DivergenceKind.KL:
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = np.where(pd > 0, pd * (np.log(pd) - np.log(qd)), 0.0)
        if np.any(~np.isfinite(integrand)):
            raise NonIntegrable("p positive where q vanishes")
    elif kind is DivergenceKind.CHI2:
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = np.where(qd > 0, (pd - qd) ** 2 / qd,
                                 np.where(pd > 0, np.inf, 0.0))
        if np.any(~np.isfinite(integrand)):
            raise NonIntegrable("p positive where q vanishes")
    elif kind is DivergenceKind.H2:
        integrand = (np.sqrt(pd) - np.sqrt(qd)) ** 2
    else:  # TV
        integrand = np.abs(pd - qd)
    value = float(integrand @ wgrid)
    return OracleResult(value=value, method="quadrature",
                        detail=f"nodes_per_axis={nodes_per_axis}, d={d}")


def divergence_mc_plugin(kind: DivergenceKind, p: Distribution,
                         q: Distribution, n: int, seed: int) -> OracleResult:
    """Plug the optimal potential into the variational objective with n
    Monte-Carlo samples from each law; unbiased for the true divergence."""
    if kind is DivergenceKind.KL_DV:
        kind = DivergenceKind.KL
    if n < 2:
        raise DomainError("need n >= 2 for a standard error")
    rng = make_rng(seed)
    X = p.sample(n, rng)
    Y = q.sample(n, rng)
    if kind is DivergenceKind.KL:
        # stay in log space on the mu side (the ratio can be huge there)
        fX = np.asarray(log_ratio(p, q, X))
        fY = np.asarray(log_ratio(p, q, Y))
    else:
        fX = np.asarray(optimal_potential(kind, np.exp(log_ratio(p, q, X))))
        fY = np.asarray(optimal_potential(kind, np.exp(log_ratio(p, q, Y))))
    hY = np.asarray(h_value(kind, fY))
    value = float(fX.mean() - hY.mean())
    stderr = math.sqrt(fX.var(ddof=1) / n + hY.var(ddof=1) / n)
    return OracleResult(value=value, method="mc_plugin", stderr=stderr,
                        detail=f"n={n}, seed={seed}")


def oracle_value(kind: DivergenceKind, p: Distribution, q: Distribution,
                 method: str = "auto", n: int = 100_000,
                 seed: int = 0) -> OracleResult:
    """Dispatch to the best available oracle for the pair."""
    if method == "closed_form" or (
        method == "auto"
        and kind in (DivergenceKind.KL, DivergenceKind.KL_DV)
        and isinstance(p, Gaussian) and isinstance(q, Gaussian)
    ):
        if not (isinstance(p, Gaussian) and isinstance(q, Gaussian)):
            raise UnsupportedKind("closed form requires a Gaussian pair")
        if kind not in (DivergenceKind.KL, DivergenceKind.KL_DV):
            raise UnsupportedKind("closed form available for KL only")
        return kl_gaussian_closed_form(p.mean, p.sigma, q.mean, q.sigma)
    if method == "quadrature" or (method == "auto" and p.d <= 2):
        return divergence_quadrature(kind, p, q)
    if method in ("mc_plugin", "auto"):
        return divergence_mc_plugin(kind, p, q, n=n, seed=seed)
    raise DomainError(f"unknown oracle method {method!r}")
