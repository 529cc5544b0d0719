"""The four divergence kinds plus the Donsker-Varadhan KL variant.

Per-point algebra only: measurement functions h, their derivatives, and the
optimal potentials attaining each variational supremum. The DV variant has no
h; its log-mean-exp objective lives in :mod:`divest.estimator`.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError, UnsupportedKind

# outputs this close to 1 are treated as the H2 singularity
H2_GUARD = 1e-12


class DivergenceKind(enum.Enum):
    KL = "kl"
    KL_DV = "kl-dv"
    CHI2 = "chi2"
    H2 = "h2"
    TV = "tv"

    @classmethod
    def from_string(cls, s: str) -> "DivergenceKind":
        for kind in cls:
            if kind.value == s:
                return kind
        raise UnsupportedKind(f"unknown divergence tag {s!r}")


def _check_admissible(kind: DivergenceKind, x) -> None:
    if kind is DivergenceKind.KL_DV:
        raise UnsupportedKind("KL_DV has no measurement function h")
    if kind is DivergenceKind.H2 and np.any(np.asarray(x) >= 1.0 - H2_GUARD):
        raise DomainError("h for H2 requires x < 1")


def h_value(kind: DivergenceKind, x):
    """Measurement function h(x); accepts scalars or arrays."""
    _check_admissible(kind, x)
    x = np.asarray(x, dtype=float)
    if kind is DivergenceKind.KL:
        out = np.expm1(x)
    elif kind is DivergenceKind.CHI2:
        out = x + x * x / 4.0
    elif kind is DivergenceKind.H2:
        out = x / (1.0 - x)
    else:  # TV
        out = x
    return out if out.ndim else float(out)


def h_derivative(kind: DivergenceKind, x):
    """Derivative h'(x) on the same admissible range as :func:`h_value`."""
    _check_admissible(kind, x)
    x = np.asarray(x, dtype=float)
    if kind is DivergenceKind.KL:
        out = np.exp(x)
    elif kind is DivergenceKind.CHI2:
        out = 1.0 + x / 2.0
    elif kind is DivergenceKind.H2:
        out = (1.0 - x) ** -2.0
    else:  # TV
        out = np.ones_like(x)
    return out if out.ndim else float(out)


def optimal_potential(kind: DivergenceKind, r):
    """Potential attaining the variational supremum, as a function of the
    density ratio r = p/q at a point.

    KL_DV shares the KL potential up to an additive constant, so it is
    rejected here; callers should pass KL.
    """
    if kind is DivergenceKind.KL_DV:
        raise UnsupportedKind("use KL's potential for the DV variant")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("density ratio must be positive")
    if kind is DivergenceKind.KL:
        out = np.log(r)
    elif kind is DivergenceKind.CHI2:
        out = 2.0 * (r - 1.0)
    elif kind is DivergenceKind.H2:
        out = 1.0 - r ** -0.5
    else:  # TV: +1 on {p >= q}, -1 elsewhere; ties take +1
        out = np.where(r >= 1.0, 1.0, -1.0)
    return out if out.ndim else float(out)


def admissible_potential_range(kind: DivergenceKind) -> tuple[float, float]:
    """Open interval of x on which h is finite (for test sampling)."""
    if kind is DivergenceKind.H2:
        return (-math.inf, 1.0)
    return (-math.inf, math.inf)
