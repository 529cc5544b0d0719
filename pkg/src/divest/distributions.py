"""Sampleable distributions with evaluable densities.

Covers isotropic Gaussians, truncated Gaussians on the unit cube, the unit
uniform, finite mixtures, and the correlated-bivariate-Gaussian joint /
product-of-marginals pair used for mutual-information estimation.

All sampling is driven by an explicit counter-based generator (Philox) so
every stochastic path is reproducible from a 64-bit seed.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (DomainError, InvalidRho, InvalidSigma, RejectionStall,
                     SpecParseError)

_LOG_2PI = math.log(2.0 * math.pi)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(root_seed: int, *path) -> int:
    """Stable 64-bit seed for a named substream of a root seed.

    Uses a keyed blake2b digest so the derivation is identical across
    processes and platforms (unlike the builtin salted str hash).
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(root_seed)).encode())
    for p in path:
        h.update(b"/")
        h.update(str(p).encode())
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class SampleBatch:
    points: np.ndarray  # (n, d)
    seed: int
    source: str

    @property
    def n(self) -> int:
        return self.points.shape[0]


class Distribution:
    """Base sampleable law with an evaluable Lebesgue density."""

    d: int
    spec_id: str

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def log_density(self, x: np.ndarray) -> np.ndarray:
        """Natural log density; -inf outside the support. x is (n, d)."""
        raise NotImplementedError

    def density(self, x) -> np.ndarray | float:
        x, single = _as_points(self.d, x)
        out = np.exp(self.log_density(x))
        return float(out[0]) if single else out


def _as_points(d: int, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and d == 1:
        x = x.reshape(1, 1)
        return x, True
    if x.ndim == 1:
        if d == 1 and x.size != 1:
            return x[:, None], False
        return x[None, :], True
    return x, False


@dataclass(frozen=True)
class Gaussian(Distribution):
    """Isotropic Gaussian N(mean, sigma^2 I_d)."""

    mean: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "mean",
                           np.atleast_1d(np.asarray(self.mean, dtype=float)))
        if self.sigma <= 0:
            raise InvalidSigma("sigma must be positive")

    @property
    def d(self) -> int:
        return self.mean.size

    @property
    def spec_id(self) -> str:
        m = ";".join(f"{v:g}" for v in self.mean)
        return f"gauss:d={self.d},mean={m},sigma={self.sigma:g}"

    def sample(self, n, rng):
        return self.mean + self.sigma * rng.standard_normal((n, self.d))

    def log_density(self, x):
        x, _ = _as_points(self.d, x)
        sq = np.sum((x - self.mean) ** 2, axis=1)
        return (-0.5 * sq / self.sigma ** 2
                - self.d * (0.5 * _LOG_2PI + math.log(self.sigma)))


@dataclass(frozen=True)
class Uniform(Distribution):
    """Uniform on the unit cube [0, 1]^d."""

    dim: int = 1

    @property
    def d(self) -> int:
        return self.dim

    @property
    def spec_id(self) -> str:
        return f"uniform:d={self.d}"

    def sample(self, n, rng):
        return rng.uniform(size=(n, self.d))

    def log_density(self, x):
        x, _ = _as_points(self.d, x)
        inside = np.all((x >= 0.0) & (x <= 1.0), axis=1)
        return np.where(inside, 0.0, -np.inf)


@dataclass(frozen=True)
class TruncatedGaussian(Distribution):
    """Isotropic Gaussian restricted and renormalized to [0, 1]^d.

    The normalizer is the box mass of the parent Gaussian, computed per
    axis from error-function differences (the isotropic case factorizes).
    Sampling is by rejection from the parent.
    """

    mean: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "mean",
                           np.atleast_1d(np.asarray(self.mean, dtype=float)))
        if self.sigma <= 0:
            raise InvalidSigma("sigma must be positive")

    @property
    def d(self) -> int:
        return self.mean.size

    @property
    def spec_id(self) -> str:
        m = ";".join(f"{v:g}" for v in self.mean)
        return f"tgauss:d={self.d},mean={m},sigma={self.sigma:g}"

    @property
    def normalizer(self) -> float:
        lo = (0.0 - self.mean) / (self.sigma * math.sqrt(2.0))
        hi = (1.0 - self.mean) / (self.sigma * math.sqrt(2.0))
        per_axis = 0.5 * (special.erf(hi) - special.erf(lo))
        return float(np.prod(per_axis))

    def sample(self, n, rng):
        parent = Gaussian(self.mean, self.sigma)
        out = np.empty((0, self.d))
        attempts = 0
        drawn = 0
        while out.shape[0] < n:
            batch = max(n, 1024)
            cand = parent.sample(batch, rng)
            attempts += batch
            keep = cand[np.all((cand >= 0.0) & (cand <= 1.0), axis=1)]
            drawn += keep.shape[0]
            out = np.vstack([out, keep])
            if attempts >= 1024 and drawn / attempts < 1e-6:
                raise RejectionStall(
                    f"acceptance rate {drawn / attempts:.2e} too low"
                )
        return out[:n]

    def log_density(self, x):
        x, _ = _as_points(self.d, x)
        inside = np.all((x >= 0.0) & (x <= 1.0), axis=1)
        parent = Gaussian(self.mean, self.sigma).log_density(x)
        return np.where(inside, parent - math.log(self.normalizer), -np.inf)


@dataclass(frozen=True)
class Mixture(Distribution):
    """Finite mixture with simplex weights."""

    components: tuple[Distribution, ...]
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights",
                           np.asarray(self.weights, dtype=float))
        if len(self.components) != self.weights.size or not self.components:
            raise DomainError("one weight per component required")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise DomainError("weights must be a probability vector")
        dims = {c.d for c in self.components}
        if len(dims) != 1:
            raise DomainError("components must share a dimension")

    @property
    def d(self) -> int:
        return self.components[0].d

    @property
    def spec_id(self) -> str:
        w = ";".join(f"{v:g}" for v in self.weights)
        cs = ",".join(f"c{i + 1}=({c.spec_id})"
                      for i, c in enumerate(self.components))
        return f"mix:w={w},{cs}"

    def sample(self, n, rng):
        counts = rng.multinomial(n, self.weights)
        parts = [c.sample(m, rng) for c, m in zip(self.components, counts)
                 if m > 0]
        points = np.vstack(parts)
        return points[rng.permutation(n)]

    def log_density(self, x):
        x, _ = _as_points(self.d, x)
        logs = np.stack([c.log_density(x) for c in self.components])
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)[:, None]
        return special.logsumexp(logs + logw, axis=0)


@dataclass(frozen=True)
class GaussianJoint2d(Distribution):
    """Bivariate standard Gaussian with correlation rho."""

    rho: float

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise InvalidRho("|rho| must be < 1")

    @property
    def d(self) -> int:
        return 2

    @property
    def spec_id(self) -> str:
        return f"minejoint:rho={self.rho:g}"

    def sample(self, n, rng):
        z = rng.standard_normal((n, 2))
        a = z[:, 0]
        b = self.rho * z[:, 0] + math.sqrt(1.0 - self.rho ** 2) * z[:, 1]
        return np.column_stack([a, b])

    def log_density(self, x):
        x, _ = _as_points(2, x)
        r = self.rho
        det = 1.0 - r * r
        quad = (x[:, 0] ** 2 - 2.0 * r * x[:, 0] * x[:, 1] + x[:, 1] ** 2) / det
        return -0.5 * quad - _LOG_2PI - 0.5 * math.log(det)


@dataclass(frozen=True)
class MarginalProduct2d(Distribution):
    """Product of the standard-normal marginals of GaussianJoint2d."""

    rho: float  # kept for pairing bookkeeping; the density ignores it

    @property
    def d(self) -> int:
        return 2

    @property
    def spec_id(self) -> str:
        return f"mineprod:rho={self.rho:g}"

    def sample(self, n, rng):
        return rng.standard_normal((n, 2))

    def log_density(self, x):
        x, _ = _as_points(2, x)
        return -0.5 * np.sum(x ** 2, axis=1) - _LOG_2PI


def mine_pair(rho: float) -> tuple[GaussianJoint2d, MarginalProduct2d]:
    """Joint law with correlation rho and the product of its marginals;
    the KL between them is the mutual information -0.5 log(1 - rho^2)."""
    return GaussianJoint2d(rho), MarginalProduct2d(rho)


def sample(dist: Distribution, n: int, seed: int) -> SampleBatch:
    """n i.i.d. draws, deterministic given the seed."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = make_rng(seed)
    return SampleBatch(points=dist.sample(n, rng), seed=seed,
                       source=dist.spec_id)


def log_ratio(p: Distribution, q: Distribution, x) -> np.ndarray | float:
    """log p(x) - log q(x), computed in log space."""
    xb, single = _as_points(p.d, x)
    lp = p.log_density(xb)
    lq = q.log_density(xb)
    bad = np.isneginf(lq) & ~np.isneginf(lp)
    if np.any(bad):
        raise DomainError("q vanishes where p is positive (mu not << nu)")
    with np.errstate(invalid="ignore"):
        out = lp - lq
    # both densities zero: ratio undefined, conventionally 0
    both = np.isneginf(lq) & np.isneginf(lp)
    out = np.where(both, 0.0, out)
    return float(out[0]) if single else out


def has_compact_support(dist: Distribution) -> bool:
    if isinstance(dist, (Uniform, TruncatedGaussian)):
        return True
    if isinstance(dist, Mixture):
        return all(has_compact_support(c) for c in dist.components)
    return False


def integration_window(*dists: Distribution) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box covering essentially all mass of every argument:
    the unit cube for compact laws, union of mean +/- 8 sigma boxes else."""
    d = dists[0].d
    lo = np.full(d, np.inf)
    hi = np.full(d, -np.inf)
    for dist in dists:
        if has_compact_support(dist):
            box_lo, box_hi = np.zeros(d), np.ones(d)
        elif isinstance(dist, Gaussian):
            box_lo = dist.mean - 8.0 * dist.sigma
            box_hi = dist.mean + 8.0 * dist.sigma
        elif isinstance(dist, (GaussianJoint2d, MarginalProduct2d)):
            box_lo, box_hi = np.full(d, -8.0), np.full(d, 8.0)
        elif isinstance(dist, Mixture):
            parts = [integration_window(c) for c in dist.components]
            box_lo = np.min([p[0] for p in parts], axis=0)
            box_hi = np.max([p[1] for p in parts], axis=0)
        else:
            raise DomainError(f"no window rule for {type(dist).__name__}")
        lo = np.minimum(lo, box_lo)
        hi = np.maximum(hi, box_hi)
    return lo, hi


# ---------------------------------------------------------------------------
# spec-string parsing: `name:key=value,...`; vectors use ';'; nested
# distributions are parenthesized, e.g. mix:w=0.5;0.5,c1=(uniform:d=1),...
# ---------------------------------------------------------------------------

def _split_top_level(body: str, sep: str) -> list[tuple[int, str]]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append((start, body[start:i]))
            start = i + 1
    parts.append((start, body[start:]))
    return parts


def _parse_vector(text: str, base: int, offset: int) -> np.ndarray:
    vals = []
    pos = 0
    for piece in text.split(";"):
        try:
            vals.append(float(piece))
        except ValueError:
            raise SpecParseError(text, base + offset + pos, "a number")
        pos += len(piece) + 1
    return np.asarray(vals)


def parse_distribution(text: str, _base: int = 0) -> Distribution:
    """Parse a CLI distribution spec string."""
    if ":" not in text:
        raise SpecParseError(text, _base + len(text), "':' after the name")
    name, body = text.split(":", 1)
    body_base = _base + len(name) + 1
    kv: dict[str, tuple[int, str]] = {}
    for off, item in _split_top_level(body, ","):
        if "=" not in item:
            raise SpecParseError(text, body_base + off, "'key=value'")
        key, val = item.split("=", 1)
        kv[key] = (off + len(key) + 1, val)

    def need(key: str) -> tuple[int, str]:
        if key not in kv:
            raise SpecParseError(text, body_base, f"'{key}=' entry")
        return kv[key]

    if name == "uniform":
        off, v = need("d")
        return Uniform(dim=int(_parse_vector(v, body_base, off)[0]))
    if name in ("gauss", "tgauss"):
        d_off, d_v = need("d")
        dim = int(_parse_vector(d_v, body_base, d_off)[0])
        m_off, m_v = need("mean")
        mean = _parse_vector(m_v, body_base, m_off)
        if mean.size == 1 and dim > 1:
            mean = np.full(dim, mean[0])
        if mean.size != dim:
            raise SpecParseError(text, body_base + m_off,
                                 f"{dim} mean components")
        s_off, s_v = need("sigma")
        sigma = float(_parse_vector(s_v, body_base, s_off)[0])
        cls = Gaussian if name == "gauss" else TruncatedGaussian
        return cls(mean=mean, sigma=sigma)
    if name in ("minejoint", "mineprod"):
        off, v = need("rho")
        rho = float(_parse_vector(v, body_base, off)[0])
        return GaussianJoint2d(rho) if name == "minejoint" \
            else MarginalProduct2d(rho)
    if name == "mix":
        w_off, w_v = need("w")
        weights = _parse_vector(w_v, body_base, w_off)
        comps = []
        for i in range(weights.size):
            off, v = need(f"c{i + 1}")
            if not (v.startswith("(") and v.endswith(")")):
                raise SpecParseError(text, body_base + off,
                                     "a parenthesized distribution")
            comps.append(parse_distribution(v[1:-1], body_base + off + 1))
        return Mixture(components=tuple(comps), weights=weights)
    raise SpecParseError(text, _base, "a known distribution name")
