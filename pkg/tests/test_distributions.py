import math

import numpy as np
import pytest
from scipy import stats

from divest import (DomainError, Gaussian, GaussianJoint2d, InvalidRho,
                    InvalidSigma, MarginalProduct2d, Mixture, SpecParseError,
                    TruncatedGaussian, Uniform, derive_seed,
                    integration_window, log_ratio, make_rng, mine_pair,
                    parse_distribution, sample)


def quad_mass(dist, lo=-12.0, hi=13.0, n=200_001):
    xs = np.linspace(lo, hi, n)[:, None]
    return np.trapezoid(dist.density(xs), xs[:, 0])


# --- seeds -----------------------------------------------------------------

def test_derive_seed_stable_values():
    # frozen: the derivation must never change across releases
    assert derive_seed(0, "x") == derive_seed(0, "x")
    assert derive_seed(0, "x") != derive_seed(0, "y")
    assert derive_seed(0, "a", 1) != derive_seed(0, "a", 2)
    assert derive_seed(1, "x") != derive_seed(0, "x")


def test_sample_deterministic():
    g = Gaussian(mean=np.zeros(2), sigma=1.0)
    a = sample(g, 100, 42)
    b = sample(g, 100, 42)
    assert np.array_equal(a.points, b.points)
    assert a.source == "gauss:d=2,mean=0;0,sigma=1"
    c = sample(g, 100, 43)
    assert not np.array_equal(a.points, c.points)


# --- densities normalize ----------------------------------------------------

def test_gaussian_density_normalizes():
    g = Gaussian(mean=np.array([0.3]), sigma=0.7)
    assert quad_mass(g) == pytest.approx(1.0, abs=1e-8)


def test_truncated_gaussian_density_normalizes():
    t = TruncatedGaussian(mean=np.array([0.4]), sigma=0.2)
    xs = np.linspace(0.0, 1.0, 100_001)[:, None]
    mass = np.trapezoid(t.density(xs), xs[:, 0])
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert t.density(np.array([[1.5]]))[0] == 0.0


def test_truncated_gaussian_normalizer_matches_parent_cdf():
    t = TruncatedGaussian(mean=np.array([0.4]), sigma=0.2)
    want = stats.norm.cdf(1.0, 0.4, 0.2) - stats.norm.cdf(0.0, 0.4, 0.2)
    assert t.normalizer == pytest.approx(want, abs=1e-12)


def test_mixture_density_normalizes():
    m = Mixture(components=(Gaussian(np.array([0.0]), 1.0),
                            Gaussian(np.array([2.0]), 0.5)),
                weights=np.array([0.3, 0.7]))
    assert quad_mass(m) == pytest.approx(1.0, abs=1e-8)


def test_joint_density_normalizes_on_grid():
    j = GaussianJoint2d(rho=0.6)
    xs = np.linspace(-8, 8, 801)
    gx, gy = np.meshgrid(xs, xs)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    mass = j.density(pts).reshape(gx.shape)
    total = np.trapezoid(np.trapezoid(mass, xs, axis=1), xs)
    assert total == pytest.approx(1.0, abs=1e-6)


# --- sampling matches the density ------------------------------------------

def test_truncated_gaussian_sampling_gof():
    t = TruncatedGaussian(mean=np.array([0.4]), sigma=0.2)
    pts = sample(t, 20_000, 7).points[:, 0]
    assert pts.min() >= 0.0 and pts.max() <= 1.0
    edges = np.linspace(0.0, 1.0, 21)
    observed, _ = np.histogram(pts, edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    probs = t.density(centers[:, None]) * np.diff(edges)
    probs = probs / probs.sum()
    chi2 = ((observed - 20_000 * probs) ** 2 / (20_000 * probs)).sum()
    # 19 dof; 43.8 is the 0.1% quantile
    assert chi2 < 43.8


def test_joint_sample_correlation():
    j = GaussianJoint2d(rho=0.5)
    pts = sample(j, 50_000, 3).points
    assert np.corrcoef(pts.T)[0, 1] == pytest.approx(0.5, abs=0.02)


def test_mixture_sampling_proportions():
    m = Mixture(components=(Uniform(1), TruncatedGaussian(np.array([0.5]),
                                                          0.05)),
                weights=np.array([0.5, 0.5]))
    pts = sample(m, 40_000, 11).points
    # half the mass concentrates near 0.5
    frac = np.mean(np.abs(pts[:, 0] - 0.5) < 0.15)
    assert frac == pytest.approx(0.5 + 0.5 * 0.15 * 2, abs=0.03)


def test_rejection_stall():
    from divest import RejectionStall
    t = TruncatedGaussian(mean=np.array([50.0]), sigma=0.5)
    with pytest.raises(RejectionStall):
        sample(t, 10, 0)


# --- log ratio ---------------------------------------------------------------

def test_log_ratio_antisymmetry():
    p = Gaussian(np.array([0.0]), 1.0)
    q = Gaussian(np.array([1.0]), 1.5)
    x = np.linspace(-3, 3, 50)[:, None]
    assert np.allclose(log_ratio(p, q, x), -np.asarray(log_ratio(q, p, x)))


def test_log_ratio_identical_is_zero():
    p = TruncatedGaussian(np.array([0.4]), 0.2)
    x = np.linspace(0.1, 0.9, 9)[:, None]
    assert np.allclose(log_ratio(p, p, x), 0.0)


def test_log_ratio_rejects_support_violation():
    p = Gaussian(np.array([0.5]), 1.0)   # positive everywhere
    q = Uniform(1)                       # zero outside [0, 1]
    with pytest.raises(DomainError):
        log_ratio(p, q, np.array([[2.0]]))


def test_log_ratio_both_zero_convention():
    p = Uniform(1)
    q = TruncatedGaussian(np.array([0.4]), 0.2)
    assert log_ratio(p, q, np.array([[3.0]])) == pytest.approx(0.0)


# --- parameter validation -----------------------------------------------------

def test_invalid_parameters():
    with pytest.raises(InvalidSigma):
        Gaussian(np.array([0.0]), 0.0)
    with pytest.raises(InvalidSigma):
        TruncatedGaussian(np.array([0.0]), -1.0)
    with pytest.raises(InvalidRho):
        GaussianJoint2d(1.0)
    with pytest.raises(DomainError):
        Mixture(components=(Uniform(1),), weights=np.array([0.5]))
    with pytest.raises(DomainError):
        Mixture(components=(Uniform(1), Uniform(2)),
                weights=np.array([0.5, 0.5]))


def test_mine_pair_dimensions():
    j, pr = mine_pair(0.3)
    assert j.d == pr.d == 2
    assert j.rho == pr.rho == 0.3


def test_integration_window():
    lo, hi = integration_window(Uniform(1), TruncatedGaussian(
        np.array([0.4]), 0.2))
    assert np.allclose(lo, 0.0) and np.allclose(hi, 1.0)
    lo, hi = integration_window(Gaussian(np.array([1.0]), 2.0))
    assert lo[0] == pytest.approx(1.0 - 16.0)
    assert hi[0] == pytest.approx(1.0 + 16.0)


# --- spec parsing -------------------------------------------------------------

def test_parse_gaussian():
    g = parse_distribution("gauss:d=2,mean=0;1,sigma=0.5")
    assert isinstance(g, Gaussian)
    assert g.d == 2 and g.sigma == 0.5
    assert np.allclose(g.mean, [0.0, 1.0])


def test_parse_scalar_mean_broadcast():
    g = parse_distribution("gauss:d=3,mean=0,sigma=1")
    assert np.allclose(g.mean, 0.0) and g.d == 3


def test_parse_uniform_tgauss_mine():
    assert isinstance(parse_distribution("uniform:d=2"), Uniform)
    t = parse_distribution("tgauss:d=1,mean=0.4,sigma=0.2")
    assert isinstance(t, TruncatedGaussian)
    assert isinstance(parse_distribution("minejoint:rho=0.5"),
                      GaussianJoint2d)
    assert isinstance(parse_distribution("mineprod:rho=0.5"),
                      MarginalProduct2d)


def test_parse_mixture_nested():
    m = parse_distribution(
        "mix:w=0.3;0.7,c1=(uniform:d=1),c2=(tgauss:d=1,mean=0.5,sigma=0.1)")
    assert isinstance(m, Mixture)
    assert len(m.components) == 2
    assert np.allclose(m.weights, [0.3, 0.7])


def test_parse_roundtrips_spec_id():
    for text in ("gauss:d=1,mean=0,sigma=1", "uniform:d=2",
                 "tgauss:d=1,mean=0.4,sigma=0.2", "minejoint:rho=0.5"):
        dist = parse_distribution(text)
        again = parse_distribution(dist.spec_id)
        assert again.spec_id == dist.spec_id


def test_parse_errors_carry_position():
    with pytest.raises(SpecParseError):
        parse_distribution("gauss")
    with pytest.raises(SpecParseError) as err:
        parse_distribution("gauss:d=1,men=0,sigma=1")
    assert "mean" in str(err.value)
    with pytest.raises(SpecParseError) as err:
        parse_distribution("gauss:d=1,mean=zz,sigma=1")
    assert "number" in str(err.value)
    with pytest.raises(SpecParseError):
        parse_distribution("cauchy:d=1")
