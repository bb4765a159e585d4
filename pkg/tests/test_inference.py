"""Confidence ellipsoids and marginal intervals."""

import math

import numpy as np
import pytest

from tailjoint.covariance import (
    estimate_bias_qb,
    estimate_v_laws,
    estimate_v_star_laws,
    estimate_v_star_qb,
)
from tailjoint.errors import DomainError
from tailjoint.inference import (
    ConfidenceRegion,
    marginal_interval_laws,
    marginal_interval_qb,
    region_boundary_points,
    region_contains,
    region_extreme_laws,
    region_extreme_qb,
    region_intermediate_laws,
    region_intermediate_qb,
)
from tailjoint.marginal import estimate_margins
from tailjoint.numerics import SpdMatrix, chi_square_quantile, std_normal_quantile
from tailjoint.sample import MultivariateSample

TAU, TAU_PRIME, ALPHA = 0.9, 0.999, 0.05


def fixture_sample(n=400, d=2, seed=1):
    rng = np.random.default_rng(seed)
    values = rng.pareto(4.0, size=(n, d)) + 1.0
    # mild common factor so tail dependence is nontrivial
    values[:, 1:] += 0.3 * values[:, [0]]
    return MultivariateSample(values, tuple(f"X{j}" for j in range(d)))


def one_column(n=400, seed=2):
    rng = np.random.default_rng(seed)
    return MultivariateSample(
        (rng.pareto(4.0, size=(n, 1)) + 1.0), ("X0",)
    )


ALL_BUILDERS = [
    lambda s, naive=False: region_intermediate_laws(s, TAU, ALPHA, naive=naive),
    lambda s, naive=False: region_intermediate_qb(s, TAU, ALPHA, naive=naive),
    lambda s, naive=False: region_extreme_laws(s, TAU, TAU_PRIME, ALPHA, naive=naive),
    lambda s, naive=False: region_extreme_qb(s, TAU, TAU_PRIME, ALPHA, naive=naive),
]


class TestRegionBasics:
    @pytest.mark.parametrize("build", ALL_BUILDERS)
    def test_shifted_center_contained(self, build):
        region = build(fixture_sample())
        if region.scale == "log":
            point = region.center * np.exp(region.bias_shift)
        else:
            point = region.center * (1.0 + region.bias_shift)
        assert region_contains(region, point)

    @pytest.mark.parametrize("build", ALL_BUILDERS)
    def test_far_point_excluded(self, build):
        region = build(fixture_sample())
        assert not region_contains(region, region.center * 10.0)

    @pytest.mark.parametrize("build", ALL_BUILDERS)
    def test_alpha_nesting(self, build):
        s = fixture_sample()
        wide = build(s)
        # smaller alpha gives a larger radius: same shape, nested regions
        assert region_intermediate_laws(s, TAU, 0.01).radius > region_intermediate_laws(
            s, TAU, 0.10
        ).radius
        boundary = region_boundary_points(wide)
        bigger = ConfidenceRegion(
            kind=wide.kind,
            scale=wide.scale,
            alpha=ALPHA / 5.0,
            tau=wide.tau,
            tau_prime=wide.tau_prime,
            center=wide.center,
            bias_shift=wide.bias_shift,
            shape=wide.shape,
            radius=wide.radius * 1.5,
        )
        assert all(region_contains(bigger, z) for z in boundary)

    def test_radius_formula(self):
        s = fixture_sample()
        inter = region_intermediate_laws(s, TAU, ALPHA)
        expected = math.sqrt(chi_square_quantile(0.95, 2) / (s.n * (1.0 - TAU)))
        assert inter.radius == pytest.approx(expected, rel=1e-12)
        ext = region_extreme_laws(s, TAU, TAU_PRIME, ALPHA)
        log_dn = math.log((1.0 - TAU) / (1.0 - TAU_PRIME))
        assert ext.radius == pytest.approx(expected * log_dn, rel=1e-12)

    def test_dimension_mismatch(self):
        region = ALL_BUILDERS[0](fixture_sample())
        with pytest.raises(DomainError):
            region_contains(region, [1.0, 2.0, 3.0])

    def test_log_scale_positive_point_required(self):
        region = region_extreme_qb(fixture_sample(), TAU, TAU_PRIME, ALPHA)
        with pytest.raises(DomainError):
            region_contains(region, [-1.0, 1.0])


class TestBoundaryPoints:
    @pytest.mark.parametrize("build", ALL_BUILDERS)
    def test_boundary_satisfies_membership(self, build):
        region = build(fixture_sample())
        pts = region_boundary_points(region)
        assert pts.shape == (512, 2)
        assert all(region_contains(region, z) for z in pts)

    def test_constructed_eigen_boundary_point(self):
        s = fixture_sample()
        region = region_intermediate_laws(s, TAU, ALPHA)
        vals, vecs = np.linalg.eigh(region.shape.entries)
        w = region.radius * math.sqrt(vals[-1]) * vecs[:, -1]
        z = region.center * (1.0 + w + region.bias_shift)
        residual = z / region.center - 1.0 - region.bias_shift
        form = region.shape.quadratic_form(residual, "check")
        assert form == pytest.approx(region.radius**2, rel=1e-10)
        assert region_contains(region, z)

    def test_three_dimensional_mesh(self):
        region = ALL_BUILDERS[2](fixture_sample(d=3))
        pts = region_boundary_points(region)
        assert pts.shape == (64 * 64, 3)
        assert all(region_contains(region, z) for z in pts)

    def test_unsupported_dimension(self):
        region = ALL_BUILDERS[0](fixture_sample(d=4))
        with pytest.raises(DomainError):
            region_boundary_points(region)


class TestRegionShapes:
    def test_adjusted_shapes_are_plugin_estimates(self):
        s = fixture_sample()
        assert np.allclose(
            region_intermediate_laws(s, TAU, ALPHA).shape.entries,
            estimate_v_laws(s, TAU).entries,
        )
        assert np.allclose(
            region_extreme_laws(s, TAU, TAU_PRIME, ALPHA).shape.entries,
            estimate_v_star_laws(s, TAU, TAU_PRIME).entries,
        )
        assert np.allclose(
            region_extreme_qb(s, TAU, TAU_PRIME, ALPHA).shape.entries,
            estimate_v_star_qb(s, TAU, TAU_PRIME).entries,
        )

    def test_naive_shapes_are_independence_diagonals(self):
        s = fixture_sample()
        g = estimate_margins(s, TAU).gamma_hat
        laws = region_intermediate_laws(s, TAU, ALPHA, naive=True)
        assert np.allclose(
            laws.shape.entries, np.diag(2.0 * g**3 / (1.0 - 2.0 * g))
        )
        qb = region_intermediate_qb(s, TAU, ALPHA, naive=True)
        assert np.allclose(qb.shape.entries, np.diag(2.0 * g**2 / (1.0 - 2.0 * g)))
        for ext in (
            region_extreme_laws(s, TAU, TAU_PRIME, ALPHA, naive=True),
            region_extreme_qb(s, TAU, TAU_PRIME, ALPHA, naive=True),
        ):
            assert np.allclose(ext.shape.entries, np.diag(g**2))
            assert np.allclose(ext.bias_shift, 0.0)

    def test_qb_bias_shift(self):
        s = fixture_sample()
        region = region_intermediate_qb(s, TAU, ALPHA)
        bias = estimate_bias_qb(s, TAU).components
        root = math.sqrt(s.n * (1.0 - TAU))
        assert np.allclose(region.bias_shift, -bias / root)
        ext = region_extreme_laws(s, TAU, TAU_PRIME, ALPHA)
        assert np.allclose(ext.bias_shift, bias / root)
        assert np.allclose(
            region_extreme_qb(s, TAU, TAU_PRIME, ALPHA).bias_shift, 0.0
        )


class TestScaleEquivariance:
    @pytest.mark.parametrize("build", ALL_BUILDERS)
    def test_centers_and_membership_scale(self, build):
        s = fixture_sample()
        c = 3.5
        r1, r2 = build(s), build(s.scaled(c))
        assert np.allclose(r2.center, c * r1.center, rtol=1e-10)
        assert r2.radius == pytest.approx(r1.radius, rel=1e-12)
        boundary = region_boundary_points(r1)
        for z in boundary[::64]:
            assert region_contains(r2, c * z)
        outside = r1.center * 10.0
        assert not region_contains(r2, c * outside)


class TestMarginalIntervals:
    def test_d1_region_equals_interval(self):
        s = one_column()
        for method, region_fn, interval_fn in (
            ("laws", region_extreme_laws, marginal_interval_laws),
            ("qb", region_extreme_qb, marginal_interval_qb),
        ):
            for naive in (False, True):
                region = region_fn(s, TAU, TAU_PRIME, ALPHA, naive=naive)
                interval = interval_fn(s, TAU, TAU_PRIME, 0, ALPHA, naive=naive)
                # chi-square(1) radius on the log scale equals the normal
                # two-sided construction
                shift = region.bias_shift[0]
                half = region.radius * math.sqrt(region.shape.entries[0, 0])
                lower = region.center[0] * math.exp(shift - half)
                upper = region.center[0] * math.exp(shift + half)
                assert interval.lower == pytest.approx(lower, rel=1e-12), (method, naive)
                assert interval.upper == pytest.approx(upper, rel=1e-12), (method, naive)

    def test_scalar_endpoint_formula(self):
        s = one_column()
        interval = marginal_interval_qb(s, TAU, TAU_PRIME, 0, ALPHA)
        from tailjoint.marginal import extrapolate_expectile_qb

        center = extrapolate_expectile_qb(s.column(0), TAU, TAU_PRIME)
        log_dn = math.log((1.0 - TAU) / (1.0 - TAU_PRIME))
        root = math.sqrt(s.n * (1.0 - TAU))
        var = estimate_v_star_qb(s, TAU, TAU_PRIME).entries[0, 0]
        half = log_dn / root * math.sqrt(var) * std_normal_quantile(1.0 - ALPHA / 2.0)
        assert interval.lower == pytest.approx(center * math.exp(-half), rel=1e-12)
        assert interval.upper == pytest.approx(center * math.exp(half), rel=1e-12)

    def test_multiplicative_symmetry(self):
        s = one_column()
        interval = marginal_interval_laws(s, TAU, TAU_PRIME, 0, ALPHA)
        from tailjoint.marginal import extrapolate_expectile_laws

        center = extrapolate_expectile_laws(s.column(0), TAU, TAU_PRIME)
        shift = estimate_bias_qb(s, TAU).components[0] / math.sqrt(s.n * (1.0 - TAU))
        shifted = center * math.exp(shift)
        assert interval.upper / shifted == pytest.approx(
            shifted / interval.lower, rel=1e-12
        )

    def test_qb_interval_contains_point_estimate(self):
        s = one_column()
        from tailjoint.marginal import extrapolate_expectile_qb

        center = extrapolate_expectile_qb(s.column(0), TAU, TAU_PRIME)
        interval = marginal_interval_qb(s, TAU, TAU_PRIME, 0, ALPHA)
        assert interval.contains(center)

    def test_width_ratio_tracks_variances(self):
        s = one_column()
        laws = marginal_interval_laws(s, TAU, TAU_PRIME, 0, ALPHA)
        qb = marginal_interval_qb(s, TAU, TAU_PRIME, 0, ALPHA)
        v_laws = estimate_v_star_laws(s, TAU, TAU_PRIME).entries[0, 0]
        v_qb = estimate_v_star_qb(s, TAU, TAU_PRIME).entries[0, 0]
        assert math.log(laws.upper / laws.lower) / math.log(
            qb.upper / qb.lower
        ) == pytest.approx(math.sqrt(v_laws / v_qb), rel=1e-10)

    def test_interval_scaling(self):
        s = one_column()
        c = 4.0
        i1 = marginal_interval_laws(s, TAU, TAU_PRIME, 0, ALPHA)
        i2 = marginal_interval_laws(s.scaled(c), TAU, TAU_PRIME, 0, ALPHA)
        assert i2.lower == pytest.approx(c * i1.lower, rel=1e-10)
        assert i2.upper == pytest.approx(c * i1.upper, rel=1e-10)


class TestValidation:
    def test_bad_alpha(self):
        with pytest.raises(DomainError):
            region_intermediate_laws(fixture_sample(), TAU, 0.0)

    def test_bad_levels(self):
        from tailjoint.errors import LevelError

        with pytest.raises(LevelError):
            region_extreme_laws(fixture_sample(), 0.999, 0.9, ALPHA)

    def test_region_invariants(self):
        with pytest.raises(DomainError):
            ConfidenceRegion(
                kind="x",
                scale="log",
                alpha=0.05,
                tau=0.9,
                tau_prime=0.999,
                center=np.array([-1.0, 2.0]),
                bias_shift=np.zeros(2),
                shape=SpdMatrix.from_array(np.eye(2)),
                radius=1.0,
            )
        with pytest.raises(DomainError):
            ConfidenceRegion(
                kind="x",
                scale="linear",
                alpha=0.05,
                tau=0.9,
                tau_prime=None,
                center=np.array([1.0, 2.0]),
                bias_shift=np.zeros(2),
                shape=SpdMatrix.from_array(np.eye(2)),
                radius=0.0,
            )
