"""Bowen balls, tracking volumes and the pressure estimators."""

import math

import numpy as np
import pytest

from hypdim.errors import DegenerateCurveError, GridTooCoarseError, IncompatibleLabelError
from hypdim.models import (
    Potential,
    build_cantor_repeller,
    build_cat_map,
    build_doubling_map,
    build_golden_mean,
    build_linear_horseshoe,
    potential,
)
from hypdim.pressure import (
    BowenBallSpec,
    VolumeCurve,
    bowen_ball_contains,
    default_epsilon,
    distance_to_repeller,
    neighborhood_volume,
    pressure_from_partition_sums,
    pressure_from_volume_growth,
    sample_local_stable_set,
    volume_curve,
)
from hypdim.symbolic import pressure_spectral


class TestBowenBalls:
    def test_center_always_member(self):
        m = build_doubling_map(2)
        for k in (1, 3, 8):
            spec = BowenBallSpec([0.3], 0.05, k)
            assert bowen_ball_contains(m, spec, [0.3])

    def test_doubling_expansion_separates(self):
        m = build_doubling_map(2)
        # distances grow like 0.05 * 2^i; 0.05 * 2^3 = 0.4 > 0.1
        assert bowen_ball_contains(m, BowenBallSpec([0.0], 0.1, 1), [0.05])
        assert not bowen_ball_contains(m, BowenBallSpec([0.0], 0.1, 4), [0.05])

    def test_horseshoe_stable_direction_contracts(self):
        m = build_linear_horseshoe(3.0, 0.25)
        spec = BowenBallSpec([0.0, 0.0], 0.15, 12)
        assert bowen_ball_contains(m, spec, [0.0, 0.1])

    def test_escape_fails_membership(self):
        m = build_linear_horseshoe(3.0, 0.25)
        # x drifts into the gap after one step
        spec = BowenBallSpec([0.0, 0.0], 0.9, 3)
        assert not bowen_ball_contains(m, spec, [0.15, 0.0])

    def test_nesting_in_k(self):
        m = build_doubling_map(2)
        ys = np.linspace(0.0, 1.0, 37)
        for y in ys:
            inner = bowen_ball_contains(m, BowenBallSpec([0.4], 0.2, 6), [y])
            outer = bowen_ball_contains(m, BowenBallSpec([0.4], 0.2, 5), [y])
            assert not inner or outer


class TestDistanceToRepeller:
    def test_fixed_point_at_zero_distance(self):
        m = build_cantor_repeller(3, (0, 2))
        for depth in (2, 5, 9):
            assert distance_to_repeller(m, [0.0], depth) == pytest.approx(0.0, abs=1e-12)

    def test_middle_point_one_sixth(self):
        m = build_cantor_repeller(3, (0, 2))
        depth = 8
        d = distance_to_repeller(m, [0.5], depth)
        assert 1.0 / 6.0 - 3.0**-depth <= d <= 1.0 / 6.0 + 1e-12

    def test_doubling_repeller_is_everything(self):
        m = build_doubling_map(2)
        for y in (0.0, 0.31, 0.77):
            assert distance_to_repeller(m, [y], 6) == pytest.approx(0.0, abs=1e-12)

    def test_cat_map_invariant_set_fills_torus(self):
        m = build_cat_map()
        assert distance_to_repeller(m, [0.3, 0.9], 3) == 0.0


class TestVolumeCurves:
    def test_doubling_volume_is_one(self):
        m = build_doubling_map(2)
        curve = volume_curve(m, 0.1, 6, 1024)
        assert np.all(curve.volumes == 1.0)
        assert np.all(curve.bands == 0.0)

    def test_nesting_in_k_and_epsilon(self):
        m = build_cantor_repeller(3, (0, 2))
        curve = volume_curve(m, 0.05, 8, 2048)
        assert np.all(np.diff(curve.volumes) <= 1e-15)
        wider = volume_curve(m, 0.08, 8, 2048)
        assert np.all(wider.volumes >= curve.volumes - 1e-15)

    def test_grid_guard(self):
        m = build_cantor_repeller(3, (0, 2))
        with pytest.raises(GridTooCoarseError):
            volume_curve(m, 0.05, 4, 64)

    def test_refinement_within_band(self):
        m = build_cantor_repeller(3, (0, 2))
        coarse = volume_curve(m, 0.06, 5, 1 << 10)
        fine = volume_curve(m, 0.06, 5, 1 << 11)
        finer = volume_curve(m, 0.06, 5, 1 << 12)
        assert np.all(np.abs(fine.volumes - coarse.volumes) <= coarse.bands + 1e-12)
        assert np.all(fine.bands <= coarse.bands + 1e-12)
        assert np.all(finer.bands <= fine.bands + 1e-12)

    def test_thread_count_does_not_change_results(self):
        m = build_cantor_repeller(3, (0, 2))
        one = volume_curve(m, 0.05, 8, 2048, threads=1)
        four = volume_curve(m, 0.05, 8, 2048, threads=4)
        assert np.array_equal(one.volumes, four.volumes)
        assert np.array_equal(one.bands, four.bands)

    def test_neighborhood_volume_matches_curve(self):
        m = build_cantor_repeller(3, (0, 2))
        curve = volume_curve(m, 0.05, 6, 2048)
        assert neighborhood_volume(m, 0.05, 6, 2048) == curve.volumes[-1]


class TestVolumeGrowthFit:
    def test_constant_curve_gives_zero(self):
        curve = VolumeCurve(
            epsilon=0.1,
            ks=np.arange(1, 9),
            volumes=np.ones(8),
            bands=np.zeros(8),
            grid_resolution=1024,
            cover_depth=3,
        )
        est = pressure_from_volume_growth(curve)
        assert est.value == pytest.approx(0.0, abs=1e-14)

    def test_exact_geometric_decay(self):
        vols = (2.0 / 3.0) ** np.arange(1, 11)
        curve = VolumeCurve(0.05, np.arange(1, 11), vols, np.zeros(10), 4096, 4)
        est = pressure_from_volume_growth(curve, (1, 10))
        assert est.value == pytest.approx(math.log(2.0 / 3.0), abs=1e-12)
        assert est.residual < 1e-12

    def test_zero_volume_reports_minus_infinity(self):
        vols = np.array([0.5, 0.25, 0.1, 0.0, 0.0])
        curve = VolumeCurve(0.05, np.arange(1, 6), vols, np.zeros(5), 4096, 4)
        est = pressure_from_volume_growth(curve)
        assert est.value == -math.inf

    def test_window_needs_four_points(self):
        vols = (0.5) ** np.arange(1, 6)
        curve = VolumeCurve(0.05, np.arange(1, 6), vols, np.zeros(5), 4096, 4)
        with pytest.raises(DegenerateCurveError):
            pressure_from_volume_growth(curve, (1, 3))

    def test_cantor_repeller_against_spectral_oracle(self):
        m = build_cantor_repeller(3, (0, 2))
        curve = volume_curve(m, 0.05, 10, 1 << 12)
        est = pressure_from_volume_growth(curve, (4, 10))
        exact = pressure_spectral(m, potential(m, "phi"))
        assert abs(est.value - exact) < 0.1
        assert est.value <= 0.0 + est.residual
        # one-sided: the measured growth never exceeds the exact pressure
        assert est.value <= exact + 0.1
        # per-k rates decrease toward the limit
        rates = np.log(curve.volumes) / curve.ks
        assert np.all(np.diff(rates[3:]) < 0)
        assert abs(rates[-1] - exact) < 0.1


class TestPartitionSumFit:
    def test_matches_spectral_on_exact_geometric_models(self):
        cases = [
            (build_linear_horseshoe(3.0, 0.25), "phi_u"),
            (build_doubling_map(2), "phi"),
            (build_cantor_repeller(3, (0, 2)), "phi"),
        ]
        for model, label in cases:
            pot = potential(model, label)
            est = pressure_from_partition_sums(model, pot, 12)
            assert est.value == pytest.approx(
                pressure_spectral(model, pot), abs=1e-11
            )
            assert est.residual < 1e-10

    def test_golden_mean_extrapolation(self):
        m = build_golden_mean()
        est = pressure_from_partition_sums(m, Potential.zero(2), 12)
        exact = pressure_spectral(m, Potential.zero(2))
        assert abs(est.value - exact) < 1e-9
        assert abs(est.value - math.log((1 + math.sqrt(5)) / 2)) < 1e-6

    def test_cat_map_agreement(self):
        m = build_cat_map()
        pot = potential(m, "phi_u")
        est = pressure_from_partition_sums(m, pot, 12)
        assert abs(est.value - pressure_spectral(m, pot)) < 1e-9

    def test_requires_kmax_six(self):
        m = build_doubling_map(2)
        with pytest.raises(ValueError):
            pressure_from_partition_sums(m, potential(m, "phi"), 5)

    def test_curve_is_published(self):
        m = build_doubling_map(2)
        est = pressure_from_partition_sums(m, potential(m, "phi"), 8)
        assert est.curve["k"] == list(range(1, 9))
        assert est.curve["z"] == pytest.approx([1.0] * 8)


class TestStableSetSampling:
    def test_expanding_kind_rejected(self):
        with pytest.raises(IncompatibleLabelError):
            sample_local_stable_set(build_doubling_map(2), 0.05, 4)

    def test_cat_map_fills_torus(self):
        m = build_cat_map()
        cloud = sample_local_stable_set(m, 0.05, 5, samples=64)
        assert cloud.shape == (64 * 64, 2)

    def test_depth_nesting(self):
        m = build_linear_horseshoe(3.0, 0.25)
        eps = default_epsilon(m)
        shallow = sample_local_stable_set(m, eps, 6, samples=4096)
        deep = sample_local_stable_set(m, eps, 7, samples=4096)
        xs_shallow = set(np.unique(shallow[:, 0]).tolist())
        xs_deep = set(np.unique(deep[:, 0]).tolist())
        assert xs_deep <= xs_shallow

    def test_cloud_is_product_with_full_vertical_fibers(self):
        m = build_linear_horseshoe(3.0, 0.25)
        cloud = sample_local_stable_set(m, 0.05, 5, samples=2048, cross_resolution=256)
        ys = np.unique(cloud[:, 1])
        assert len(ys) == 256
        xs = np.unique(cloud[:, 0])
        assert len(cloud) == len(xs) * len(ys)

    def test_determinism(self):
        m = build_linear_horseshoe(3.0, 0.25)
        a = sample_local_stable_set(m, 0.05, 6, samples=2048)
        b = sample_local_stable_set(m, 0.05, 6, samples=2048)
        assert np.array_equal(a, b)


def test_default_epsilon_uses_half_gap():
    m = build_linear_horseshoe(3.0, 0.25)
    assert default_epsilon(m) == pytest.approx((1.0 - 2.0 / 3.0) / 2.0)
    assert default_epsilon(build_cat_map()) == 0.05
