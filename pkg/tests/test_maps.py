"""Tension and bi-tension pipelines against closed forms and cross-routes."""

import numpy as np
import pytest

from statgeo import builtins as registry
from statgeo import maps as mp
from statgeo.expressions import parse_expression
from statgeo.maps import MapDomainError, SmoothMap


@pytest.fixture(scope="module")
def scalar_map(geost, real_line):
    return SmoothMap(geost, real_line, [parse_expression("sinh(x) + cosh(y)", ["x", "y"])])


class TestTension:
    def test_identity_map_is_harmonic(self, euclid2):
        target = registry.euclidean_structure(2, half_width=4.0)
        u = SmoothMap(euclid2, target,
                      [parse_expression("x", ["x", "y"]), parse_expression("y", ["x", "y"])])
        assert np.abs(mp.tension(u, [0.7, -0.7])).max() == 0.0

    def test_paraboloid_immersion_tension_is_m_xi(self):
        from statgeo import equiaffine as ea
        from statgeo.battery import _paraboloid

        for m in (1, 2):
            pipe = ea.blaschke_pipeline(_paraboloid(m))
            u = pipe.immersion_map()
            for p in pipe.hypersurface.domain.sample(10):
                tau = mp.tension(u, p)
                assert np.abs(tau - m * pipe.xi(p)).max() <= 1e-8

    def test_line_tension_components(self, euclid1, geost):
        a, b, c, d = 0.8, -0.6, 0.2, 0.1
        u = SmoothMap(euclid1, geost, [
            parse_expression(f"{a}*x + {c}", ["x"]),
            parse_expression(f"{b}*x + {d}", ["x"]),
        ])
        tau = mp.tension(u, [0.4])
        assert tau == pytest.approx([a * a, b * b], abs=1e-14)


class TestBitension:
    def test_constant_map_trivially_biharmonic(self, geost, euclid2):
        u = SmoothMap(geost, euclid2,
                      [parse_expression("0.5", ["x", "y"]), parse_expression("-1", ["x", "y"])])
        tv = mp.bitension(u, [0.2, 0.2])
        assert np.abs(tv.tau).max() == 0.0
        assert np.abs(tv.tau2).max() == 0.0

    def test_scalar_reference_map(self, scalar_map, rng):
        tv = mp.bitension(scalar_map, [1.0, 0.0])
        assert tv.tau[0] == pytest.approx(0.6321205588285577, rel=1e-12)
        for _ in range(50):
            p = rng.uniform(-2.0, 2.0, 2)
            assert np.abs(mp.bitension(scalar_map, p).tau2).max() <= 1e-10

    def test_line_curve_value_and_cancellation(self, euclid1, geost):
        u = SmoothMap(
            registry.euclidean_structure(1, half_width=0.7), geost,
            [parse_expression("2*x + 1", ["x"]), parse_expression("-x", ["x"])],
        )
        tv = mp.bitension(u, [0.25])
        assert tv.tau == pytest.approx([4.0, 1.0], abs=1e-14)
        assert np.abs(tv.tau2).max() <= 1e-14
        # conjugate double derivative cancels against the difference tensor
        assert tv.lap_bar_tau == pytest.approx([16.0, 1.0], abs=1e-12)
        assert tv.K_term == pytest.approx([16.0, 1.0], abs=1e-12)

    def test_assembly_identity(self, scalar_map, rng):
        for _ in range(10):
            p = rng.uniform(-1.5, 1.5, 2)
            assert mp.bitension(scalar_map, p).assembly_residual() <= 1e-12

    def test_cubic_perturbation_is_harmonic_only_to_second_order(self, euclid2):
        # a cubic graph map between flat planes is non-harmonic yet still
        # biharmonic (the bi-Laplacian of x^3 vanishes identically)
        target = registry.euclidean_structure(2, half_width=30.0)
        u = SmoothMap(euclid2, target,
                      [parse_expression("x^3", ["x", "y"]), parse_expression("y", ["x", "y"])])
        report = mp.check_biharmonic(u, u.source.chart.probe_points(30), tol=1e-6)
        assert not report["is_harmonic"]
        assert report["is_statistical_biharmonic"]
        assert mp.tension(u, [0.5, 0.0]) == pytest.approx([3.0, 0.0], abs=1e-13)

    def test_quintic_perturbation_neither(self, euclid2):
        target = registry.euclidean_structure(2, half_width=120.0)
        u = SmoothMap(euclid2, target,
                      [parse_expression("x^5", ["x", "y"]), parse_expression("y", ["x", "y"])])
        report = mp.check_biharmonic(u, u.source.chart.probe_points(30), tol=1e-6)
        assert not report["is_harmonic"]
        assert not report["is_statistical_biharmonic"]
        tv = mp.bitension(u, [0.5, 0.0])
        assert tv.tau == pytest.approx([20.0 * 0.5**3, 0.0], abs=1e-12)
        assert tv.tau2 == pytest.approx([120.0 * 0.5, 0.0], abs=1e-10)


class TestCurveBitension:
    def test_geodesics_are_biharmonic(self, euclid1, geost):
        # x(t) = log(1 + a t) solves x'' + (x')^2 = 0, the geodesic equation
        # of the dual-plane connection, so tau and tau2 both vanish
        u = SmoothMap(euclid1, geost, [
            parse_expression("log(1 + 0.3*x)", ["x"]),
            parse_expression("log(1 - 0.2*x)", ["x"]),
        ])
        for t in np.linspace(-1.0, 1.0, 9):
            tv = mp.curve_bitension(u, t)
            assert np.abs(tv.tau).max() <= 1e-13
            assert np.abs(tv.tau2).max() <= 1e-13

    def test_constant_curve_trivially_biharmonic(self, euclid1, geost):
        u = SmoothMap(euclid1, geost,
                      [parse_expression("0.3", ["x"]), parse_expression("-0.2", ["x"])])
        tv = mp.curve_bitension(u, 0.1)
        assert np.abs(tv.tau).max() == 0.0
        assert np.abs(tv.tau2).max() == 0.0

    def test_agrees_with_general_pipeline(self, geost, rng):
        interval = registry.euclidean_structure(1, half_width=0.7)
        u = SmoothMap(interval, geost, [
            parse_expression("0.5*x + 0.1*x^2", ["x"]),
            parse_expression("-0.3*x", ["x"]),
        ])
        for _ in range(20):
            t = float(rng.uniform(-0.6, 0.6))
            a = mp.curve_bitension(u, t)
            b = mp.bitension(u, [t])
            assert np.abs(a.tau2 - b.tau2).max() <= 1e-9

    def test_circle_classical_biharmonic_operator(self, euclid1, euclid2):
        u = SmoothMap(euclid1, euclid2,
                      [parse_expression("cos(x)", ["x"]), parse_expression("sin(x)", ["x"])])
        for t in np.linspace(-1.0, 1.0, 9):
            tv = mp.curve_bitension(u, t)
            assert tv.tau2 == pytest.approx([np.cos(t), np.sin(t)], abs=1e-12)

    def test_requires_euclidean_interval(self, geost, real_line):
        f = SmoothMap(geost, real_line,
                      [parse_expression("sinh(x) + cosh(y)", ["x", "y"])])
        with pytest.raises(ValueError, match="one-dimensional"):
            mp.curve_bitension(f, 0.0)


class TestCheckBiharmonic:
    def test_scalar_reference_classification(self, scalar_map):
        report = mp.check_biharmonic(scalar_map, tol=1e-6)
        assert not report["is_harmonic"]
        assert report["is_statistical_biharmonic"]

    def test_constant_map_both(self, geost, euclid2):
        u = SmoothMap(geost, euclid2,
                      [parse_expression("1", ["x", "y"]), parse_expression("0", ["x", "y"])])
        report = mp.check_biharmonic(u, tol=1e-9)
        assert report["is_harmonic"] and report["is_statistical_biharmonic"]


class TestDomainGuard:
    def test_image_escape_lists_source_point(self, euclid2):
        small = registry.euclidean_structure(2, half_width=0.5)
        with pytest.raises(MapDomainError, match="source point"):
            SmoothMap(euclid2, small,
                      [parse_expression("x", ["x", "y"]), parse_expression("y", ["x", "y"])])


class TestCollapses:
    def test_riemannian_collapse_to_classical_bitension(self, sphere, rng):
        source = registry.euclidean_structure(2, half_width=1.1)
        u = SmoothMap(source, sphere, [
            parse_expression("1.2 + 0.1*x + 0.15*y", ["x", "y"]),
            parse_expression("0.5*x - 0.2*y + 1", ["x", "y"]),
        ])
        for _ in range(15):
            p = rng.uniform(-1.0, 1.0, 2)
            tv = mp.bitension(u, p)
            jj = mp.jiang_bitension(u, p)
            assert np.abs(tv.tau2 - jj).max() <= 1e-7

    def test_reduced_form_under_hypotheses(self, geost, rng):
        tf = registry.resolve_structure("tracefree_torus")
        u = SmoothMap(tf, geost, [
            parse_expression("0.4*sin(x) + 0.1*cos(y)", ["x", "y"]),
            parse_expression("0.3*cos(x)*sin(y)", ["x", "y"]),
        ])
        for _ in range(15):
            p = rng.uniform(0.0, 2.0 * np.pi, 2)
            tv = mp.bitension(u, p)
            simp = mp.bitension_simplified(u, p)
            assert np.abs(tv.tau2 - simp).max() <= 1e-7


class TestLemma51Integrand:
    def test_harmonic_map_both_sides_zero(self, euclid2):
        target = registry.euclidean_structure(2, half_width=4.0)
        u = SmoothMap(euclid2, target,
                      [parse_expression("x + y", ["x", "y"]),
                       parse_expression("x - y", ["x", "y"])])
        info = mp.lemma51_integrand(u, [0.3, 0.3])
        assert info["div_theta_X"] == pytest.approx(0.0, abs=1e-12)
        assert info["tau_norm_sq"] == pytest.approx(0.0, abs=1e-12)
        assert info["volume_parallel_residual"] == 0.0

    def test_sine_curve_identity_closes(self, euclid1, euclid2):
        u = SmoothMap(euclid1, euclid2,
                      [parse_expression("sin(x)", ["x"]), parse_expression("0", ["x"])])
        for t in np.linspace(-1.0, 1.0, 50):
            info = mp.lemma51_integrand(u, [t])
            assert info["identity_residual"] <= 1e-8
            assert info["tau_norm_sq"] == pytest.approx(np.sin(t) ** 2, abs=1e-12)

    def test_scalar_reference_point(self, scalar_map):
        info = mp.lemma51_integrand(scalar_map, [1.0, 0.0])
        assert info["tau_norm_sq"] == pytest.approx(0.6321205588 ** 2, rel=1e-8)
        assert info["identity_residual"] <= 1e-7
        # the metric volume form of this source is not conjugate-parallel,
        # so the frame coupling genuinely contributes
        assert info["volume_parallel_residual"] == pytest.approx(1.0)
        assert abs(info["frame_coupling"]) > 0.1
