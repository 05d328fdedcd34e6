"""Statistical-structure tensors against hand-derived and cross-route oracles."""

import numpy as np
import pytest

from statgeo import geometry as geo
from statgeo import builtins as registry
from statgeo.charts import CHRISTOFFEL, ChartManifold, load_chart
from statgeo.expressions import parse_expression
from statgeo.geometry import CodazziError, build_structure


class TestBuildStructure:
    def test_euclidean_plane_trivial(self, euclid2):
        p = [0.3, -0.4]
        assert np.abs(euclid2.K(p)).max() == 0.0
        assert np.abs(euclid2.gamma("conjugate", p)).max() == 0.0

    def test_dual_flat_plane_difference_tensor(self, geost):
        p = np.array([1.1, -0.2])
        K = geost.K(p)
        expected = np.zeros((2, 2, 2))
        expected[0, 0, 0] = 1.0
        expected[1, 1, 1] = 1.0
        assert np.abs(K - expected).max() == 0.0

    def test_dual_flat_plane_conjugate_symbols(self, geost):
        gam_bar = geost.gamma("conjugate", [0.0, 0.0])
        assert gam_bar[0, 0, 0] == -1.0
        assert gam_bar[1, 1, 1] == -1.0
        assert np.abs(gam_bar).sum() == 2.0

    def test_codazzi_violation_raises(self):
        config = {
            "dimension": 2,
            "coordinates": ["x", "y"],
            "topology": {"kind": "box", "intervals": [[-1, 1], [-1, 1]]},
            "metric": [["1", "0"], ["0", "1"]],
            # K(dy,dy) = dx is not totally symmetric against the flat metric
            "connection": {"kind": "christoffel", "gamma": {"x,y,y": "1"}},
        }
        with pytest.raises(CodazziError):
            build_structure(load_chart(config))

    def test_conjugate_of_conjugate_is_primal(self, geost):
        rebuilt = geo.StatStructure(
            ChartManifold(
                geost.chart.coords,
                geost.chart.topology,
                [list(r) for r in geost.metric_fields],
                CHRISTOFFEL,
                geost.gamma_bar_fields,
                validate=False,
            ),
            codazzi_tol=np.inf,
        )
        for p in geost.chart.probe_points(10):
            delta = np.abs(
                rebuilt.gamma("conjugate", p) - geost.gamma("primal", p)
            ).max()
            assert delta <= 1e-12


class TestCurvature:
    def test_dual_flat_plane_all_flat(self, geost):
        for kind in ("primal", "conjugate"):
            comp = geo.curvature(geost, kind, [0.7, 0.1]).components
            assert np.abs(comp).max() == 0.0

    def test_riemannian_structures_collapse(self, sphere):
        p = [1.0, 0.5]
        R = geo.curvature(sphere, "primal", p).components
        Rbar = geo.curvature(sphere, "conjugate", p).components
        Rg = geo.curvature(sphere, "levi_civita", p).components
        assert np.abs(R - Rg).max() <= 1e-13
        assert np.abs(Rbar - Rg).max() <= 1e-13

    def test_round_sphere_sectional_curvature(self, sphere):
        p = np.array([1.2, 0.3])
        g = sphere.metric(p)
        Rg = geo.curvature(sphere, "levi_civita", p).components
        low = np.einsum("lijk,lm->mijk", Rg, g)
        X, Y = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        sec = np.einsum("mijk,i,j,k,m->", low, X, Y, Y, X)
        sec /= (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
        assert sec == pytest.approx(1.0, rel=1e-10)

    def test_antisymmetry_invariant(self, sphere):
        cv = geo.curvature(sphere, "levi_civita", [1.0, -0.4])
        assert cv.antisymmetry_residual() <= 1e-13

    def test_identities_on_flat_dual_plane(self, geost):
        ids = geo.check_curvature_identities(geost, [0.3, -0.7])
        for key in ("duality", "averaging", "interchange_swap",
                    "interchange_skew", "conjugate_rebuild", "pair_symmetry"):
            assert ids[key] <= 1e-9, key
        assert ids["conjugate_symmetric"]

    def test_identities_on_simplex(self):
        from statgeo import simplex as sx

        s = sx.simplex_structure(2)
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = rng.dirichlet(np.ones(3))[:2] * 0.8 + 0.05
            ids = geo.check_curvature_identities(s, p)
            assert ids["duality"] <= 1e-8
            assert ids["averaging"] <= 1e-8
            assert ids["conjugate_rebuild"] <= 1e-8

    def test_pair_symmetry_only_under_conjugate_symmetry(self):
        s = registry.resolve_structure("tracefree_torus")
        p = np.array([1.0, 2.0])
        ids = geo.check_curvature_identities(s, p)
        # this structure is not conjugate symmetric, and the pairing symmetry
        # residual is reported rather than asserted
        assert not ids["conjugate_symmetric"]
        assert ids["duality"] <= 1e-9
        assert ids["conjugate_rebuild"] <= 1e-9


class TestSpaceFormInterchange:
    def test_zero_shape_operator(self):
        g = np.eye(3)
        L = geo.space_form_interchange(np.zeros((3, 3)), g)
        assert np.abs(L).max() == 0.0

    def test_identity_shape_operator(self):
        g = np.eye(2)
        L = geo.space_form_interchange(np.eye(2), g)
        # L(Z,W)X = -g(X,Z) W + g(X,W) Z
        for z in range(2):
            for w in range(2):
                for x in range(2):
                    expected = np.zeros(2)
                    expected[w] -= g[x, z]
                    expected[z] += g[x, w]
                    assert np.allclose(L[:, z, w, x], expected)

    def test_non_symmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            geo.space_form_interchange(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))

    def test_cross_oracle_against_ellipse_structure(self):
        from statgeo import equiaffine as ea
        from statgeo.charts import Box

        hs = ea.GraphHypersurface(
            1, parse_expression("-sqrt(1 - x^2)", ["x"]), Box(((-0.9, 0.9),))
        )
        pipe = ea.blaschke_pipeline(hs)
        for p in hs.domain.sample(10):
            closed = geo.space_form_interchange(pipe.S(p), pipe.h(p))
            direct = geo.curvature(pipe.structure, "interchange", p).components
            assert np.abs(closed - direct).max() <= 1e-8


class TestTchebychev:
    def test_dual_flat_plane(self, geost):
        T, T_op, trk = geo.tchebychev(geost, [0.4, 0.9])
        assert np.allclose(trk, [1.0, 1.0])
        assert np.allclose(T, [0.5, 0.5])
        assert np.abs(T_op).max() == 0.0

    def test_riemannian_trace_free(self, sphere):
        _, _, trk = geo.tchebychev(sphere, [1.0, 0.2])
        assert np.abs(trk).max() == 0.0

    def test_simplex_uniform_trace_vanishes(self):
        from statgeo import simplex as sx

        s = sx.simplex_structure(1)
        _, _, trk = geo.tchebychev(s, [0.5])
        assert np.abs(trk).max() <= 1e-12


class TestDivergence:
    def test_constant_field_flat_metric(self, geost):
        X = [parse_expression("1", ["x", "y"]), parse_expression("1", ["x", "y"])]
        assert geo.divergence(geost, X, "levi_civita", [0.3, 0.3]) == 0.0

    def test_zero_field_every_kind(self, geost):
        X = [parse_expression("0", ["x", "y"])] * 2
        for kind in ("nabla_primal", "nabla_conjugate", "levi_civita", "theta_volume"):
            assert geo.divergence(geost, X, kind, [0.1, 0.1]) == 0.0

    def test_simplex_trace_divergence_value(self):
        from statgeo import simplex as sx

        s = sx.simplex_structure(2)
        val = geo.divergence(s, list(s.trK_fields), "levi_civita", [1 / 3, 1 / 3])
        assert val == pytest.approx(3.0, rel=1e-12)

    def test_theta_volume_matches_levi_civita(self, sphere, rng):
        X = [parse_expression("sin(th)*ph", ["th", "ph"]),
             parse_expression("cos(ph) + th", ["th", "ph"])]
        for _ in range(20):
            p = rng.uniform([0.6, -2.5], [2.5, 2.5])
            a = geo.divergence(sphere, X, "theta_volume", p)
            b = geo.divergence(sphere, X, "levi_civita", p)
            assert a == pytest.approx(b, rel=1e-10, abs=1e-12)

    def test_leibniz_identity(self, geost, rng):
        # div(fX) = Xf + f div(X) for the primal connection
        f = parse_expression("0.3*x^2 - sin(y)", ["x", "y"])
        X = [parse_expression("cos(x) + y", ["x", "y"]),
             parse_expression("x*y", ["x", "y"])]
        fX = [f * x for x in X]
        for _ in range(25):
            p = rng.uniform(-2.0, 2.0, 2)
            lhs = geo.divergence(geost, fX, "nabla_primal", p)
            xf = sum(X[i].evaluate(p) * f.partial(i).evaluate(p) for i in range(2))
            rhs = xf + f.evaluate(p) * geo.divergence(geost, X, "nabla_primal", p)
            assert abs(lhs - rhs) <= 1e-8


class TestLaplacians:
    def test_reference_value_on_dual_plane(self, geost):
        f = parse_expression("sinh(x) + cosh(y)", ["x", "y"])
        val = geo.laplacian_scalar(geost, f, "primal", [1.0, 0.0])
        assert val == pytest.approx(0.6321205588285577, rel=1e-12)

    def test_constant_annihilated(self, sphere):
        f = parse_expression("3.5", ["th", "ph"])
        assert geo.laplacian_scalar(sphere, f, "riemannian", [1.0, 0.3]) == 0.0

    def test_bilaplacian_annihilates_reference_field(self, geost, rng):
        f = parse_expression("sinh(x) + cosh(y)", ["x", "y"])
        lap = geo.laplacian_field(geost, f, "primal")
        bilap = geo.laplacian_field(geost, lap, "conjugate")
        for _ in range(100):
            p = rng.uniform(-2.0, 2.0, 2)
            assert abs(bilap.evaluate(p)) <= 1e-10

    def test_variant_decomposition(self, rng):
        from statgeo import simplex as sx

        s = sx.simplex_structure(2)
        f = parse_expression("p1^2 + 0.5*p2", ["p1", "p2"])
        for _ in range(10):
            p = rng.dirichlet(np.ones(3))[:2] * 0.8 + 0.05
            a = geo.laplacian_scalar(s, f, "primal", p)
            b = geo.laplacian_scalar(s, f, "conjugate", p)
            c = geo.laplacian_scalar(s, f, "riemannian", p)
            assert abs(a + b - 2.0 * c) <= 1e-12 * max(1.0, abs(c))


class TestRicciAndU:
    def test_flat_riemannian_all_zero(self, euclid2):
        info = geo.ricci_and_U(euclid2, [0.2, 0.2])
        for key in ("ric", "ric_bar", "ric_g", "U"):
            assert np.abs(info[key]).max() == 0.0

    def test_dual_flat_plane_U_vanishes(self, geost):
        info = geo.ricci_and_U(geost, [0.5, -0.5])
        assert np.abs(info["U"]).max() == 0.0

    def test_simplex_hypothesis_probe_reports_failure(self):
        from statgeo import simplex as sx

        s = sx.simplex_structure(2)
        info = geo.ricci_and_U(s, [1 / 3, 1 / 3])
        # primal curvature vanishes (dually flat), so U = 2 R^g and the
        # sampled sectional form sits near 2 * (1/4): the non-positivity
        # hypothesis fails and is only reported
        assert info["min_U_sectional"] > 0.0
        assert info["min_U_sectional"] == pytest.approx(0.5, abs=1e-6)

    def test_deterministic_frame_sample(self, geost):
        a = geo.ricci_and_U(geost, [0.1, 0.1])["min_U_sectional"]
        b = geo.ricci_and_U(geost, [0.1, 0.1])["min_U_sectional"]
        assert a == b


class TestValidate:
    def test_dual_flat_plane_flags(self, geost):
        report = geo.validate(geost)
        assert report.flags["codazzi"].passed
        assert report.flags["conjugate_symmetric"].passed
        assert not report.flags["trace_free"].passed

    def test_riemannian_all_pass(self, sphere):
        report = geo.validate(sphere, tol=1e-9)
        assert report.passed

    def test_equiaffine_apolarity(self):
        s = registry.resolve_structure("paraboloid:2")
        report = geo.validate(s)
        assert report.flags["trace_free"].passed

    def test_report_serialization(self, geost):
        doc = geo.validate(geost).to_dict()
        assert set(doc["flags"]) == {
            "torsion_free", "codazzi", "spd", "conjugate_symmetric", "trace_free"
        }
        assert doc["flags"]["trace_free"]["residual"] == pytest.approx(1.0)


def test_metric_derivative_pairing_identity(rng):
    # derivative of g couples to the difference tensor with factor -2
    for name in ("geost", "sphere", "tracefree_torus"):
        s = registry.resolve_structure(name)
        for p in s.chart.probe_points(20):
            g = s.metric(p)
            gam = s.gamma("primal", p)
            m = s.dim
            dg = np.empty((m, m, m))
            for a in range(m):
                for i in range(m):
                    for j in range(m):
                        dg[a, i, j] = s.metric_fields[i][j].partial(a).evaluate(p)
            nabla_g = dg - np.einsum("mij,mk->ijk", gam, g) - np.einsum(
                "mik,jm->ijk", gam, g
            )
            K_low = np.einsum("mij,mk->ijk", s.K(p), g)
            assert np.abs(nabla_g + 2.0 * K_low).max() <= 1e-8
