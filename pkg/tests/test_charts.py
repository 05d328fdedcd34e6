"""Chart loading: schema validation, symmetry, SPD probing, topology."""

import numpy as np
import pytest

from statgeo.charts import Box, ChartError, Torus, halton_points, load_chart


def euclidean_config(**overrides):
    config = {
        "dimension": 2,
        "coordinates": ["x", "y"],
        "topology": {"kind": "box", "intervals": [[-1.0, 1.0], [-1.0, 1.0]]},
        "metric": [["1", "0"], ["0", "1"]],
        "connection": {"kind": "levi_civita"},
    }
    config.update(overrides)
    return config


class TestLoadChart:
    def test_euclidean_plane_has_zero_symbols(self):
        chart = load_chart(euclidean_config())
        assert chart.dim == 2
        assert chart.connection_kind == "levi_civita"
        from statgeo.geometry import build_structure

        s = build_structure(chart)
        assert np.abs(s.gamma("primal", [0.2, -0.4])).max() == 0.0

    def test_dual_flat_plane_config(self):
        chart = load_chart(euclidean_config(
            connection={"kind": "christoffel", "gamma": {"x,x,x": "1", "y,y,y": "1"}}
        ))
        gam = np.array([
            [[chart.connection_fields[k][i][j].evaluate([0.0, 0.0])
              for j in range(2)] for i in range(2)] for k in range(2)
        ])
        assert gam[0, 0, 0] == 1.0 and gam[1, 1, 1] == 1.0
        assert np.abs(gam).sum() == 2.0

    def test_asymmetric_metric_rejected(self):
        with pytest.raises(ChartError, match="symmetry"):
            load_chart(euclidean_config(metric=[["1", "x"], ["y", "1"]]))

    def test_asymmetric_christoffel_rejected(self):
        with pytest.raises(ChartError, match="not symmetric"):
            load_chart(euclidean_config(
                connection={"kind": "christoffel", "gamma": {"x,x,y": "1"}}
            ))

    def test_spd_failure_reports_worst_point(self):
        with pytest.raises(ChartError, match="eigenvalue"):
            load_chart(euclidean_config(metric=[["x", "0"], ["0", "1"]]))

    def test_missing_field(self):
        config = euclidean_config()
        del config["metric"]
        with pytest.raises(ChartError, match="missing"):
            load_chart(config)

    def test_unknown_topology(self):
        with pytest.raises(ChartError, match="topology"):
            load_chart(euclidean_config(topology={"kind": "sphere"}))

    def test_unknown_connection(self):
        with pytest.raises(ChartError, match="connection"):
            load_chart(euclidean_config(connection={"kind": "weyl"}))

    def test_sparse_key_validation(self):
        with pytest.raises(ChartError, match="unknown coordinate"):
            load_chart(euclidean_config(
                connection={"kind": "christoffel", "gamma": {"x,x,z": "1"}}
            ))
        with pytest.raises(ChartError, match="upper,lower1,lower2"):
            load_chart(euclidean_config(
                connection={"kind": "christoffel", "gamma": {"x,x": "1"}}
            ))

    def test_difference_tensor_spec(self):
        chart = load_chart(euclidean_config(
            connection={"kind": "difference_tensor", "k": {"x,x,x": "x"}}
        ))
        assert chart.connection_kind == "difference_tensor"

    def test_torus_periodicity_enforced(self):
        config = euclidean_config(
            topology={"kind": "torus", "periods": [6.283185307179586, 6.283185307179586]},
            metric=[["2 + sin(x)", "0"], ["0", "1"]],
        )
        load_chart(config)  # periodic metric accepted
        bad = euclidean_config(
            topology={"kind": "torus", "periods": [6.283185307179586, 6.283185307179586]},
            metric=[["2 + x", "0"], ["0", "1"]],
        )
        with pytest.raises(ChartError, match="periodic"):
            load_chart(bad)


class TestTopology:
    def test_box_contains_and_sampling(self):
        box = Box(((-1.0, 1.0), (0.0, 2.0)))
        assert box.contains(np.array([0.5, 1.0]))
        assert not box.contains(np.array([1.5, 1.0]))
        pts = box.sample(64)
        assert pts.shape == (64, 2)
        assert all(box.contains(p) for p in pts)

    def test_constrained_box_sampling(self):
        box = Box(((0.0, 1.0), (0.0, 1.0)), constraint=((1.0, 1.0), 1.0))
        pts = box.sample(40)
        assert np.all(pts.sum(axis=1) < 1.0)
        assert not box.contains(np.array([0.7, 0.7]))

    def test_torus_wrap(self):
        torus = Torus((2.0 * np.pi,))
        assert torus.wrap(np.array([7.0]))[0] == pytest.approx(7.0 - 2.0 * np.pi)
        assert torus.contains(np.array([100.0]))

    def test_halton_deterministic_and_low_discrepancy(self):
        a = halton_points(32, 3)
        b = halton_points(32, 3)
        assert np.array_equal(a, b)
        assert a.min() > 0.0 and a.max() < 1.0
        # successive prefixes fill the cube roughly evenly
        assert abs(a[:, 0].mean() - 0.5) < 0.1


def test_chart_metric_at_and_probe_points():
    chart = load_chart(euclidean_config(metric=[["1 + x^2", "0"], ["0", "2"]]))
    g = chart.metric_at([0.5, 0.0])
    assert g[0, 0] == pytest.approx(1.25)
    pts = chart.probe_points(16)
    assert pts.shape == (16, 2)
    assert np.array_equal(pts, chart.probe_points(16))
