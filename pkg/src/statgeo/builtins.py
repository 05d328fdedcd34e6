"""Named fixture registry and spec-document loaders.

Builtins give one-string access to the bundled statistical manifolds:

* ``euclidean:m``            flat Riemannian box in m coordinates
* ``geost``                  the flat dual structure on the plane with
                             Gamma^x_xx = Gamma^y_yy = 1
* ``simplex:n=2:exponential`` (or ``simplex:2:mixture``) Fisher simplex
* ``paraboloid:m``           structure equiaffinely induced by the graph of
                             (x1^2 + ... + xm^2)/2
* ``flat_torus:m``           flat torus with 2*pi periods
* ``perturbed_torus``        1-torus with difference tensor 0.3 sin(x)
* ``sphere``                 round-sphere polar chart (Riemannian)
* ``real_line``              alias of euclidean:1

Map and hypersurface spec documents reference manifolds either by builtin
name (optionally prefixed ``builtin:``) or by an inline manifold spec.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .charts import Box, DIFFERENCE_TENSOR, ChartManifold, Torus, load_chart
from .expressions import constant, coordinate_fields, parse_expression
from .geometry import StatStructure, build_structure
from .maps import SmoothMap

__all__ = [
    "builtin_names",
    "resolve_structure",
    "load_structure",
    "load_map",
    "load_hypersurface",
]

_TWO_PI = 2.0 * math.pi


def euclidean_structure(m: int, half_width: float = 2.5) -> StatStructure:
    coords = [f"x{i+1}" for i in range(m)] if m != 1 else ["x"]
    if m == 2:
        coords = ["x", "y"]
    metric = [
        [constant(1.0 if i == j else 0.0, coords) for j in range(m)]
        for i in range(m)
    ]
    box = Box(tuple((-half_width, half_width) for _ in range(m)))
    return build_structure(ChartManifold(coords, box, metric))


def geost_structure(half_width: float = 2.5) -> StatStructure:
    coords = ["x", "y"]
    metric = [["1", "0"], ["0", "1"]]
    chart = load_chart(
        {
            "dimension": 2,
            "coordinates": coords,
            "topology": {"kind": "box", "intervals": [[-half_width, half_width]] * 2},
            "metric": metric,
            "connection": {"kind": "christoffel", "gamma": {"x,x,x": "1", "y,y,y": "1"}},
        }
    )
    return build_structure(chart)


def sphere_structure() -> StatStructure:
    coords = ["th", "ph"]
    metric = [["1", "0"], ["0", "sin(th)^2"]]
    chart = load_chart(
        {
            "dimension": 2,
            "coordinates": coords,
            "topology": {"kind": "box", "intervals": [[0.4, 2.7], [-3.0, 3.0]]},
            "metric": metric,
            "connection": {"kind": "levi_civita"},
        }
    )
    return build_structure(chart)


def flat_torus_structure(m: int, periods=None) -> StatStructure:
    coords = ["x", "y", "z"][:m] if m <= 3 else [f"x{i+1}" for i in range(m)]
    if periods is None:
        periods = (_TWO_PI,) * m
    metric = [
        [constant(1.0 if i == j else 0.0, coords) for j in range(m)]
        for i in range(m)
    ]
    return build_structure(ChartManifold(coords, Torus(tuple(periods)), metric))


def perturbed_torus_structure(amplitude: float = 0.3) -> StatStructure:
    """1-torus with difference tensor K^x_xx = amplitude * sin(x)."""
    coords = ["x"]
    metric = [[constant(1.0, coords)]]
    k = [[[parse_expression(f"{amplitude} * sin(x)", coords)]]]
    chart = ChartManifold(coords, Torus((_TWO_PI,)), metric, DIFFERENCE_TENSOR, k)
    return build_structure(chart)


def tracefree_torus_structure(amplitude: float = 0.25) -> StatStructure:
    """Flat 2-torus with a totally symmetric, trace-free difference tensor."""
    coords = ["x", "y"]
    metric = [
        [constant(1.0, coords), constant(0.0, coords)],
        [constant(0.0, coords), constant(1.0, coords)],
    ]
    s = parse_expression(f"{amplitude} * sin(x) * sin(y)", coords)
    t = parse_expression(f"{amplitude} * cos(x) * cos(y)", coords)
    ms, mt = -s, -t
    # lowered tensor K_ijk totally symmetric with zero g-traces:
    # K_xxx = s, K_xxy = t, K_xyy = -s, K_yyy = -t
    k = [
        [[s, t], [t, ms]],
        [[t, ms], [ms, mt]],
    ]
    chart = ChartManifold(coords, Torus((_TWO_PI, _TWO_PI)), metric, DIFFERENCE_TENSOR, k)
    return build_structure(chart)


def _paraboloid_structure(m: int) -> StatStructure:
    from .equiaffine import GraphHypersurface, blaschke_pipeline

    coords = ["x", "y", "z"][:m] if m <= 3 else [f"x{i+1}" for i in range(m)]
    xs = coordinate_fields(coords)
    F = constant(0.0, coords)
    for x in xs:
        F = F + 0.5 * x * x
    hs = GraphHypersurface(m, F, Box(tuple((-1.5, 1.5) for _ in range(m))))
    return blaschke_pipeline(hs).structure


_STRUCTURE_CACHE: dict[str, StatStructure] = {}


def builtin_names() -> list[str]:
    return [
        "euclidean:m",
        "geost",
        "simplex:n:mixture|exponential",
        "paraboloid:m",
        "flat_torus:m",
        "perturbed_torus",
        "tracefree_torus",
        "sphere",
        "real_line",
    ]


def resolve_structure(name: str) -> StatStructure:
    """Resolve a builtin name (with or without the ``builtin:`` prefix)."""
    key = name.strip()
    if key.startswith("builtin:"):
        key = key[len("builtin:"):]
    if key in _STRUCTURE_CACHE:
        return _STRUCTURE_CACHE[key]
    parts = key.split(":")
    head = parts[0]
    if head == "geost":
        out = geost_structure()
    elif head == "real_line":
        out = euclidean_structure(1, half_width=50.0)
    elif head == "sphere":
        out = sphere_structure()
    elif head == "euclidean":
        out = euclidean_structure(int(parts[1]))
    elif head == "flat_torus":
        out = flat_torus_structure(int(parts[1]) if len(parts) > 1 else 1)
    elif head == "perturbed_torus":
        out = perturbed_torus_structure()
    elif head == "tracefree_torus":
        out = tracefree_torus_structure()
    elif head == "paraboloid":
        out = _paraboloid_structure(int(parts[1]) if len(parts) > 1 else 2)
    elif head == "simplex":
        from . import simplex as sx

        n = None
        conn = sx.EXPONENTIAL
        for part in parts[1:]:
            part = part.strip()
            if part.startswith("n="):
                n = int(part[2:])
            elif part in (sx.MIXTURE, sx.EXPONENTIAL):
                conn = part
            else:
                n = int(part)
        if n is None:
            raise ValueError(f"simplex builtin needs a dimension: {name!r}")
        out = sx.simplex_structure(n, conn)
    else:
        raise ValueError(f"unknown builtin manifold {name!r}")
    _STRUCTURE_CACHE[key] = out
    return out


def load_structure(spec) -> StatStructure:
    """Accept a builtin name, a path to a JSON manifold spec, or an inline dict."""
    if isinstance(spec, StatStructure):
        return spec
    if isinstance(spec, dict):
        return build_structure(load_chart(spec))
    text = str(spec)
    path = Path(text)
    if text.endswith(".json") or path.is_file():
        with open(path, "r", encoding="utf-8") as fh:
            return build_structure(load_chart(json.load(fh)))
    return resolve_structure(text)


def load_map(spec) -> SmoothMap:
    """Map spec document: {"source": ..., "target": ..., "components": [...]}."""
    if isinstance(spec, (str, Path)):
        with open(spec, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    source = load_structure(spec["source"])
    target = load_structure(spec["target"])
    comps = [parse_expression(str(c), source.chart.coords) for c in spec["components"]]
    return SmoothMap(source, target, comps)


def load_hypersurface(spec):
    """Hypersurface spec: {"dimension": m, "graph": "...", "domain": [[lo,hi],...]}."""
    from .equiaffine import GraphHypersurface

    if isinstance(spec, (str, Path)):
        text = str(spec)
        if text.startswith("builtin:"):
            text = text[len("builtin:"):]
        if text.startswith("paraboloid"):
            parts = text.split(":")
            m = int(parts[1]) if len(parts) > 1 else 2
            coords = ["x", "y", "z"][:m] if m <= 3 else [f"x{i+1}" for i in range(m)]
            xs = coordinate_fields(coords)
            F = constant(0.0, coords)
            for x in xs:
                F = F + 0.5 * x * x
            return GraphHypersurface(m, F, Box(tuple((-1.5, 1.5) for _ in range(m))))
        with open(text, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    m = int(spec["dimension"])
    coords = ["x", "y", "z"][:m] if m <= 3 else [f"x{i+1}" for i in range(m)]
    F = parse_expression(str(spec["graph"]), coords)
    domain = Box(tuple((float(lo), float(hi)) for lo, hi in spec["domain"]))
    return GraphHypersurface(m, F, domain)
