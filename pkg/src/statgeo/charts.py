"""Coordinate charts: domains, metric fields, and connection specifications.

A chart fixes an ordered coordinate tuple, a domain (a box, optionally cut by
one linear inequality, or a flat torus) and the raw geometric data: the metric
components as expression fields plus one of three connection specifications
(Levi-Civita, explicit Christoffel symbols, or an explicit difference tensor).
Loading validates symmetry structurally, positive definiteness on a fixed
low-discrepancy probe set, and periodicity of every field on torus charts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .expressions import (
    ExpressionField,
    constant,
    parse_expression,
)

__all__ = [
    "ChartError",
    "Box",
    "Torus",
    "ChartManifold",
    "halton_points",
    "load_chart",
    "LEVI_CIVITA",
    "CHRISTOFFEL",
    "DIFFERENCE_TENSOR",
]

LEVI_CIVITA = "levi_civita"
CHRISTOFFEL = "christoffel"
DIFFERENCE_TENSOR = "difference_tensor"

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


class ChartError(Exception):
    """Schema, symmetry, or definiteness failure while building a chart."""


def halton_points(count: int, dim: int, start: int = 1) -> np.ndarray:
    """Deterministic Halton sequence in the open unit cube, shape (count, dim)."""
    if dim > len(_PRIMES):
        raise ChartError(f"halton sequence limited to {len(_PRIMES)} dimensions")
    out = np.empty((count, dim))
    for j in range(dim):
        base = _PRIMES[j]
        for k in range(count):
            i = start + k
            f, r = 1.0, 0.0
            while i > 0:
                f /= base
                r += f * (i % base)
                i //= base
            out[k, j] = r
    return out


@dataclass(frozen=True)
class Box:
    """Product of open intervals, optionally cut by ``coeffs . x < bound``."""

    intervals: tuple[tuple[float, float], ...]
    constraint: Optional[tuple[tuple[float, ...], float]] = None

    @property
    def dim(self) -> int:
        return len(self.intervals)

    def contains(self, point: np.ndarray) -> bool:
        for x, (lo, hi) in zip(point, self.intervals):
            if not (lo <= x <= hi):
                return False
        if self.constraint is not None:
            coeffs, bound = self.constraint
            if float(np.dot(coeffs, point)) >= bound:
                return False
        return True

    def sample(self, count: int, margin: float = 0.05, start: int = 1) -> np.ndarray:
        """Low-discrepancy interior points, kept ``margin`` away from all faces."""
        lo = np.array([iv[0] for iv in self.intervals])
        hi = np.array([iv[1] for iv in self.intervals])
        width = hi - lo
        a = lo + margin * width
        b = hi - margin * width
        if self.constraint is None:
            unit = halton_points(count, self.dim, start=start)
            return a + unit * (b - a)
        coeffs, bound = self.constraint
        slack = margin * float(np.abs(width * np.asarray(coeffs)).sum())
        picked = []
        offset = start
        while len(picked) < count:
            unit = halton_points(4 * count, self.dim, start=offset)
            pts = a + unit * (b - a)
            for p in pts:
                if float(np.dot(coeffs, p)) < bound - slack:
                    picked.append(p)
                    if len(picked) == count:
                        break
            offset += 4 * count
        return np.array(picked)


@dataclass(frozen=True)
class Torus:
    """Flat torus with the given periods; points are reduced modulo periods."""

    periods: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.periods)

    def contains(self, point: np.ndarray) -> bool:
        return True

    def sample(self, count: int, margin: float = 0.0, start: int = 1) -> np.ndarray:
        unit = halton_points(count, self.dim, start=start)
        return unit * np.asarray(self.periods)

    def wrap(self, point: np.ndarray) -> np.ndarray:
        return np.mod(point, np.asarray(self.periods))


def _as_field_matrix(entries, coords) -> tuple[tuple[ExpressionField, ...], ...]:
    out = []
    for row in entries:
        out.append(tuple(
            e if isinstance(e, ExpressionField) else parse_expression(str(e), coords)
            for e in row
        ))
    return tuple(out)


def _zero_cube(m: int, coords) -> list[list[list[ExpressionField]]]:
    zero = constant(0.0, coords)
    return [[[zero for _ in range(m)] for _ in range(m)] for _ in range(m)]


class ChartManifold:
    """Chart data: coordinates, domain, metric fields, connection spec.

    ``connection_kind`` is one of ``levi_civita``, ``christoffel`` (upper index
    first: gamma[k][i][j] for Gamma^k_ij) or ``difference_tensor`` (same layout).
    Charts are immutable after construction; evaluation is pure and safe to
    call from many threads.
    """

    def __init__(
        self,
        coords: Sequence[str],
        topology,
        metric,
        connection_kind: str = LEVI_CIVITA,
        connection_fields=None,
        *,
        validate: bool = True,
        probe_count: int = 32,
    ):
        self.coords = tuple(coords)
        self.dim = len(self.coords)
        self.topology = topology
        if topology.dim != self.dim:
            raise ChartError("topology dimension does not match coordinate count")
        self.metric = _as_field_matrix(metric, self.coords)
        if connection_kind not in (LEVI_CIVITA, CHRISTOFFEL, DIFFERENCE_TENSOR):
            raise ChartError(f"unknown connection kind {connection_kind!r}")
        self.connection_kind = connection_kind
        if connection_kind == LEVI_CIVITA:
            self.connection_fields = None
        else:
            if connection_fields is None:
                raise ChartError(f"{connection_kind} spec requires coefficient fields")
            self.connection_fields = tuple(
                tuple(tuple(row) for row in plane) for plane in connection_fields
            )
        if validate:
            self._validate(probe_count)

    # -- domain helpers -------------------------------------------------------

    def contains(self, point) -> bool:
        return self.topology.contains(np.asarray(point, dtype=float))

    def wrap(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        if isinstance(self.topology, Torus):
            return self.topology.wrap(point)
        return point

    def probe_points(self, count: int, margin: float = 0.05, start: int = 1) -> np.ndarray:
        return self.topology.sample(count, margin=margin, start=start)

    def random_points(self, count: int, rng, margin: float = 0.05) -> np.ndarray:
        if isinstance(self.topology, Torus):
            return rng.uniform(size=(count, self.dim)) * np.asarray(self.topology.periods)
        lo = np.array([iv[0] for iv in self.topology.intervals])
        hi = np.array([iv[1] for iv in self.topology.intervals])
        a = lo + margin * (hi - lo)
        b = hi - margin * (hi - lo)
        pts = []
        while len(pts) < count:
            p = rng.uniform(a, b)
            if self.topology.contains(p):
                if self.topology.constraint is not None:
                    coeffs, bound = self.topology.constraint
                    slack = 0.05 * float(np.abs((hi - lo) * np.asarray(coeffs)).sum())
                    if float(np.dot(coeffs, p)) >= bound - slack:
                        continue
                pts.append(p)
        return np.array(pts)

    # -- numeric evaluation ---------------------------------------------------

    def metric_at(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        m = self.dim
        g = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                g[i, j] = self.metric[i][j].evaluate(point)
        return g

    # -- validation -----------------------------------------------------------

    def _validate(self, probe_count: int) -> None:
        m = self.dim
        for i in range(m):
            for j in range(i + 1, m):
                if self.metric[i][j].ast is not self.metric[j][i].ast:
                    raise ChartError(
                        f"metric symmetry violation: g[{i}][{j}] and g[{j}][{i}] differ "
                        f"({self.metric[i][j].to_text()!r} vs {self.metric[j][i].to_text()!r})"
                    )
        if self.connection_fields is not None:
            label = "Gamma" if self.connection_kind == CHRISTOFFEL else "K"
            for k in range(m):
                for i in range(m):
                    for j in range(i + 1, m):
                        if self.connection_fields[k][i][j].ast is not self.connection_fields[k][j][i].ast:
                            raise ChartError(
                                f"{label}^{k}_({i},{j}) is not symmetric in its lower indices"
                            )
        probes = self.probe_points(probe_count)
        worst_point, worst_eig = None, np.inf
        for p in probes:
            g = self.metric_at(p)
            eig = float(np.linalg.eigvalsh(g).min())
            if eig < worst_eig:
                worst_eig, worst_point = eig, p
        if worst_eig <= 0.0:
            raise ChartError(
                f"metric is not positive definite: smallest eigenvalue {worst_eig:.3e} "
                f"at point {np.round(worst_point, 6).tolist()}"
            )
        if isinstance(self.topology, Torus):
            self._check_periodicity()

    def _check_periodicity(self, tol: float = 1e-9, samples: int = 16) -> None:
        fields = [f for row in self.metric for f in row]
        if self.connection_fields is not None:
            fields += [f for plane in self.connection_fields for row in plane for f in row]
        pts = self.topology.sample(samples, start=5)
        periods = np.asarray(self.topology.periods)
        for axis in range(self.dim):
            shift = np.zeros(self.dim)
            shift[axis] = periods[axis]
            for f in fields:
                base = f.evaluate_batch(pts)
                moved = f.evaluate_batch(pts + shift)
                err = float(np.abs(base - moved).max())
                if err > tol:
                    raise ChartError(
                        f"field {f.to_text()!r} is not periodic along axis {axis} "
                        f"(residual {err:.3e})"
                    )


# ---------------------------------------------------------------------------
# Structured-document loader
# ---------------------------------------------------------------------------


def _parse_sparse_cube(table: dict, coords: Sequence[str]) -> list[list[list[ExpressionField]]]:
    m = len(coords)
    index = {name: i for i, name in enumerate(coords)}
    cube = _zero_cube(m, coords)
    for key, text in table.items():
        parts = [p.strip() for p in str(key).split(",")]
        if len(parts) != 3:
            raise ChartError(f"tensor key {key!r} must be 'upper,lower1,lower2'")
        try:
            k, i, j = (index[p] for p in parts)
        except KeyError as missing:
            raise ChartError(f"tensor key {key!r} names unknown coordinate {missing}") from None
        cube[k][i][j] = parse_expression(str(text), coords)
    return cube


def load_chart(config: dict) -> ChartManifold:
    """Build a chart from the structured manifold-spec document."""
    if not isinstance(config, dict):
        raise ChartError("manifold spec must be a mapping")
    try:
        dim = int(config["dimension"])
        coords = list(config["coordinates"])
        topo_cfg = config["topology"]
        metric_cfg = config["metric"]
        conn_cfg = config["connection"]
    except KeyError as missing:
        raise ChartError(f"manifold spec is missing field {missing}") from None
    if dim < 1:
        raise ChartError("dimension must be a positive integer")
    if len(coords) != dim or len(set(coords)) != dim:
        raise ChartError("coordinates must list exactly 'dimension' distinct names")

    kind = topo_cfg.get("kind")
    if kind == "box":
        intervals = tuple((float(lo), float(hi)) for lo, hi in topo_cfg["intervals"])
        if len(intervals) != dim or any(lo >= hi for lo, hi in intervals):
            raise ChartError("box topology needs one proper interval per axis")
        constraint = None
        if "constraint" in topo_cfg:
            c = topo_cfg["constraint"]
            constraint = (tuple(float(v) for v in c["coeffs"]), float(c["bound"]))
        topology = Box(intervals, constraint)
    elif kind == "torus":
        periods = tuple(float(p) for p in topo_cfg["periods"])
        if len(periods) != dim or any(p <= 0 for p in periods):
            raise ChartError("torus topology needs one positive period per axis")
        topology = Torus(periods)
    else:
        raise ChartError(f"unknown topology kind {kind!r}")

    if len(metric_cfg) != dim or any(len(row) != dim for row in metric_cfg):
        raise ChartError("metric must be a dimension x dimension array of expressions")
    metric = [[parse_expression(str(e), coords) for e in row] for row in metric_cfg]

    conn_kind = conn_cfg.get("kind")
    if conn_kind == LEVI_CIVITA:
        return ChartManifold(coords, topology, metric, LEVI_CIVITA)
    if conn_kind == CHRISTOFFEL:
        cube = _parse_sparse_cube(conn_cfg.get("gamma", {}), coords)
        return ChartManifold(coords, topology, metric, CHRISTOFFEL, cube)
    if conn_kind == DIFFERENCE_TENSOR:
        cube = _parse_sparse_cube(conn_cfg.get("k", {}), coords)
        return ChartManifold(coords, topology, metric, DIFFERENCE_TENSOR, cube)
    raise ChartError(f"unknown connection kind {conn_kind!r}")
