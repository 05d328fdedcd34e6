"""Closed-form statistical structures on the open probability simplex.

The n-simplex of positive probability vectors is charted by its first n
masses (p1, ..., pn) on the open box cut by p1 + ... + pn < 1, carrying the
Fisher information metric together with the dually flat pair of mixture and
exponential connections.  The closed forms here (metric, dual pairing,
cubic pairing, trace of the difference tensor and its divergence) act as
ground truth for the numeric engine.
"""

from __future__ import annotations

import numpy as np

from .charts import Box, CHRISTOFFEL, ChartManifold
from .expressions import constant, coordinate_fields
from .geometry import StatStructure, build_structure

__all__ = [
    "fisher_metric",
    "fisher_dual_pairing",
    "simplex_chart",
    "simplex_structure",
    "simplex_invariants",
    "closed_form_trK",
    "closed_form_div_trK",
    "closed_form_K_pairing",
]

MIXTURE = "mixture"
EXPONENTIAL = "exponential"


def _check_interior(n: int, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (n,):
        raise ValueError(f"expected {n} chart coordinates, got shape {p.shape}")
    if np.any(p <= 0.0) or p.sum() >= 1.0:
        raise ValueError("point must lie in the open simplex: p_i > 0, sum < 1")
    return p


def fisher_metric(n: int, p) -> np.ndarray:
    """Fisher information matrix g_ij = delta_ij / p_i + 1 / p_{n+1}."""
    p = _check_interior(n, p)
    tail = 1.0 - p.sum()
    return np.diag(1.0 / p) + 1.0 / tail


def fisher_dual_pairing(n: int, p) -> np.ndarray:
    """Closed form of the inverse Fisher matrix: -p_i p_j + delta_ij p_i."""
    p = _check_interior(n, p)
    return -np.outer(p, p) + np.diag(p)


def simplex_chart(n: int, connection: str = EXPONENTIAL) -> ChartManifold:
    """Chart for the open simplex with Fisher metric and the chosen connection.

    The mixture connection has vanishing coefficients in these coordinates;
    the exponential connection is generated through the engine's own
    conjugation of the mixture structure, so the fixture cannot drift from
    the conjugation formula.
    """
    if n < 1:
        raise ValueError("simplex dimension must be at least 1")
    coords = [f"p{i + 1}" for i in range(n)]
    xs = coordinate_fields(coords)
    tail = constant(1.0, coords)
    for x in xs:
        tail = tail - x
    metric = [
        [
            (1.0 / xs[i] if i == j else constant(0.0, coords)) + 1.0 / tail
            for j in range(n)
        ]
        for i in range(n)
    ]
    zero = constant(0.0, coords)
    zero_cube = [[[zero] * n for _ in range(n)] for _ in range(n)]
    box = Box(tuple((0.0, 1.0) for _ in range(n)), constraint=((1.0,) * n, 1.0))
    mixture_chart = ChartManifold(coords, box, metric, CHRISTOFFEL, zero_cube)
    if connection == MIXTURE:
        return mixture_chart
    if connection != EXPONENTIAL:
        raise ValueError(f"unknown simplex connection {connection!r}")
    mixture_structure = StatStructure(mixture_chart)
    return ChartManifold(
        coords, box, metric, CHRISTOFFEL, mixture_structure.gamma_bar_fields
    )


def simplex_structure(n: int, connection: str = EXPONENTIAL) -> StatStructure:
    return build_structure(simplex_chart(n, connection), codazzi_tol=1e-8)


def closed_form_trK(n: int, p) -> np.ndarray:
    """tr_g K of the exponential structure: components (1/2)((n+1) p_i - 1)."""
    p = _check_interior(n, p)
    return 0.5 * ((n + 1) * p - 1.0)


def closed_form_div_trK(n: int, p) -> float:
    """div^g(tr_g K) = (n^2 - 1 + sum_{i=1}^{n+1} 1/p_i) / 4."""
    p = _check_interior(n, p)
    tail = 1.0 - p.sum()
    return 0.25 * (n * n - 1.0 + float((1.0 / p).sum()) + 1.0 / tail)


def closed_form_K_pairing(n: int, p) -> np.ndarray:
    """g(K(d_i, d_j), d_k) = -(delta_ij delta_jk / p_i^2 - 1 / p_{n+1}^2) / 2."""
    p = _check_interior(n, p)
    tail = 1.0 - p.sum()
    out = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                diag = 1.0 / p[i] ** 2 if (i == j == k) else 0.0
                out[i, j, k] = -0.5 * (diag - 1.0 / tail**2)
    return out


def simplex_invariants(n: int, p, structure: StatStructure | None = None) -> dict:
    """Closed forms next to their numeric recomputations, with deltas."""
    p = _check_interior(n, p)
    s = structure if structure is not None else simplex_structure(n, EXPONENTIAL)
    g = s.metric(p)
    K_num = np.einsum("mij,mk->ijk", s.K(p), g)
    K_closed = closed_form_K_pairing(n, p)
    trk_num = s.trK(p)
    trk_closed = closed_form_trK(n, p)
    div_num = s.div_trK(p)
    div_closed = closed_form_div_trK(n, p)
    return {
        "K_pairing_closed": K_closed,
        "K_pairing_numeric": K_num,
        "K_pairing_delta": float(np.abs(K_num - K_closed).max()),
        "trK_closed": trk_closed,
        "trK_numeric": trk_num,
        "trK_delta": float(np.abs(trk_num - trk_closed).max()),
        "div_trK_closed": div_closed,
        "div_trK_numeric": div_num,
        "div_trK_delta": abs(div_num - div_closed),
    }
