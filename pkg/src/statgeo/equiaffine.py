"""Blaschke geometry of locally strongly convex graph hypersurfaces.

For a graph immersion x -> (x, F(x)) of a convex function the distinguished
transversal field is constructed by the standard three-step normalisation:
start from the vertical unit vector, rescale so the induced volume matches
the ambient determinant, then tilt tangentially to kill the connection form.
For graphs this collapses to closed forms in the Hessian H of F:

    lambda = (det H)^(1/(m+2))        scale factor
    h      = H / lambda               affine metric
    Z^k    = -lambda H^{kl} d_l log(lambda)   tangential tilt
    xi     = (Z, lambda + Z . dF)     distinguished transversal
    Gamma^k_ij = -h_ij Z^k            induced connection
    S(d_i) = -d_i Z                   shape operator

Everything is assembled as exact expression fields, so the fourth-order
objects (the trace of the covariant derivative of S, and the induced map
bi-tension) keep full precision.  Correctness is defined by the five
structural invariants checked in ``structure_residuals``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import Box, CHRISTOFFEL, ChartManifold
from .expressions import ExpressionField, constant, field_det, field_inverse
from .geometry import PRIMAL, StatStructure, build_structure, curvature
from .maps import SmoothMap, bitension, tension

__all__ = [
    "ConvexityError",
    "GraphHypersurface",
    "EquiaffineStructure",
    "BlaschkePipeline",
    "blaschke_pipeline",
    "blaschke",
    "structure_residuals",
    "affine_invariants",
    "hypersurface_bitension",
]


class ConvexityError(Exception):
    """The graph function is not locally strongly convex on the domain."""


class GraphHypersurface:
    """Graph immersion data: dimension, graph function, and a box domain."""

    def __init__(self, m: int, F: ExpressionField, domain: Box, probe_count: int = 16):
        if len(F.coords) != m or domain.dim != m:
            raise ValueError("graph function and domain must share the dimension")
        self.m = m
        self.F = F
        self.domain = domain
        self._hessian = [
            [F.partial(i).partial(j) for j in range(m)] for i in range(m)
        ]
        if probe_count:
            for p in domain.sample(probe_count):
                H = self.hessian_at(p)
                eig = float(np.linalg.eigvalsh(H).min())
                if eig <= 0.0:
                    raise ConvexityError(
                        f"Hessian not positive definite at {np.round(p, 6).tolist()} "
                        f"(smallest eigenvalue {eig:.3e})"
                    )

    def hessian_at(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        m = self.m
        return np.array(
            [[self._hessian[i][j].evaluate(point) for j in range(m)] for i in range(m)]
        )


@dataclass
class EquiaffineStructure:
    """Pointwise snapshot of the Blaschke data, plus the induced structure."""

    point: np.ndarray
    xi: np.ndarray
    h: np.ndarray
    gamma: np.ndarray
    S: np.ndarray
    structure: StatStructure


class BlaschkePipeline:
    """Symbolic Blaschke data for one graph hypersurface."""

    def __init__(self, hs: GraphHypersurface):
        self.hypersurface = hs
        m = hs.m
        coords = hs.F.coords
        H = hs._hessian
        detH = field_det(H)
        lam = detH ** (1.0 / (m + 2))
        self.lam = lam
        self.h_fields = [[H[i][j] / lam for j in range(m)] for i in range(m)]
        Hinv = field_inverse(H)
        self.hinv_fields = [[Hinv[i][j] * lam for j in range(m)] for i in range(m)]
        log_lam = detH.apply("log") * (1.0 / (m + 2))
        self.Z_fields = []
        for k in range(m):
            acc = constant(0.0, coords)
            for l in range(m):
                acc = acc + Hinv[k][l] * log_lam.partial(l)
            self.Z_fields.append(-lam * acc)
        dF = [hs.F.partial(i) for i in range(m)]
        vertical = lam
        for k in range(m):
            vertical = vertical + self.Z_fields[k] * dF[k]
        self.xi_fields = list(self.Z_fields) + [vertical]
        self.gamma_fields = [
            [
                [
                    -(self.h_fields[i][j] * self.Z_fields[k])
                    for j in range(m)
                ]
                for i in range(m)
            ]
            for k in range(m)
        ]
        self.S_fields = [
            [-(self.Z_fields[k].partial(i)) for i in range(m)] for k in range(m)
        ]
        chart = ChartManifold(
            coords, hs.domain, self.h_fields, CHRISTOFFEL, self.gamma_fields
        )
        self.structure = build_structure(chart, codazzi_tol=1e-8)

        self.trS_field = constant(0.0, coords)
        for k in range(m):
            self.trS_field = self.trS_field + self.S_fields[k][k]
        # (nabla_i S)^k_j = d_i S^k_j + Gamma^k_il S^l_j - Gamma^l_ij S^k_l
        nabla_S = [
            [
                [
                    self.S_fields[k][j].partial(i)
                    for j in range(m)
                ]
                for i in range(m)
            ]
            for k in range(m)
        ]
        for k in range(m):
            for i in range(m):
                for j in range(m):
                    acc = nabla_S[k][i][j]
                    for l in range(m):
                        acc = acc + self.gamma_fields[k][i][l] * self.S_fields[l][j]
                        acc = acc - self.gamma_fields[l][i][j] * self.S_fields[k][l]
                    nabla_S[k][i][j] = acc
        self.tr_nabla_S_fields = []
        for k in range(m):
            acc = constant(0.0, coords)
            for i in range(m):
                for j in range(m):
                    acc = acc + self.hinv_fields[i][j] * nabla_S[k][i][j]
            self.tr_nabla_S_fields.append(acc)
        self._immersion = None

    # -- pointwise evaluation ---------------------------------------------------

    def xi(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        return np.array([f.evaluate(point) for f in self.xi_fields])

    def h(self, point) -> np.ndarray:
        return self.structure.metric(point)

    def S(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        m = self.hypersurface.m
        return np.array(
            [[self.S_fields[k][i].evaluate(point) for i in range(m)] for k in range(m)]
        )

    def gamma(self, point) -> np.ndarray:
        return self.structure.gamma(PRIMAL, point)

    def trS(self, point) -> float:
        return self.trS_field.evaluate(np.asarray(point, dtype=float))

    def tr_nabla_S(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        return np.array([f.evaluate(point) for f in self.tr_nabla_S_fields])

    def pushforward_frame(self, point) -> np.ndarray:
        """Columns f_* d_i = e_i + F_i e_{m+1}, shape (m+1, m)."""
        point = np.asarray(point, dtype=float)
        m = self.hypersurface.m
        out = np.zeros((m + 1, m))
        for i in range(m):
            out[i, i] = 1.0
            out[m, i] = self.hypersurface.F.partial(i).evaluate(point)
        return out

    def immersion_map(self) -> SmoothMap:
        """The graph immersion as a map into flat Euclidean space."""
        if self._immersion is None:
            from .builtins import euclidean_structure
            from .expressions import coordinate_fields

            hs = self.hypersurface
            pts = hs.domain.sample(64)
            spread = max(
                float(np.abs(pts).max()),
                float(np.abs(hs.F.evaluate_batch(pts)).max()),
            )
            target = euclidean_structure(hs.m + 1, half_width=1.5 * spread + 1.0)
            comps = coordinate_fields(hs.F.coords) + [hs.F]
            self._immersion = SmoothMap(self.structure, target, comps)
        return self._immersion


_PIPELINES: dict[int, BlaschkePipeline] = {}


def blaschke_pipeline(hs: GraphHypersurface) -> BlaschkePipeline:
    pipe = _PIPELINES.get(id(hs))
    if pipe is None:
        pipe = BlaschkePipeline(hs)
        _PIPELINES[id(hs)] = pipe
    return pipe


def blaschke(hs: GraphHypersurface, point) -> EquiaffineStructure:
    """Blaschke data at a point (transversal, metric, connection, shape)."""
    pipe = blaschke_pipeline(hs)
    point = np.asarray(point, dtype=float)
    return EquiaffineStructure(
        point=point,
        xi=pipe.xi(point),
        h=pipe.h(point),
        gamma=pipe.gamma(point),
        S=pipe.S(point),
        structure=pipe.structure,
    )


def structure_residuals(hs: GraphHypersurface, point) -> dict:
    """The five defining invariants of the Blaschke structure at a point:
    decomposition closure, vanishing connection form, the volume condition,
    apolarity, and the Gauss equation."""
    pipe = blaschke_pipeline(hs)
    point = np.asarray(point, dtype=float)
    m = hs.m
    xi = pipe.xi(point)
    h = pipe.h(point)
    gamma = pipe.gamma(point)
    S = pipe.S(point)
    frame = pipe.pushforward_frame(point)
    hess = hs.hessian_at(point)

    # D_{d_i} f_* d_j = (0, ..., 0, F_ij) must equal f_* Gamma^._ij + h_ij xi
    decomposition = 0.0
    for i in range(m):
        for j in range(m):
            lhs = np.zeros(m + 1)
            lhs[m] = hess[i, j]
            rhs = frame @ gamma[:, i, j] + h[i, j] * xi
            decomposition = max(decomposition, float(np.abs(lhs - rhs).max()))

    # D_{d_i} xi resolved in the moving basis (f_* d_1 ... f_* d_m, xi):
    # the xi-coefficient must vanish and the tangential part must be -S d_i.
    basis = np.column_stack([frame, xi])
    connection_form = 0.0
    shape_consistency = 0.0
    for i in range(m):
        dxi = np.array([f.partial(i).evaluate(point) for f in pipe.xi_fields])
        coeffs = np.linalg.solve(basis, dxi)
        connection_form = max(connection_form, abs(float(coeffs[m])))
        shape_consistency = max(
            shape_consistency, float(np.abs(coeffs[:m] + S[:, i]).max())
        )

    volume = abs(float(np.sqrt(np.linalg.det(h))) - float(np.linalg.det(basis)))

    apolarity = float(np.abs(pipe.structure.trK(point)).max())

    R = curvature(pipe.structure, PRIMAL, point).components
    gauss_rhs = np.einsum("jk,li->lijk", h, S) - np.einsum("ik,lj->lijk", h, S)
    gauss = float(np.abs(R - gauss_rhs).max())

    return {
        "decomposition": decomposition,
        "connection_form": connection_form,
        "shape_consistency": shape_consistency,
        "volume": volume,
        "apolarity": apolarity,
        "gauss": gauss,
    }


def affine_invariants(hs: GraphHypersurface, point, tol: float = 1e-8,
                      classify_probes: int = 25) -> dict:
    """Shape-operator invariants at the point and a domain classification."""
    pipe = blaschke_pipeline(hs)
    point = np.asarray(point, dtype=float)
    probes = hs.domain.sample(classify_probes)
    max_S = max(float(np.abs(pipe.S(p)).max()) for p in probes)
    max_trS = max(abs(pipe.trS(p)) for p in probes)
    if max_S <= tol:
        classification = "improper_sphere"
    elif max_trS <= tol:
        classification = "affine_minimal"
    else:
        classification = "generic"
    return {
        "trS": pipe.trS(point),
        "tr_nabla_S": pipe.tr_nabla_S(point),
        "classification": classification,
        "max_S_on_probes": max_S,
        "max_trS_on_probes": max_trS,
    }


def hypersurface_bitension(hs: GraphHypersurface, point) -> dict:
    """Tension and both bi-tension routes for the graph immersion.

    ``tau2_formula`` evaluates m * (-f_*(tr_h nabla S) - tr S * xi);
    ``tau2_direct`` runs the immersion through the general map pipeline with
    the induced structure on the source and the flat Euclidean structure on
    the target.  Their agreement is the cross-oracle.
    """
    pipe = blaschke_pipeline(hs)
    point = np.asarray(point, dtype=float)
    m = hs.m
    immersion = pipe.immersion_map()
    tau = tension(immersion, point)
    frame = pipe.pushforward_frame(point)
    formula = -m * (frame @ pipe.tr_nabla_S(point) + pipe.trS(point) * pipe.xi(point))
    direct = bitension(immersion, point).tau2
    return {
        "tau": tau,
        "m_xi": m * pipe.xi(point),
        "tau2_formula": formula,
        "tau2_direct": direct,
        "route_delta": float(np.abs(formula - direct).max()),
    }
