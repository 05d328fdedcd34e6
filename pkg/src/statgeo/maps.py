"""Tension and statistical bi-tension fields of closed-form maps.

A smooth map between statistical manifolds is held as one expression field
per target coordinate.  The tension field, the connection Laplacian on the
pullback bundle, and the full bi-tension assembly

    tau2 = lap_bar(tau) + div^g(tr_g K) tau - sum_i L(u_* e_i, tau) u_* e_i
           - K(tau, tau)

are built symbolically by composing the target connection fields with the
map, so every derivative up to fourth order is exact.  Frame sums enter only
through g-traces and are contracted with the inverse metric.  Independent
assemblies (the one-dimensional curve formula and the classical Riemannian
bi-tension) are provided as cross-oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expressions import ExpressionField, constant
from .geometry import (
    INTERCHANGE,
    LEVI_CIVITA_KIND,
    PRIMAL,
    StatStructure,
    curvature,
)

__all__ = [
    "MapDomainError",
    "SmoothMap",
    "TensionValue",
    "tension",
    "bitension",
    "bitension_simplified",
    "jiang_bitension",
    "curve_bitension",
    "check_biharmonic",
    "lemma51_integrand",
]


class MapDomainError(Exception):
    """A probed source point maps outside the target chart domain."""


@dataclass
class TensionValue:
    point: np.ndarray
    tau: np.ndarray
    tau2: np.ndarray
    lap_bar_tau: np.ndarray
    div_trK_term: np.ndarray
    L_term: np.ndarray
    K_term: np.ndarray

    def assembly_residual(self) -> float:
        rebuilt = self.lap_bar_tau + self.div_trK_term - self.L_term - self.K_term
        return float(np.abs(self.tau2 - rebuilt).max())


def _compose_cube(cube, components) -> list:
    return [
        [[f.compose(components) for f in row] for row in plane]
        for plane in cube
    ]


def _compose_matrix(mat, components) -> list:
    return [[f.compose(components) for f in row] for row in mat]


class SmoothMap:
    """Closed-form map between statistical manifolds, with cached symbolic
    tension and pullback-Laplacian fields."""

    def __init__(
        self,
        source: StatStructure,
        target: StatStructure,
        components,
        probe_count: int = 32,
    ):
        self.source = source
        self.target = target
        self.components = list(components)
        if len(self.components) != target.dim:
            raise ValueError("one component per target coordinate is required")
        for f in self.components:
            if f.coords != source.chart.coords:
                raise ValueError("map components must live on the source chart")
        self._du = [
            [f.partial(i) for i in range(source.dim)] for f in self.components
        ]
        self._tau_fields = None
        self._W_fields = None
        self._lap_fields = None
        self._gammaN_u = None
        self._gammaNbar_u = None
        if probe_count:
            self._check_image(probe_count)

    # -- plumbing --------------------------------------------------------------

    def _check_image(self, probe_count: int) -> None:
        for p in self.source.chart.probe_points(probe_count):
            q = self.value(p)
            if not self.target.chart.contains(self.target.chart.wrap(q)):
                raise MapDomainError(
                    f"image {np.round(q, 6).tolist()} of source point "
                    f"{np.round(p, 6).tolist()} leaves the target domain"
                )

    def value(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        return np.array([f.evaluate(point) for f in self.components])

    def du(self, point) -> np.ndarray:
        """Differential du[alpha, i] = d_i u^alpha."""
        point = np.asarray(point, dtype=float)
        return np.array(
            [[f.evaluate(point) for f in row] for row in self._du]
        )

    # -- symbolic pipeline -------------------------------------------------------

    def _target_cubes(self):
        if self._gammaN_u is None:
            self._gammaN_u = _compose_cube(self.target.gamma_fields, self.components)
            self._gammaNbar_u = _compose_cube(
                self.target.gamma_bar_fields, self.components
            )
        return self._gammaN_u, self._gammaNbar_u

    @property
    def tau_fields(self) -> list[ExpressionField]:
        if self._tau_fields is None:
            m, n = self.source.dim, self.target.dim
            ginv = self.source.metric_inv_fields
            gammaM = self.source.gamma_fields
            gammaN_u, _ = self._target_cubes()
            zero = constant(0.0, self.source.chart.coords)
            out = []
            for a in range(n):
                acc = zero
                for i in range(m):
                    for j in range(m):
                        term = self._du[a][i].partial(j)
                        for k in range(m):
                            term = term - gammaM[k][i][j] * self._du[a][k]
                        for b in range(n):
                            for c in range(n):
                                gn = gammaN_u[a][b][c]
                                if gn.is_zero():
                                    continue
                                term = term + gn * self._du[b][i] * self._du[c][j]
                        acc = acc + ginv[i][j] * term
                out.append(acc)
            self._tau_fields = out
        return self._tau_fields

    @property
    def W_fields(self) -> list[list[ExpressionField]]:
        """W[alpha][j] = conjugate pullback derivative of tau along d_j."""
        if self._W_fields is None:
            m, n = self.source.dim, self.target.dim
            tau = self.tau_fields
            _, gbar_u = self._target_cubes()
            out = []
            for a in range(n):
                row = []
                for j in range(m):
                    acc = tau[a].partial(j)
                    for b in range(n):
                        for c in range(n):
                            gn = gbar_u[a][b][c]
                            if gn.is_zero():
                                continue
                            acc = acc + gn * self._du[b][j] * tau[c]
                    row.append(acc)
                out.append(row)
            self._W_fields = out
        return self._W_fields

    @property
    def lap_bar_fields(self) -> list[ExpressionField]:
        """Connection Laplacian of tau for the conjugate pair (g, nabla_bar)."""
        if self._lap_fields is None:
            m, n = self.source.dim, self.target.dim
            W = self.W_fields
            ginv = self.source.metric_inv_fields
            gbarM = self.source.gamma_bar_fields
            _, gbar_u = self._target_cubes()
            zero = constant(0.0, self.source.chart.coords)
            out = []
            for a in range(n):
                acc = zero
                for i in range(m):
                    for j in range(m):
                        term = W[a][j].partial(i)
                        for b in range(n):
                            for c in range(n):
                                gn = gbar_u[a][b][c]
                                if gn.is_zero():
                                    continue
                                term = term + gn * self._du[b][i] * W[c][j]
                        for k in range(m):
                            term = term - gbarM[k][i][j] * W[a][k]
                        acc = acc + ginv[i][j] * term
                out.append(acc)
            self._lap_fields = out
        return self._lap_fields


def tension(u: SmoothMap, point) -> np.ndarray:
    """Trace of the second fundamental form of the map at the point."""
    point = np.asarray(point, dtype=float)
    return np.array([f.evaluate(point) for f in u.tau_fields])


def _frame_curvature_term(curv: np.ndarray, ginv: np.ndarray, du: np.ndarray,
                          tau: np.ndarray) -> np.ndarray:
    # sum_i C(u_* e_i, tau, u_* e_i) contracted through the inverse metric
    return np.einsum("ab,lzwx,za,w,xb->l", ginv, curv, du, tau, du)


def bitension(u: SmoothMap, point) -> TensionValue:
    """Full statistical bi-tension with its four assembly terms."""
    point = np.asarray(point, dtype=float)
    tau = tension(u, point)
    lap = np.array([f.evaluate(point) for f in u.lap_bar_fields])
    div_term = u.source.div_trK(point) * tau
    q = u.target.chart.wrap(u.value(point))
    ginv = u.source.metric_inv(point)
    du = u.du(point)
    L = curvature(u.target, INTERCHANGE, q).components
    L_term = _frame_curvature_term(L, ginv, du, tau)
    KN = u.target.K(q)
    K_term = np.einsum("abc,b,c->a", KN, tau, tau)
    tau2 = lap + div_term - L_term - K_term
    return TensionValue(point, tau, tau2, lap, div_term, L_term, K_term)


def bitension_simplified(u: SmoothMap, point) -> np.ndarray:
    """Reduced form valid for trace-free sources and conjugate-symmetric
    targets: the interchange tensor is replaced by the primal curvature and
    the divergence drift drops."""
    point = np.asarray(point, dtype=float)
    tau = tension(u, point)
    lap = np.array([f.evaluate(point) for f in u.lap_bar_fields])
    q = u.target.chart.wrap(u.value(point))
    ginv = u.source.metric_inv(point)
    du = u.du(point)
    RN = curvature(u.target, PRIMAL, q).components
    R_term = _frame_curvature_term(RN, ginv, du, tau)
    KN = u.target.K(q)
    K_term = np.einsum("abc,b,c->a", KN, tau, tau)
    return lap - R_term - K_term


def jiang_bitension(u: SmoothMap, point) -> np.ndarray:
    """Classical Riemannian bi-tension, assembled independently from the
    Levi-Civita data only: rough Laplacian of tau minus the curvature term."""
    point = np.asarray(point, dtype=float)
    m, n = u.source.dim, u.target.dim
    src, tgt = u.source, u.target
    gammaNg_u = _compose_cube(tgt.gamma_g_fields, u.components)
    ginv_f = src.metric_inv_fields
    gammaMg = src.gamma_g_fields

    zero = constant(0.0, src.chart.coords)
    tau_f = []
    for a in range(n):
        acc = zero
        for i in range(m):
            for j in range(m):
                term = u._du[a][i].partial(j)
                for k in range(m):
                    term = term - gammaMg[k][i][j] * u._du[a][k]
                for b in range(n):
                    for c in range(n):
                        gn = gammaNg_u[a][b][c]
                        if not gn.is_zero():
                            term = term + gn * u._du[b][i] * u._du[c][j]
                acc = acc + ginv_f[i][j] * term
        tau_f.append(acc)

    W = []
    for a in range(n):
        row = []
        for j in range(m):
            acc = tau_f[a].partial(j)
            for b in range(n):
                for c in range(n):
                    gn = gammaNg_u[a][b][c]
                    if not gn.is_zero():
                        acc = acc + gn * u._du[b][j] * tau_f[c]
            row.append(acc)
        W.append(row)

    lap = np.zeros(n)
    for a in range(n):
        acc = zero
        for i in range(m):
            for j in range(m):
                term = W[a][j].partial(i)
                for b in range(n):
                    for c in range(n):
                        gn = gammaNg_u[a][b][c]
                        if not gn.is_zero():
                            term = term + gn * u._du[b][i] * W[c][j]
                for k in range(m):
                    term = term - gammaMg[k][i][j] * W[a][k]
                acc = acc + ginv_f[i][j] * term
        lap[a] = acc.evaluate(point)

    tau = np.array([f.evaluate(point) for f in tau_f])
    q = tgt.chart.wrap(u.value(point))
    RN = curvature(tgt, LEVI_CIVITA_KIND, q).components
    R_term = _frame_curvature_term(RN, src.metric_inv(point), u.du(point), tau)
    return lap - R_term


def curve_bitension(c: SmoothMap, t: float) -> TensionValue:
    """Specialised bi-tension of a curve from a Euclidean interval.

    Evaluates nabla_bar_cdot nabla_bar_cdot (nabla_cdot cdot) minus the
    interchange and difference-tensor corrections; agrees with the general
    assembly on one-dimensional sources.
    """
    src = c.source
    if src.dim != 1:
        raise ValueError("curve source must be one-dimensional")
    p = np.asarray([t] if np.ndim(t) == 0 else t, dtype=float)
    if abs(src.metric_fields[0][0].evaluate(p) - 1.0) > 1e-12 or not c.source.gamma_fields[0][0][0].is_zero():
        raise ValueError("curve source must carry the Euclidean structure")
    n = c.target.dim
    comp = c.components
    gammaN_u = _compose_cube(c.target.gamma_fields, comp)
    gammaNbar_u = _compose_cube(c.target.gamma_bar_fields, comp)
    cdot = [f.partial(0) for f in comp]

    def covariant(vec, cube):
        out = []
        for a in range(n):
            acc = vec[a].partial(0)
            for b in range(n):
                for w in range(n):
                    gn = cube[a][b][w]
                    if not gn.is_zero():
                        acc = acc + gn * cdot[b] * vec[w]
            out.append(acc)
        return out

    tau_f = covariant(cdot, gammaN_u)
    A = covariant(tau_f, gammaNbar_u)
    B = covariant(A, gammaNbar_u)

    tau = np.array([f.evaluate(p) for f in tau_f])
    lap = np.array([f.evaluate(p) for f in B])
    q = c.target.chart.wrap(c.value(p))
    L = curvature(c.target, INTERCHANGE, q).components
    cd = np.array([f.evaluate(p) for f in cdot])
    L_term = np.einsum("lzwx,z,w,x->l", L, cd, tau, cd)
    KN = c.target.K(q)
    K_term = np.einsum("abc,b,c->a", KN, tau, tau)
    tau2 = lap - L_term - K_term
    return TensionValue(p, tau, tau2, lap, np.zeros(n), L_term, K_term)


def check_biharmonic(u: SmoothMap, probes=None, tol: float = 1e-6) -> dict:
    """Max target-metric norms of tau and tau2 over the probe set."""
    if probes is None:
        probes = u.source.chart.probe_points(100)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    max_tau = 0.0
    max_tau2 = 0.0
    for p in probes:
        tv = bitension(u, p)
        h = u.target.metric(u.target.chart.wrap(u.value(p)))
        max_tau = max(max_tau, float(np.sqrt(tv.tau @ h @ tv.tau)))
        max_tau2 = max(max_tau2, float(np.sqrt(tv.tau2 @ h @ tv.tau2)))
    return {
        "is_harmonic": max_tau <= tol,
        "is_statistical_biharmonic": max_tau2 <= tol,
        "max_tau": max_tau,
        "max_tau2": max_tau2,
        "tolerance": tol,
    }


def volume_parallel_residual(s: StatStructure, point) -> float:
    """How far the metric volume form is from being conjugate-parallel.

    The conjugate and Levi-Civita divergences of any field differ by the
    contraction K^i_{i nu}; the volume density is nabla_bar-parallel exactly
    when that contraction vanishes.
    """
    K = s.K(np.asarray(point, dtype=float))
    return float(np.abs(np.einsum("iim->m", K)).max())


def lemma51_integrand(u: SmoothMap, point) -> dict:
    """Pointwise divergence identity for X = sum_i h(u_* e_i, tau) e_i.

    Computes div^{nabla_bar} X, the squared tension norm, and the frame
    coupling sum_i h(u_* e_i, nabla_bar^u_{e_i} tau); the identity

        div^{nabla_bar} X = |tau|_h^2 + coupling

    holds pointwise for any map, and the coupling term drops exactly when
    the pulled-back tension is conjugate-parallel.  The report also carries
    the volume-parallelism residual of the source (zero when the metric
    volume form realises div^theta = div^{nabla_bar}).
    """
    point = np.asarray(point, dtype=float)
    m, n = u.source.dim, u.target.dim
    src = u.source
    h_u = _compose_matrix(u.target.metric_fields, u.components)
    tau_f = u.tau_fields
    zero = constant(0.0, src.chart.coords)

    X = []
    for b in range(m):
        acc = zero
        for a in range(m):
            inner = zero
            for al in range(n):
                for be in range(n):
                    hf = h_u[al][be]
                    if hf.is_zero():
                        continue
                    inner = inner + hf * u._du[al][a] * tau_f[be]
            acc = acc + src.metric_inv_fields[a][b] * inner
        X.append(acc)

    from .geometry import divergence

    div_bar = divergence(src, X, "nabla_conjugate", point)
    q = u.target.chart.wrap(u.value(point))
    h = u.target.metric(q)
    tau = tension(u, point)
    tau_norm_sq = float(tau @ h @ tau)
    W = np.array([[f.evaluate(point) for f in row] for row in u.W_fields])
    coupling = float(
        np.einsum("ab,xy,xa,yb->", src.metric_inv(point), h, u.du(point), W)
    )
    return {
        "div_theta_X": div_bar,
        "tau_norm_sq": tau_norm_sq,
        "frame_coupling": coupling,
        "identity_residual": abs(div_bar - tau_norm_sq - coupling),
        "volume_parallel_residual": volume_parallel_residual(src, point),
    }
