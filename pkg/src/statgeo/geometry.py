"""Pointwise tensor geometry of a statistical structure (g, nabla).

Builds, from a chart, the Levi-Civita symbols of g, the primal connection,
the difference tensor K = nabla - nabla^g, and the conjugate connection
nabla_bar = nabla^g - K, all as exact expression fields.  On top of those it
evaluates curvature tensors of every flavour (primal, conjugate,
Levi-Civita, curvature interchange), Tchebychev data, divergences, scalar
Laplacians, Ricci contractions, and the structure-validation report.

Index conventions used throughout:

* connection cubes are indexed ``gamma[k][i][j]`` for Gamma^k_ij,
* curvature components ``R[l, i, j, k]`` give R(e_i, e_j) e_k along e_l,
* Ricci contraction is ``Ric[j, k] = sum_i R[i, i, j, k]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .charts import CHRISTOFFEL, LEVI_CIVITA, ChartManifold
from .expressions import ExpressionField, constant, field_inverse, field_det

__all__ = [
    "CodazziError",
    "StatStructure",
    "build_structure",
    "CurvatureValue",
    "StructureReport",
    "curvature",
    "check_curvature_identities",
    "space_form_interchange",
    "tchebychev",
    "divergence",
    "divergence_field",
    "laplacian_scalar",
    "laplacian_field",
    "ricci_and_U",
    "validate",
]

PRIMAL = "primal"
CONJUGATE = "conjugate"
LEVI_CIVITA_KIND = "levi_civita"
INTERCHANGE = "interchange"
CONJUGATE_INTERCHANGE = "conjugate_interchange"


class CodazziError(Exception):
    """The supplied pair (g, nabla) is not a statistical structure."""

    def __init__(self, residual: float, point: np.ndarray):
        super().__init__(
            f"Codazzi condition fails: residual {residual:.3e} at point "
            f"{np.round(point, 6).tolist()}"
        )
        self.residual = residual
        self.point = point


def _cube_map(fn, cube):
    return tuple(tuple(tuple(fn(f) for f in row) for row in plane) for plane in cube)


def _eval_cube(cube, point: np.ndarray) -> np.ndarray:
    m = len(cube)
    out = np.empty((m, m, m))
    for k in range(m):
        for i in range(m):
            for j in range(m):
                out[k, i, j] = cube[k][i][j].evaluate(point)
    return out


def _eval_matrix(mat, point: np.ndarray) -> np.ndarray:
    m = len(mat)
    out = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            out[i, j] = mat[i][j].evaluate(point)
    return out


class StatStructure:
    """A chart together with its derived statistical structure fields.

    Immutable once built; every operation below is a pure function of the
    structure and a point, so concurrent evaluation is safe.
    """

    def __init__(self, chart: ChartManifold, codazzi_tol: float = 1e-9, probe_count: int = 32):
        self.chart = chart
        m = chart.dim
        coords = chart.coords
        zero = constant(0.0, coords)

        g = chart.metric
        self.metric_fields = g
        self.metric_inv_fields = field_inverse([list(row) for row in g])
        self.det_field = field_det([list(row) for row in g])
        self.sqrt_det_field = self.det_field ** 0.5

        # Levi-Civita symbols from first derivatives of g.
        gamma_g = [[[zero] * m for _ in range(m)] for _ in range(m)]
        dg = [[[g[i][j].partial(a) for j in range(m)] for i in range(m)] for a in range(m)]
        for k in range(m):
            for i in range(m):
                for j in range(i, m):
                    acc = zero
                    for l in range(m):
                        acc = acc + self.metric_inv_fields[k][l] * (
                            dg[i][j][l] + dg[j][i][l] - dg[l][i][j]
                        )
                    entry = 0.5 * acc
                    gamma_g[k][i][j] = entry
                    gamma_g[k][j][i] = entry
        self.gamma_g_fields = tuple(tuple(tuple(row) for row in plane) for plane in gamma_g)

        if chart.connection_kind == LEVI_CIVITA:
            self.gamma_fields = self.gamma_g_fields
            self.K_fields = _cube_map(lambda f: zero, gamma_g)
        elif chart.connection_kind == CHRISTOFFEL:
            self.gamma_fields = chart.connection_fields
            self.K_fields = tuple(
                tuple(
                    tuple(
                        self.gamma_fields[k][i][j] - self.gamma_g_fields[k][i][j]
                        for j in range(m)
                    )
                    for i in range(m)
                )
                for k in range(m)
            )
        else:  # DIFFERENCE_TENSOR
            self.K_fields = chart.connection_fields
            self.gamma_fields = tuple(
                tuple(
                    tuple(
                        self.gamma_g_fields[k][i][j] + self.K_fields[k][i][j]
                        for j in range(m)
                    )
                    for i in range(m)
                )
                for k in range(m)
            )
        self.gamma_bar_fields = tuple(
            tuple(
                tuple(
                    self.gamma_g_fields[k][i][j] - self.K_fields[k][i][j]
                    for j in range(m)
                )
                for i in range(m)
            )
            for k in range(m)
        )

        # Tchebychev data: tr_g K contracted with the inverse metric.
        trk = []
        for i in range(m):
            acc = zero
            for j in range(m):
                for k in range(m):
                    acc = acc + self.metric_inv_fields[j][k] * self.K_fields[i][j][k]
            trk.append(acc)
        self.trK_fields = tuple(trk)
        acc = zero
        for i in range(m):
            acc = acc + self.trK_fields[i].partial(i)
            for mu in range(m):
                acc = acc + self.gamma_g_fields[i][i][mu] * self.trK_fields[mu]
        self.div_trK_field = acc

        self._gamma_by_kind = {
            PRIMAL: self.gamma_fields,
            CONJUGATE: self.gamma_bar_fields,
            LEVI_CIVITA_KIND: self.gamma_g_fields,
        }
        self._check_codazzi(codazzi_tol, probe_count)

    # -- numeric evaluation --------------------------------------------------

    @property
    def dim(self) -> int:
        return self.chart.dim

    def metric(self, point) -> np.ndarray:
        return self.chart.metric_at(point)

    def metric_inv(self, point) -> np.ndarray:
        return np.linalg.inv(self.metric(point))

    def sqrt_det(self, point) -> float:
        return self.sqrt_det_field.evaluate(np.asarray(point, dtype=float))

    def gamma(self, kind: str, point) -> np.ndarray:
        return _eval_cube(self._gamma_by_kind[kind], np.asarray(point, dtype=float))

    def dgamma(self, kind: str, point) -> np.ndarray:
        """Partial derivatives of the connection: DG[a, l, i, j] = d_a Gamma^l_ij."""
        point = np.asarray(point, dtype=float)
        cube = self._gamma_by_kind[kind]
        m = self.dim
        out = np.empty((m, m, m, m))
        for a in range(m):
            for l in range(m):
                for i in range(m):
                    for j in range(m):
                        out[a, l, i, j] = cube[l][i][j].partial(a).evaluate(point)
        return out

    def K(self, point) -> np.ndarray:
        return _eval_cube(self.K_fields, np.asarray(point, dtype=float))

    def trK(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        return np.array([f.evaluate(point) for f in self.trK_fields])

    def div_trK(self, point) -> float:
        return self.div_trK_field.evaluate(np.asarray(point, dtype=float))

    def frame(self, point) -> np.ndarray:
        """Columns are a g-orthonormal frame, built by Cholesky of g (deterministic)."""
        L = np.linalg.cholesky(self.metric(point))
        return np.linalg.inv(L).T

    # -- internal checks -------------------------------------------------------

    def _codazzi_residual(self, point: np.ndarray) -> float:
        g = self.metric(point)
        gam = self.gamma(PRIMAL, point)
        m = self.dim
        dg = np.empty((m, m, m))
        for a in range(m):
            for i in range(m):
                for j in range(m):
                    dg[a, i, j] = self.metric_fields[i][j].partial(a).evaluate(point)
        # nabla_g[i,j,k] = d_i g_jk - Gamma^mu_ij g_mu k - Gamma^mu_ik g_j mu
        nabla_g = dg - np.einsum("mij,mk->ijk", gam, g) - np.einsum("mik,jm->ijk", gam, g)
        return float(np.abs(nabla_g - np.transpose(nabla_g, (1, 0, 2))).max())

    def _check_codazzi(self, tol: float, probe_count: int) -> None:
        worst, worst_point = 0.0, None
        for p in self.chart.probe_points(probe_count):
            r = self._codazzi_residual(p)
            if r > worst:
                worst, worst_point = r, p
        if worst > tol:
            raise CodazziError(worst, worst_point)


def build_structure(chart: ChartManifold, codazzi_tol: float = 1e-9) -> StatStructure:
    """Assemble the derived statistical structure, verifying Codazzi on probes."""
    return StatStructure(chart, codazzi_tol=codazzi_tol)


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------


@dataclass
class CurvatureValue:
    kind: str
    point: np.ndarray
    components: np.ndarray  # shape (m, m, m, m), layout [l, i, j, k]

    def antisymmetry_residual(self) -> float:
        return float(
            np.abs(self.components + np.transpose(self.components, (0, 2, 1, 3))).max()
        )


def _curvature(gam: np.ndarray, dgam: np.ndarray) -> np.ndarray:
    # R^l_ijk = d_i Gamma^l_jk - d_j Gamma^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    first = np.transpose(dgam, (1, 0, 2, 3))  # [l, a=i, j, k] from dgam[a,l,j,k]
    second = np.transpose(dgam, (1, 2, 0, 3))  # d_j Gamma^l_ik -> [l, i, j, k]
    quad1 = np.einsum("lim,mjk->lijk", gam, gam)
    quad2 = np.einsum("ljm,mik->lijk", gam, gam)
    return first - second + quad1 - quad2


def _interchange_from_R(R: np.ndarray, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    # g(L(Z,W)X, Y) = g(R(X,Y)Z, W)  =>  L^l_zwx = g^{ly} R^a_xyz g_aw
    return np.einsum("ly,axyz,aw->lzwx", ginv, R, g)


def curvature(s: StatStructure, kind: str, point) -> CurvatureValue:
    """Coordinate curvature components for the requested connection flavour."""
    point = np.asarray(point, dtype=float)
    if kind in (PRIMAL, CONJUGATE, LEVI_CIVITA_KIND):
        comp = _curvature(s.gamma(kind, point), s.dgamma(kind, point))
        return CurvatureValue(kind, point, comp)
    if kind in (INTERCHANGE, CONJUGATE_INTERCHANGE):
        base = PRIMAL if kind == INTERCHANGE else CONJUGATE
        R = _curvature(s.gamma(base, point), s.dgamma(base, point))
        g = s.metric(point)
        comp = _interchange_from_R(R, g, np.linalg.inv(g))
        return CurvatureValue(kind, point, comp)
    raise ValueError(f"unknown curvature kind {kind!r}")


def space_form_interchange(S: np.ndarray, g: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Interchange tensor of a structure whose curvature has Gauss form.

    For R(X,Y)Z = g(Y,Z) SX - g(X,Z) SY with S symmetric, the interchange
    tensor closes to L(Z,W)X = -g(X,Z) SW + g(SX,W) Z.  Returned layout
    matches ``CurvatureValue``: L[l, z, w, x].
    """
    S = np.asarray(S, dtype=float)
    g = np.asarray(g, dtype=float)
    sym_residual = float(np.abs(g @ S - (g @ S).T).max())
    if sym_residual > tol:
        raise ValueError(f"shape operator is not g-symmetric (residual {sym_residual:.3e})")
    m = g.shape[0]
    eye = np.eye(m)
    term1 = -np.einsum("xz,lw->lzwx", g, S)
    term2 = np.einsum("ax,aw,lz->lzwx", S, g, eye)
    return term1 + term2


def check_curvature_identities(s: StatStructure, point, tol: float = 1e-7) -> dict:
    """Residuals of the pairing, averaging, and interchange identities.

    The curvature-symmetry residual (pairing of R with itself under slot
    exchange) is reported always but only meaningful when the structure is
    conjugate symmetric; callers gate on the returned flag.
    """
    point = np.asarray(point, dtype=float)
    g = s.metric(point)
    ginv = np.linalg.inv(g)
    R = curvature(s, PRIMAL, point).components
    Rbar = curvature(s, CONJUGATE, point).components
    Rg = curvature(s, LEVI_CIVITA_KIND, point).components
    K = s.K(point)
    L = _interchange_from_R(R, g, ginv)
    Lbar = _interchange_from_R(Rbar, g, ginv)

    # g(Rbar(X,Y)Z, W) = -g(Z, R(X,Y)W)
    lhs = np.einsum("lijk,lw->ijkw", Rbar, g)
    rhs = -np.einsum("lijw,lk->ijkw", R, g)
    duality = float(np.abs(lhs - rhs).max())

    # (R + Rbar)/2 = R^g + [K_X, K_Y]
    bracket = np.einsum("lim,mjk->lijk", K, K) - np.einsum("ljm,mik->lijk", K, K)
    averaging = float(np.abs(0.5 * (R + Rbar) - Rg - bracket).max())

    # L(Z,W)Y = -Lbar(W,Z)Y
    swap = float(np.abs(L + np.transpose(Lbar, (0, 2, 1, 3))).max())
    # g(L(Z,W)Y, X) = -g(Y, L(Z,W)X)
    pairing = np.einsum("lzwy,lx->zwyx", L, g)
    skew = float(np.abs(pairing + np.transpose(pairing, (0, 1, 3, 2))).max())
    # Rbar(Y,Z)W = L(Y,W)Z - L(Z,W)Y
    recomb = np.einsum("lywz->lyzw", L) - np.einsum("lzwy->lyzw", L)
    rebuild = float(np.abs(Rbar - recomb).max())

    # g(R(Z,W)X, Y) = g(R(X,Y)Z, W); a genuine identity only under conjugate symmetry
    q = np.einsum("lijk,lw->ijkw", R, g)  # q[x,y,z,w] = g(R(x,y)z, w)
    pair_symmetry = float(np.abs(q - np.transpose(q, (2, 3, 0, 1))).max())
    conjugate_symmetric = float(np.abs(R - Rbar).max()) <= tol

    return {
        "duality": duality,
        "averaging": averaging,
        "interchange_swap": swap,
        "interchange_skew": skew,
        "conjugate_rebuild": rebuild,
        "pair_symmetry": pair_symmetry,
        "conjugate_symmetric": conjugate_symmetric,
    }


# ---------------------------------------------------------------------------
# Tchebychev, divergences, Laplacians
# ---------------------------------------------------------------------------


def tchebychev(s: StatStructure, point) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (T, nabla^g T, tr_g K) at the point; T = tr_g K / m."""
    point = np.asarray(point, dtype=float)
    m = s.dim
    trk = s.trK(point)
    T = trk / m
    gam_g = s.gamma(LEVI_CIVITA_KIND, point)
    dT = np.empty((m, m))  # dT[i, j] = d_j T^i
    for i in range(m):
        for j in range(m):
            dT[i, j] = s.trK_fields[i].partial(j).evaluate(point) / m
    T_op = dT + np.einsum("ijk,k->ij", gam_g, T)
    return T, T_op, trk


_DIV_KINDS = ("nabla_primal", "nabla_conjugate", "levi_civita", "theta_volume")


def divergence(s: StatStructure, X: Sequence[ExpressionField], kind: str, point) -> float:
    """Divergence of the vector field X for the chosen connection or volume form."""
    point = np.asarray(point, dtype=float)
    m = s.dim
    if kind == "theta_volume":
        # Lie-derivative form for theta = volume density of g; independent of
        # the trace formula used by the connection kinds.
        sd = s.sqrt_det_field
        total = 0.0
        for i in range(m):
            total += (sd * X[i]).partial(i).evaluate(point)
        return total / sd.evaluate(point)
    gamma_map = {
        "nabla_primal": PRIMAL,
        "nabla_conjugate": CONJUGATE,
        "levi_civita": LEVI_CIVITA_KIND,
    }
    if kind not in gamma_map:
        raise ValueError(f"unknown divergence kind {kind!r}; expected one of {_DIV_KINDS}")
    gam = s.gamma(gamma_map[kind], point)
    total = 0.0
    for i in range(m):
        total += X[i].partial(i).evaluate(point)
    Xv = np.array([f.evaluate(point) for f in X])
    total += float(np.einsum("iim,m->", gam, Xv))
    return total


def divergence_field(s: StatStructure, X: Sequence[ExpressionField], kind: str) -> ExpressionField:
    """Divergence of X as an exact field (same kinds as ``divergence``)."""
    m = s.dim
    if kind == "theta_volume":
        sd = s.sqrt_det_field
        acc = constant(0.0, s.chart.coords)
        for i in range(m):
            acc = acc + (sd * X[i]).partial(i)
        return acc / sd
    gamma_map = {
        "nabla_primal": s.gamma_fields,
        "nabla_conjugate": s.gamma_bar_fields,
        "levi_civita": s.gamma_g_fields,
    }
    if kind not in gamma_map:
        raise ValueError(f"unknown divergence kind {kind!r}; expected one of {_DIV_KINDS}")
    cube = gamma_map[kind]
    acc = constant(0.0, s.chart.coords)
    for i in range(m):
        acc = acc + X[i].partial(i)
        for mu in range(m):
            acc = acc + cube[i][i][mu] * X[mu]
    return acc


def laplacian_field(s: StatStructure, f: ExpressionField, variant: str) -> ExpressionField:
    """The chosen scalar Laplacian of f as an exact field (composable)."""
    m = s.dim
    lap = constant(0.0, s.chart.coords)
    for i in range(m):
        for j in range(m):
            hess = f.partial(i).partial(j)
            for k in range(m):
                hess = hess - s.gamma_g_fields[k][i][j] * f.partial(k)
            lap = lap + s.metric_inv_fields[i][j] * hess
    if variant == "riemannian":
        return lap
    drift = constant(0.0, s.chart.coords)
    for k in range(m):
        drift = drift + s.trK_fields[k] * f.partial(k)
    if variant == "primal":
        return lap - drift
    if variant == "conjugate":
        return lap + drift
    raise ValueError(f"unknown Laplacian variant {variant!r}")


def laplacian_scalar(s: StatStructure, f: ExpressionField, variant: str, point) -> float:
    return laplacian_field(s, f, variant).evaluate(np.asarray(point, dtype=float))


# ---------------------------------------------------------------------------
# Ricci data and hypothesis probes
# ---------------------------------------------------------------------------


def _ricci(R: np.ndarray) -> np.ndarray:
    return np.einsum("iijk->jk", R)


def ricci_and_U(s: StatStructure, point, planes: int = 64, seed: int = 271828) -> dict:
    """Ricci tensors, the comparison tensor U = 2 R^g - R, a sampled minimum of
    the U-sectional form, and the smallest eigenvalue of Ric - Ric_bar - 2 Ric^g.

    The sectional minimum is a fixed-seed probe over ``planes`` orthonormal
    2-frames, not a certified global bound.
    """
    point = np.asarray(point, dtype=float)
    g = s.metric(point)
    R = curvature(s, PRIMAL, point).components
    Rbar = curvature(s, CONJUGATE, point).components
    Rg = curvature(s, LEVI_CIVITA_KIND, point).components
    U = 2.0 * Rg - R
    ric = _ricci(R)
    ric_bar = _ricci(Rbar)
    ric_g = _ricci(Rg)

    m = s.dim
    rng = np.random.default_rng(seed)
    min_sec = np.inf
    if m >= 2:
        for _ in range(planes):
            X = rng.standard_normal(m)
            Y = rng.standard_normal(m)
            X = X / np.sqrt(X @ g @ X)
            Y = Y - (X @ g @ Y) * X
            norm = np.sqrt(Y @ g @ Y)
            if norm < 1e-12:
                continue
            Y = Y / norm
            vec = np.einsum("lijk,i,j,k->l", U, X, Y, Y)
            min_sec = min(min_sec, float(vec @ g @ X))
    else:
        min_sec = 0.0

    hyp = ric - ric_bar - 2.0 * ric_g
    hyp_sym = 0.5 * (hyp + hyp.T)
    min_eig = float(np.linalg.eigvalsh(hyp_sym).min())
    return {
        "ric": ric,
        "ric_bar": ric_bar,
        "ric_g": ric_g,
        "U": U,
        "min_U_sectional": min_sec,
        "ricci_gap_min_eig": min_eig,
    }


# ---------------------------------------------------------------------------
# Structure validation report
# ---------------------------------------------------------------------------


@dataclass
class FlagResult:
    passed: bool
    residual: float
    worst_point: np.ndarray


@dataclass
class StructureReport:
    tolerance: float
    flags: dict[str, FlagResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.flags.values())

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "passed": self.passed,
            "flags": {
                name: {
                    "passed": f.passed,
                    "residual": f.residual,
                    "worst_point": np.asarray(f.worst_point).tolist(),
                }
                for name, f in self.flags.items()
            },
        }


def validate(s: StatStructure, probes=None, tol: float = 1e-9) -> StructureReport:
    """Check torsion, Codazzi, positive definiteness, conjugate symmetry, and
    the trace-free (apolarity) condition over a probe set."""
    if probes is None:
        probes = s.chart.probe_points(32)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    report = StructureReport(tolerance=tol)

    def record(name, residual_fn, invert=False):
        worst, worst_pt = -np.inf, probes[0]
        for p in probes:
            r = residual_fn(p)
            if r > worst:
                worst, worst_pt = r, p
        report.flags[name] = FlagResult(worst <= tol, worst, worst_pt)

    def torsion(p):
        gam = s.gamma(PRIMAL, p)
        return float(np.abs(gam - np.transpose(gam, (0, 2, 1))).max())

    def codazzi(p):
        return s._codazzi_residual(p)

    def spd(p):
        eig = float(np.linalg.eigvalsh(s.metric(p)).min())
        return max(0.0, -eig)

    def conj_sym(p):
        R = curvature(s, PRIMAL, p).components
        Rbar = curvature(s, CONJUGATE, p).components
        return float(np.abs(R - Rbar).max())

    def trace_free(p):
        return float(np.abs(s.trK(p)).max())

    record("torsion_free", torsion)
    record("codazzi", codazzi)
    record("spd", spd)
    record("conjugate_symmetric", conj_sym)
    record("trace_free", trace_free)
    return report
