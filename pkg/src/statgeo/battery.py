"""The reference example battery behind ``statgeo paper-examples``.

Every closed-form value the engine is expected to reproduce is encoded here
as a named check with a fixed tolerance, grouped into nine criteria:

1. the flat dual structure on the plane (curvatures, Tchebychev data),
2. the biharmonic scalar field sinh(x) + cosh(y) on that structure,
3. affine lines into the flat dual plane,
4. probability-simplex closed forms,
5. Blaschke hypersurfaces and the affine-hypersphere bi-tension criterion,
6. the first variation identity of the bi-energy on torus lattices,
7. Green's formula and Laplacian adjointness,
8. the pointwise tensor identity suite over the whole fixture set,
9. bi-energy descent to a biharmonic map.

The same checks back the acceptance test suite; each check records its
residual, tolerance, and a human-readable anchor describing the fact it
verifies.
"""

from __future__ import annotations

import fnmatch
import time
from dataclasses import dataclass

import numpy as np

from . import builtins as registry
from . import equiaffine as ea
from . import geometry as geo
from . import maps as mp
from . import simplex as sx
from . import variational as va
from .charts import Box
from .expressions import constant, coordinate_fields, parse_expression

__all__ = ["CheckResult", "CRITERIA", "run_criterion", "run_all"]


@dataclass
class CheckResult:
    name: str
    anchor: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }


def _probes(structure, count, seed):
    rng = np.random.default_rng(seed)
    return structure.chart.random_points(count, rng)


# -- criterion 1: flat dual-connection plane ---------------------------------


def battery_flat_plane(tol_scale: float = 1.0) -> list[CheckResult]:
    s = registry.resolve_structure("geost")
    pts = _probes(s, 100, seed=101)
    r_primal = max(
        float(np.abs(geo.curvature(s, "primal", p).components).max()) for p in pts
    )
    r_conj = max(
        float(np.abs(geo.curvature(s, "conjugate", p).components).max()) for p in pts
    )
    trk_res = max(float(np.abs(s.trK(p) - 1.0).max()) for p in pts)
    top_res = max(float(np.abs(geo.tchebychev(s, p)[1]).max()) for p in pts)
    codazzi = max(s._codazzi_residual(p) for p in pts)
    t = tol_scale
    return [
        CheckResult("flat_plane.curvature_primal", "primal connection is flat", r_primal, 1e-9 * t),
        CheckResult("flat_plane.curvature_conjugate", "conjugate connection is flat", r_conj, 1e-9 * t),
        CheckResult("flat_plane.trace_K", "difference-tensor trace equals (1,1)", trk_res, 1e-10 * t),
        CheckResult("flat_plane.tchebychev_operator", "Tchebychev operator vanishes", top_res, 1e-10 * t),
        CheckResult("flat_plane.codazzi", "Codazzi condition", codazzi, 1e-10 * t),
    ]


# -- criterion 2: biharmonic scalar field ------------------------------------


def battery_scalar_map(tol_scale: float = 1.0) -> list[CheckResult]:
    s = registry.resolve_structure("geost")
    line = registry.resolve_structure("real_line")
    f = mp.SmoothMap(s, line, [parse_expression("sinh(x) + cosh(y)", ["x", "y"])])
    pts = _probes(s, 100, seed=202)
    tau2_max = max(float(np.abs(mp.bitension(f, p).tau2).max()) for p in pts)
    tau_ref = mp.tension(f, [1.0, 0.0])[0]
    t = tol_scale
    return [
        CheckResult(
            "scalar_map.bitension", "bi-Laplacian annihilates sinh(x)+cosh(y)",
            tau2_max, 1e-7 * t,
        ),
        CheckResult(
            "scalar_map.tension_reference", "tension value sinh(1)+1-cosh(1) at (1,0)",
            abs(tau_ref - 0.632120558), 1e-9 * t,
        ),
    ]


# -- criterion 3: affine lines into the dual plane ---------------------------


def battery_lines(tol_scale: float = 1.0) -> list[CheckResult]:
    geost = registry.resolve_structure("geost")
    interval = registry.euclidean_structure(1, half_width=1.05)
    rng = np.random.default_rng(303)
    worst_tau2 = 0.0
    worst_norm = 0.0
    ts = np.linspace(-1.0, 1.0, 50)
    for _ in range(20):
        a, b, c, d = (float(v) for v in rng.uniform(-1.0, 1.0, size=4))
        comps = [
            parse_expression(f"{a!r}*x + {c!r}", ["x"]),
            parse_expression(f"{b!r}*x + {d!r}", ["x"]),
        ]
        curve = mp.SmoothMap(interval, geost, comps, probe_count=0)
        for t in ts:
            tv = mp.bitension(curve, [t])
            worst_tau2 = max(worst_tau2, float(np.abs(tv.tau2).max()))
            expected = np.hypot(a * a, b * b)
            worst_norm = max(worst_norm, abs(float(np.hypot(*tv.tau)) - expected))
    ts_ = tol_scale
    return [
        CheckResult("lines.bitension", "affine lines are statistically biharmonic",
                    worst_tau2, 1e-8 * ts_),
        CheckResult("lines.tension_norm", "line tension has components (a^2, b^2)",
                    worst_norm, 1e-9 * ts_),
    ]


# -- criterion 4: probability simplex ----------------------------------------


def battery_simplex(tol_scale: float = 1.0) -> list[CheckResult]:
    out = []
    t = tol_scale
    for n in (1, 2, 3):
        s = sx.simplex_structure(n)
        rng = np.random.default_rng(400 + n)
        worst = 0.0
        for _ in range(50):
            p = rng.dirichlet(np.ones(n + 1)) * 0.9 + 0.1 / (n + 1)
            p = p[:n]
            closed = sx.closed_form_div_trK(n, p)
            numeric = s.div_trK(p)
            worst = max(worst, abs(numeric - closed) / abs(closed))
        out.append(
            CheckResult(
                f"simplex.div_trK.n{n}",
                "closed-form divergence of the difference-tensor trace",
                worst, 1e-6 * t,
            )
        )
    s1 = sx.simplex_structure(1)
    out.append(
        CheckResult(
            "simplex.div_trK.uniform_n1", "value 1 at the uniform distribution, n=1",
            abs(s1.div_trK([0.5]) - 1.0), 1e-6 * t,
        )
    )
    s2 = sx.simplex_structure(2)
    out.append(
        CheckResult(
            "simplex.div_trK.uniform_n2", "value 3 at the uniform distribution, n=2",
            abs(s2.div_trK([1 / 3, 1 / 3]) - 3.0), 1e-6 * t,
        )
    )
    rng = np.random.default_rng(444)
    worst_sec = 0.0
    for _ in range(10):
        p = rng.dirichlet(np.ones(3)) * 0.8 + 0.2 / 3
        p = p[:2]
        g = s2.metric(p)
        Rg = geo.curvature(s2, "levi_civita", p).components
        Rlow = np.einsum("lijk,lm->mijk", Rg, g)
        X = np.array([1.0, 0.0])
        Y = np.array([0.0, 1.0])
        sec = np.einsum("mijk,i,j,k,m->", Rlow, X, Y, Y, X)
        sec /= (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
        worst_sec = max(worst_sec, abs(sec - 0.25))
    out.append(
        CheckResult("simplex.sectional", "Fisher metric has constant curvature 1/4",
                    worst_sec, 1e-6 * t)
    )
    worst_pair = 0.0
    for _ in range(20):
        p = rng.dirichlet(np.ones(3)) * 0.8 + 0.2 / 3
        p = p[:2]
        inv = sx.simplex_invariants(2, p, s2)
        worst_pair = max(worst_pair, inv["K_pairing_delta"])
    out.append(
        CheckResult("simplex.K_pairing", "cubic pairing of the difference tensor",
                    worst_pair, 1e-7 * t)
    )
    return out


# -- criterion 5: Blaschke hypersurfaces --------------------------------------


def _paraboloid(m: int) -> ea.GraphHypersurface:
    coords = ["x", "y", "z"][:m] if m <= 3 else [f"x{i+1}" for i in range(m)]
    xs = coordinate_fields(coords)
    F = constant(0.0, coords)
    for x in xs:
        F = F + 0.5 * x * x
    return ea.GraphHypersurface(m, F, Box(tuple((-1.5, 1.5) for _ in range(m))))


def battery_hypersurfaces(tol_scale: float = 1.0) -> list[CheckResult]:
    out = []
    t = tol_scale
    for m in (1, 2):
        hs = _paraboloid(m)
        pipe = ea.blaschke_pipeline(hs)
        pts = hs.domain.sample(50)
        e_last = np.zeros(m + 1)
        e_last[m] = 1.0
        xi_res = max(float(np.abs(pipe.xi(p) - e_last).max()) for p in pts)
        s_res = max(float(np.abs(pipe.S(p)).max()) for p in pts)
        tau_res, t2f, t2d, agree = 0.0, 0.0, 0.0, 0.0
        for p in pts:
            bt = ea.hypersurface_bitension(hs, p)
            tau_res = max(tau_res, float(np.abs(bt["tau"] - bt["m_xi"]).max()))
            t2f = max(t2f, float(np.abs(bt["tau2_formula"]).max()))
            t2d = max(t2d, float(np.abs(bt["tau2_direct"]).max()))
            agree = max(agree, bt["route_delta"])
        out += [
            CheckResult(f"blaschke.paraboloid{m}.normal", "distinguished transversal is vertical",
                        xi_res, 1e-9 * t),
            CheckResult(f"blaschke.paraboloid{m}.shape", "shape operator vanishes",
                        s_res, 1e-9 * t),
            CheckResult(f"blaschke.paraboloid{m}.tension", "immersion tension equals m * transversal",
                        tau_res, 1e-8 * t),
            CheckResult(f"blaschke.paraboloid{m}.bitension_formula",
                        "closed-form bi-tension vanishes", t2f, 1e-6 * t),
            CheckResult(f"blaschke.paraboloid{m}.bitension_direct",
                        "pipeline bi-tension vanishes", t2d, 1e-6 * t),
            CheckResult(f"blaschke.paraboloid{m}.routes",
                        "closed form agrees with the general pipeline", agree, 1e-5 * t),
        ]
    ell = ea.GraphHypersurface(
        1, parse_expression("-sqrt(1 - x^2)", ["x"]), Box(((-0.9, 0.9),))
    )
    pts = ell.domain.sample(50)
    agree = 0.0
    min_t2 = np.inf
    for p in pts:
        bt = ea.hypersurface_bitension(ell, p)
        agree = max(agree, bt["route_delta"])
        min_t2 = min(min_t2, float(np.abs(bt["tau2_formula"]).max()))
    out += [
        CheckResult("blaschke.ellipse.routes",
                    "curved graph: bi-tension routes agree", agree, 1e-5 * t),
        CheckResult("blaschke.ellipse.nonzero",
                    "proper affine sphere is not biharmonic (bi-tension bounded below)",
                    0.0 if min_t2 > 0.1 else 1.0, 0.5),
    ]
    return out


# -- criterion 6: first variation of the bi-energy ---------------------------


def _fvf_battery():
    torus1 = registry.resolve_structure("flat_torus:1")
    torus2 = registry.resolve_structure("flat_torus:2")
    pert = registry.resolve_structure("perturbed_torus")
    line = registry.resolve_structure("real_line")
    geost = registry.resolve_structure("geost")
    x = ["x"]
    xy = ["x", "y"]
    return [
        ("sin_sin", torus1, line, ["sin(x)"], ["sin(x)"]),
        ("sin_cos", torus1, line, ["sin(x)"], ["cos(x)"]),
        ("two_mode", torus1, line, ["sin(x) + 0.3*sin(2*x)"], ["sin(2*x)"]),
        ("drifted_source", pert, line, ["0.4*sin(x)"], ["0.2*sin(x) + 0.1*sin(2*x)"]),
        ("dual_target", torus1, geost,
         ["0.3*sin(x)", "0.2*cos(x)"], ["0.1*sin(2*x)", "0.1*cos(x)"]),
        ("two_torus", torus2, line, ["sin(x)*cos(y)"], ["cos(x)*sin(y)"]),
    ]


def battery_first_variation(tol_scale: float = 1.0, resolution: int = 64) -> list[CheckResult]:
    out = []
    t = tol_scale
    for name, source, target, u_texts, v_texts in _fvf_battery():
        coords = list(source.chart.coords)
        comps = [parse_expression(s, coords) for s in u_texts]
        res = (resolution,) * source.dim
        u = va.GridMap.from_fields(source, res, target, comps)
        V = [parse_expression(s, coords) for s in v_texts]
        rep = va.first_variation_check(u, V)
        out.append(
            CheckResult(f"first_variation.{name}",
                        "derivative of the bi-energy equals the bi-tension pairing",
                        rep.relative_error, 1e-4 * t)
        )
        if name == "sin_sin":
            out.append(
                CheckResult("first_variation.sin_sin_value",
                            "both sides equal pi for the sine pair",
                            max(abs(rep.lhs - np.pi), abs(rep.rhs - np.pi)), 1e-4 * t)
            )
    return out


# -- criterion 7: Green's formula and adjointness ------------------------------


def battery_green_adjoint(tol_scale: float = 1.0, resolution: int = 64) -> list[CheckResult]:
    t = tol_scale
    torus1 = registry.resolve_structure("flat_torus:1")
    torus2 = registry.resolve_structure("flat_torus:2")
    pert = registry.resolve_structure("perturbed_torus")
    rng = np.random.default_rng(707)

    def trig(coords, modes=3):
        terms = [f"{rng.uniform(-0.5, 0.5):.6f}"]
        for k in range(1, modes + 1):
            for c in coords:
                terms.append(f"{rng.uniform(-1, 1):.6f}*sin({k}*{c})")
                terms.append(f"{rng.uniform(-1, 1):.6f}*cos({k}*{c})")
        return parse_expression(" + ".join(terms), list(coords))

    worst_green = 0.0
    for s, res in ((torus1, (resolution,)), (torus2, (resolution // 2, resolution // 2)),
                   (pert, (resolution,))):
        for _ in range(7):
            X = [trig(s.chart.coords) for _ in range(s.dim)]
            divf = geo.divergence_field(s, X, "levi_civita")
            worst_green = max(worst_green, abs(va.integrate(s, divf, res)))
    checks = [
        CheckResult("green.volume_divergence",
                    "periodic integral of a divergence vanishes", worst_green, 1e-9 * t)
    ]
    for label, s in (("riemannian", torus1), ("drifted", pert)):
        worst = 0.0
        for _ in range(5):
            xi = trig(s.chart.coords)
            eta = trig(s.chart.coords)
            res = va.adjointness_check(s, xi, eta, (resolution,))
            worst = max(worst, res["delta"])
        checks.append(
            CheckResult(f"adjointness.{label}",
                        "statistical Laplacian pairs with its conjugate plus the divergence term",
                        worst, 1e-6 * t)
        )
    return checks


# -- criterion 8: identity suite over the fixture set --------------------------


def _fixture_structures():
    return {
        "geost": registry.resolve_structure("geost"),
        "euclidean2": registry.resolve_structure("euclidean:2"),
        "sphere": registry.resolve_structure("sphere"),
        "simplex2": sx.simplex_structure(2),
        "paraboloid2": registry.resolve_structure("paraboloid:2"),
        "tracefree_torus": registry.resolve_structure("tracefree_torus"),
        "perturbed_torus": registry.resolve_structure("perturbed_torus"),
    }


def _fixture_maps():
    geost = registry.resolve_structure("geost")
    line = registry.resolve_structure("real_line")
    eu2 = registry.euclidean_structure(2, half_width=1.1)
    sphere = registry.resolve_structure("sphere")
    tf = registry.resolve_structure("tracefree_torus")
    interval = registry.euclidean_structure(1, half_width=1.2)
    eu2_wide = registry.resolve_structure("euclidean:2")
    out = {
        "scalar_dual": mp.SmoothMap(
            geost, line, [parse_expression("sinh(x) + cosh(y)", ["x", "y"])]
        ),
        "plane_to_sphere": mp.SmoothMap(
            eu2, sphere,
            [parse_expression("1.2 + 0.1*x + 0.15*y", ["x", "y"]),
             parse_expression("0.5*x - 0.2*y + 1", ["x", "y"])],
        ),
        "circle_curve": mp.SmoothMap(
            interval, eu2_wide,
            [parse_expression("cos(x)", ["x"]), parse_expression("sin(x)", ["x"])],
        ),
        "tracefree_to_dual": mp.SmoothMap(
            tf, geost,
            [parse_expression("0.4*sin(x) + 0.1*cos(y)", ["x", "y"]),
             parse_expression("0.3*cos(x)*sin(y)", ["x", "y"])],
        ),
    }
    for m in (1, 2):
        pipe = ea.blaschke_pipeline(_paraboloid(m))
        out[f"paraboloid{m}_immersion"] = pipe.immersion_map()
    ell = ea.GraphHypersurface(
        1, parse_expression("-sqrt(1 - x^2)", ["x"]), Box(((-0.9, 0.9),))
    )
    out["ellipse_immersion"] = ea.blaschke_pipeline(ell).immersion_map()
    return out


def _eq4_residual(s, p):
    g = s.metric(p)
    gam = s.gamma("primal", p)
    m = s.dim
    dg = np.empty((m, m, m))
    for a in range(m):
        for i in range(m):
            for j in range(m):
                dg[a, i, j] = s.metric_fields[i][j].partial(a).evaluate(p)
    nabla_g = dg - np.einsum("mij,mk->ijk", gam, g) - np.einsum("mik,jm->ijk", gam, g)
    K_low = np.einsum("mij,mk->ijk", s.K(p), g)
    return float(np.abs(nabla_g + 2.0 * K_low).max())


def battery_identity_suite(tol_scale: float = 1.0) -> list[CheckResult]:
    t = tol_scale
    structures = _fixture_structures()
    checks = []

    worst_eq4 = 0.0
    worst_ids = {"duality": 0.0, "averaging": 0.0, "interchange_swap": 0.0,
                 "interchange_skew": 0.0, "conjugate_rebuild": 0.0}
    worst_lap = 0.0
    worst_div = 0.0
    worst_inv = 0.0
    rng = np.random.default_rng(808)
    for s in structures.values():
        pts100 = _probes(s, 100, seed=810)
        for p in pts100:
            worst_eq4 = max(worst_eq4, _eq4_residual(s, p))
        for p in pts100[:10]:
            ids = geo.check_curvature_identities(s, p)
            for key in worst_ids:
                worst_ids[key] = max(worst_ids[key], ids[key])
        coords = list(s.chart.coords)
        for p in pts100[:10]:
            # product-rule identity for the primal divergence, Leibniz form
            f = parse_expression(
                " + ".join([f"{rng.uniform(-1, 1):.6f}"]
                           + [f"{rng.uniform(-1, 1):.6f}*sin({c})" for c in coords]),
                coords,
            )
            X = [
                parse_expression(
                    f"{rng.uniform(-1, 1):.6f} + {rng.uniform(-1, 1):.6f}*cos({c})",
                    coords,
                )
                for c in coords
            ]
            fX = [f * x for x in X]
            lhs = geo.divergence(s, fX, "nabla_primal", p)
            xf = sum(X[i].evaluate(p) * f.partial(i).evaluate(p) for i in range(s.dim))
            rhs = xf + f.evaluate(p) * geo.divergence(s, X, "nabla_primal", p)
            worst_div = max(worst_div, abs(lhs - rhs))
            for variant_pair in (("primal", "conjugate"),):
                a = geo.laplacian_scalar(s, f, variant_pair[0], p)
                b = geo.laplacian_scalar(s, f, variant_pair[1], p)
                c = geo.laplacian_scalar(s, f, "riemannian", p)
                worst_lap = max(worst_lap, abs(a + b - 2.0 * c))
        # conjugation involution: rebuild from (g, gamma_bar) and conjugate again
        from .charts import CHRISTOFFEL, ChartManifold

        rebuilt = geo.StatStructure(
            ChartManifold(s.chart.coords, s.chart.topology,
                          [list(row) for row in s.metric_fields],
                          CHRISTOFFEL, s.gamma_bar_fields, validate=False),
            codazzi_tol=np.inf,
        )
        for p in pts100[:5]:
            worst_inv = max(
                worst_inv,
                float(np.abs(rebuilt.gamma("conjugate", p) - s.gamma("primal", p)).max()),
            )
    checks += [
        CheckResult("identities.metric_derivative", "metric derivative pairs with the difference tensor",
                    worst_eq4, 1e-8 * t),
        CheckResult("identities.curvature_duality", "conjugate curvature pairing identity",
                    worst_ids["duality"], 1e-7 * t),
        CheckResult("identities.curvature_averaging", "curvature mean decomposes through K-brackets",
                    worst_ids["averaging"], 1e-7 * t),
        CheckResult("identities.interchange_swap", "interchange tensors swap with a sign",
                    worst_ids["interchange_swap"], 1e-7 * t),
        CheckResult("identities.interchange_skew", "interchange pairing is skew",
                    worst_ids["interchange_skew"], 1e-7 * t),
        CheckResult("identities.conjugate_rebuild", "conjugate curvature rebuilds from the interchange tensor",
                    worst_ids["conjugate_rebuild"], 1e-7 * t),
        CheckResult("identities.divergence_leibniz", "divergence product rule",
                    worst_div, 1e-8 * t),
        CheckResult("identities.laplacian_mean", "primal and conjugate Laplacians average to the metric one",
                    worst_lap, 1e-12 * t),
        CheckResult("identities.conjugation_involution", "conjugating twice returns the primal connection",
                    worst_inv, 1e-12 * t),
    ]

    maps = _fixture_maps()
    worst_simplified = 0.0
    for name in ("paraboloid1_immersion", "paraboloid2_immersion",
                 "ellipse_immersion", "tracefree_to_dual"):
        u = maps[name]
        for p in u.source.chart.probe_points(10):
            tv = mp.bitension(u, p)
            simp = mp.bitension_simplified(u, p)
            worst_simplified = max(worst_simplified, float(np.abs(tv.tau2 - simp).max()))
    checks.append(
        CheckResult("identities.reduced_bitension",
                    "trace-free source and conjugate-symmetric target collapse the bi-tension",
                    worst_simplified, 1e-7 * t)
    )

    worst_jiang = 0.0
    for name in ("plane_to_sphere", "circle_curve"):
        u = maps[name]
        for p in u.source.chart.probe_points(10):
            tv = mp.bitension(u, p)
            jj = mp.jiang_bitension(u, p)
            worst_jiang = max(worst_jiang, float(np.abs(tv.tau2 - jj).max()))
    checks.append(
        CheckResult("identities.riemannian_collapse",
                    "Riemannian structures restore the classical bi-tension",
                    worst_jiang, 1e-7 * t)
    )

    worst_lemma = 0.0
    for name in ("scalar_dual", "plane_to_sphere", "circle_curve"):
        u = maps[name]
        for p in u.source.chart.probe_points(10):
            info = mp.lemma51_integrand(u, p)
            worst_lemma = max(worst_lemma, info["identity_residual"])
    checks.append(
        CheckResult("identities.tension_divergence",
                    "divergence of the tension pairing field closes pointwise",
                    worst_lemma, 1e-7 * t)
    )

    worst_assembly = 0.0
    for u in maps.values():
        for p in u.source.chart.probe_points(5):
            worst_assembly = max(worst_assembly, mp.bitension(u, p).assembly_residual())
    checks.append(
        CheckResult("identities.bitension_assembly",
                    "bi-tension equals the sum of its four recorded terms",
                    worst_assembly, 1e-12 * t)
    )
    return checks


# -- criterion 9: descent solver -----------------------------------------------


def battery_solver(tol_scale: float = 1.0, resolution: int = 16) -> list[CheckResult]:
    torus1 = registry.resolve_structure("flat_torus:1")
    line = registry.resolve_structure("real_line")
    u0 = va.GridMap.from_fields(
        torus1, (resolution,), line,
        [parse_expression("sin(x) + 0.3*sin(2*x)", ["x"])],
    )
    u, rep = va.minimize(u0, max_iter=5000, step=0.1, tol=1e-4)
    energies = np.asarray(rep.energies)
    monotone = float(max(0.0, float((energies[1:] - energies[:-1]).max(initial=0.0))))
    t = tol_scale
    return [
        CheckResult("solver.converged", "descent reaches the bi-tension tolerance",
                    rep.final_max_tau2, 1e-4 * t),
        CheckResult("solver.monotone", "recorded bi-energies never increase",
                    monotone, 0.0),
        CheckResult("solver.budget", "converged within the iteration budget",
                    0.0 if rep.termination == "tolerance met" else 1.0, 0.5),
    ]


CRITERIA = {
    "1-flat-plane": battery_flat_plane,
    "2-scalar-map": battery_scalar_map,
    "3-lines": battery_lines,
    "4-simplex": battery_simplex,
    "5-hypersurfaces": battery_hypersurfaces,
    "6-first-variation": battery_first_variation,
    "7-green-adjoint": battery_green_adjoint,
    "8-identity-suite": battery_identity_suite,
    "9-solver": battery_solver,
}


def run_criterion(key: str, tol_scale: float = 1.0) -> tuple[list[CheckResult], float]:
    start = time.perf_counter()
    checks = CRITERIA[key](tol_scale)
    return checks, time.perf_counter() - start


def run_all(name_filter: str | None = None, tol_scale: float = 1.0):
    """Run every criterion (or those whose key matches the filter).

    Returns (checks, seconds_by_criterion)."""
    checks: list[CheckResult] = []
    timings: dict[str, float] = {}
    for key in CRITERIA:
        if name_filter and not (
            name_filter in key or fnmatch.fnmatch(key, name_filter)
        ):
            continue
        got, seconds = run_criterion(key, tol_scale)
        checks.extend(got)
        timings[key] = seconds
    return checks, timings
