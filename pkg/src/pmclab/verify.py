"""Qualitative theory as a pass/fail property suite over computed solutions.

Each property turns one qualitative statement about solutions (sign
conditions, uniqueness and non-degeneracy of the critical point, absence of
interior maxima, index counting, saddle/multiple-minima equivalence,
homotopy stability, second-order contact against the cylinder surface, and
the axisymmetric analogues) into a measured check with explicit tolerances.
The suite fails closed: only registered property names may be reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import axisym as axi
from .assembly import ProblemSpec, ScalarField, neumann_feasibility
from .critical import (DEGENERACY_TOL, find_critical_points, gradient_index,
                       interior_max_scan, inward_offset_loop)
from .errors import (IllConditionedLoopError, InvalidParameterError,
                     LinearSolveFailure, NoAxisCriticalError, PmclabError,
                     SolverFailure)
from .geometry import make_disk, make_ellipse, make_rounded_polygon, triangulate
from .nodal import cylinder_solution, difference_field, leading_order_fit, \
    sector_count, trace_nodal_set
from .solver import SolverOptions, homotopy_solve, newton_solve

SIGN_DEADBAND = 1e-10
TRACE_RTOL = 0.1
COARSE_MESH_FACTOR = 0.3   # h above this fraction of the diameter: warn only

PROPERTY_CLAIMS = {
    "solution-negative":
        "the solution is negative throughout the closed domain (Robin data)",
    "boundary-outflux-positive":
        "the outward normal derivative is positive everywhere on the boundary",
    "critical-count-unique":
        "the solution has exactly one interior critical point",
    "critical-is-minimum":
        "every critical point is an interior minimum",
    "critical-nondegenerate":
        "the Hessian determinant is bounded away from zero at every critical "
        "point",
    "no-interior-maximum":
        "the solution has no interior local maximum",
    "index-sum-one":
        "the gradient winding on an inward-offset boundary loop is +1 and "
        "equals the sum of the critical point indices",
    "hessian-trace-identity":
        "the Hessian trace at each critical point equals H",
    "saddle-equivalence":
        "at least two minima exist if and only if some critical point has "
        "negative Hessian determinant",
    "homotopy-stability":
        "every continuation step has exactly one minimum, no saddle, and "
        "non-degenerate critical points; at t=0 the Hessian determinant at "
        "the critical point is positive",
    "cylinder-contact":
        "the difference against the matched cylinder surface shows "
        "second-order (four-sector) contact, never the degenerate six-sector "
        "pattern with contact order three or more",
    "axis-critical-unique":
        "the revolved solution has exactly one critical point and it lies "
        "on the symmetry axis",
    "axis-hessian-positive":
        "all diagonal Hessian entries at the axis critical point are positive",
    "radial-monotone":
        "the radial derivative of the meridian solution is positive away "
        "from the axis",
    "axial-nodal-single-arc":
        "the zero set of the axial derivative is a single curve from the "
        "axis to the outer boundary",
    "revolved-volume-consistency":
        "the weighted discrete volume matches the analytic volume of "
        "revolution to second order in h",
}


@dataclass
class PropertyRecord:
    name: str
    claim: str
    status: str                  # pass | fail | warn | skip
    measured: dict = dc_field(default_factory=dict)
    tolerances: dict = dc_field(default_factory=dict)
    note: str = ""

    def as_dict(self):
        return {"name": self.name, "claim": self.claim, "status": self.status,
                "measured": self.measured, "tolerances": self.tolerances,
                "note": self.note}


def _record(name, status, measured=None, tolerances=None, note=""):
    if name not in PROPERTY_CLAIMS:
        raise InvalidParameterError(f"unknown verification property {name!r}")
    return PropertyRecord(name=name, claim=PROPERTY_CLAIMS[name], status=status,
                          measured=measured or {}, tolerances=tolerances or {},
                          note=note)


@dataclass
class VerificationReport:
    properties: list
    verdict: str                 # pass | fail | error
    provenance: dict = dc_field(default_factory=dict)

    def as_dict(self):
        return {"properties": [p.as_dict() for p in self.properties],
                "verdict": self.verdict, "provenance": self.provenance}


def _aggregate(properties, error=False):
    if error:
        return "error"
    return "fail" if any(p.status == "fail" for p in properties) else "pass"


# -- individual properties -----------------------------------------------------

def verify_sign_conditions(field, spec, deadband=SIGN_DEADBAND):
    """Negativity of Robin solutions and positivity of the boundary outflux."""
    if spec.bc != "robin":
        note = "sign conditions are specific to Robin data; the Neumann " \
               "outflux du/dn = c > 0 holds by prescription"
        return [_record("solution-negative", "skip", note=note),
                _record("boundary-outflux-positive", "skip", note=note)]
    v = field.values
    k = int(np.argmax(v))
    max_u = float(v[k])
    rec1 = _record(
        "solution-negative",
        "pass" if max_u < -deadband else "fail",
        measured={"max_value": max_u,
                  "argmax": [float(x) for x in field.mesh.vertices[k]]},
        tolerances={"deadband": deadband})
    bidx = np.nonzero(field.mesh.is_boundary_vertex)[0]
    outflux = -spec.alpha * v[bidx]
    j = int(np.argmin(outflux))
    rec2 = _record(
        "boundary-outflux-positive",
        "pass" if outflux[j] > deadband else "fail",
        measured={"min_outflux": float(outflux[j]),
                  "argmin": [float(x) for x in field.mesh.vertices[bidx[j]]]},
        tolerances={"deadband": deadband})
    return [rec1, rec2]


def verify_critical_structure(field, spec, records=None, boundary_loop=None,
                              trace_rtol=TRACE_RTOL, diam=None):
    """Uniqueness, minimality, non-degeneracy, no maxima, and index count."""
    if records is None:
        records = find_critical_points(field, spec)
    out = []
    coarse = diam is not None and field.mesh.h > COARSE_MESH_FACTOR * diam

    count_ok = len(records) == 1
    out.append(_record(
        "critical-count-unique",
        "pass" if count_ok else ("warn" if coarse else "fail"),
        measured={"count": len(records),
                  "locations": [r.as_dict()["location"] for r in records]},
        note="mesh too coarse to resolve interior structure" if coarse else ""))

    minima_ok = bool(records) and all(r.classification == "minimum"
                                      for r in records)
    out.append(_record(
        "critical-is-minimum", "pass" if minima_ok else "fail",
        measured={"classifications": [r.classification for r in records]}))

    morse_ok = bool(records) and all(
        abs(r.gauss_curvature) > DEGENERACY_TOL * r.scale ** 2 for r in records)
    out.append(_record(
        "critical-nondegenerate", "pass" if morse_ok else "fail",
        measured={"gauss_curvatures": [r.gauss_curvature for r in records],
                  "scales": [r.scale for r in records]},
        tolerances={"degeneracy_tol": DEGENERACY_TOL}))

    maxima = interior_max_scan(field)
    out.append(_record(
        "no-interior-maximum", "pass" if not maxima else "fail",
        measured={"interior_maxima": len(maxima)}))

    if boundary_loop is None:
        out.append(_record("index-sum-one", "skip",
                           note="no boundary offset loop available"))
    else:
        try:
            loop_index = gradient_index(field, boundary_loop)
            idx_sum = sum(r.index for r in records if r.index is not None)
            ok = loop_index == 1 and idx_sum == loop_index and \
                all(r.index is not None for r in records)
            out.append(_record(
                "index-sum-one", "pass" if ok else "fail",
                measured={"loop_index": loop_index, "index_sum": idx_sum,
                          "indices": [r.index for r in records]}))
        except IllConditionedLoopError as exc:
            out.append(_record("index-sum-one", "warn",
                               note=f"loop ill-conditioned: {exc}"))

    traces = [float(np.trace(r.hessian)) for r in records]
    trace_ok = bool(records) and all(
        abs(tr - spec.H) <= trace_rtol * spec.H for tr in traces)
    out.append(_record(
        "hessian-trace-identity", "pass" if trace_ok else "fail",
        measured={"traces": traces, "H": spec.H},
        tolerances={"rtol": trace_rtol}))
    return out


def verify_saddle_equivalence(records):
    """Biconditional between multiple minima and a negative-determinant point."""
    n_min = sum(1 for r in records if r.classification == "minimum")
    n_saddle = sum(1 for r in records if r.classification == "saddle")
    left = n_min >= 2
    right = n_saddle >= 1
    return _record(
        "saddle-equivalence", "pass" if left == right else "fail",
        measured={"n_minima": n_min, "n_saddles": n_saddle,
                  "two_or_more_minima": left, "saddle_exists": right})


def verify_homotopy_stability(trace):
    """Per-step census along the continuation path."""
    if not trace.completed:
        return _record(
            "homotopy-stability", "warn",
            measured={"steps_recorded": len(trace.steps),
                      "schedule": list(trace.schedule)},
            note="continuation ended early; partial data only")
    bad = []
    t0_positive = True
    for step in trace.steps:
        if not (step.n_minima == 1 and step.n_saddles == 0 and step.morse_ok):
            bad.append(step.t)
        if step.t == 0.0:
            t0_positive = all(r.gauss_curvature > 0 for r in step.records)
    ok = not bad and t0_positive
    return _record(
        "homotopy-stability", "pass" if ok else "fail",
        measured={"steps": [{"t": s.t, "minima": s.n_minima,
                             "saddles": s.n_saddles, "morse_ok": s.morse_ok}
                            for s in trace.steps],
                  "offending_t": bad, "t0_determinant_positive": t0_positive})


def verify_cylinder_contact(field, spec, records, diam):
    """Second-order contact of the solution against its matched cylinder."""
    if len(records) != 1:
        return _record("cylinder-contact", "skip",
                       note="needs a unique critical point")
    p = records[0].location
    mesh = field.mesh
    u_p = float(mesh.interpolate(field.values, p[None, :])[0])
    dist = _distance_to_mesh_boundary(mesh, p)
    r_contact = min(0.3 * diam, 0.5 * dist)
    if r_contact < 4.0 * mesh.h:
        return _record("cylinder-contact", "skip",
                       note="mesh too coarse for the contact circle")
    cyl = cylinder_solution(u_p, spec.H, center=p)
    diff = difference_field(field, cyl)
    sectors = sector_count(diff, p, r_contact)
    fit = leading_order_fit(diff, p, max(2.0 * mesh.h, r_contact / 8.0),
                            r_contact)
    degenerate = sectors >= 6 and fit.k >= 3.0
    return _record(
        "cylinder-contact", "fail" if degenerate else "pass",
        measured={"sector_count": sectors, "fitted_order": fit.k,
                  "fit_residual": fit.residual, "radius": r_contact},
        tolerances={"degenerate_when": "sectors >= 6 and order >= 3"})


def _distance_to_mesh_boundary(mesh, p):
    bidx = np.unique(mesh.boundary_edges.ravel())
    return float(np.linalg.norm(mesh.vertices[bidx] - p, axis=1).min())


# -- axisymmetric properties ----------------------------------------------------

def verify_meridian_structure(field, problem, trace_rtol=TRACE_RTOL):
    out = []
    mesh = field.mesh
    mono = axi.check_monotone(field)
    out.append(_record(
        "radial-monotone", "pass" if mono.holds else "fail",
        measured=mono.as_dict()))

    try:
        crossings = axi.find_axis_critical(field)
        unique_ok = len(crossings) == 1 and mono.holds
        out.append(_record(
            "axis-critical-unique", "pass" if unique_ok else "fail",
            measured={"axis_crossings": crossings,
                      "off_axis_excluded_by_monotonicity": mono.holds}))
    except PmclabError as exc:
        out.append(_record("axis-critical-unique", "fail",
                           note=f"axis scan failed: {exc}"))
        crossings = []

    try:
        ah = axi.axis_hessian(field, problem.n_dim)
        entries = ah.entries
        pos_ok = bool(np.all(entries > 0))
        cross_ok = abs(ah.cross_term) <= 0.1 * float(np.min(np.abs(entries)))
        out.append(_record(
            "axis-hessian-positive", "pass" if (pos_ok and cross_ok) else "fail",
            measured=ah.as_dict(),
            tolerances={"cross_term_rtol": 0.1}))
        tr = float(np.sum(entries))
        out.append(_record(
            "hessian-trace-identity",
            "pass" if abs(tr - problem.spec.H) <= trace_rtol * problem.spec.H
            else "fail",
            measured={"traces": [tr], "H": problem.spec.H},
            tolerances={"rtol": trace_rtol}))
    except (NoAxisCriticalError, InvalidParameterError) as exc:
        out.append(_record("axis-hessian-positive", "fail", note=str(exc)))
        out.append(_record("hessian-trace-identity", "fail", note=str(exc)))

    from .critical import recover_gradient
    vz = ScalarField(mesh, recover_gradient(field)[:, 1])
    arcs = trace_nodal_set(vz)
    arc_ok, arc_info = _single_axis_to_outer_arc(arcs, mesh)
    out.append(_record(
        "axial-nodal-single-arc", "pass" if arc_ok else "fail",
        measured=arc_info))

    v_disc = axi.revolved_volume(mesh, problem.n_dim)
    v_exact = _spheroid_volume(problem)
    vol_tol = max(1.0 * mesh.h ** 2 * v_exact, 1e-12)
    out.append(_record(
        "revolved-volume-consistency",
        "pass" if abs(v_disc - v_exact) <= vol_tol else "fail",
        measured={"discrete": v_disc, "analytic": v_exact},
        tolerances={"abs_tol": vol_tol}))
    return out


def _single_axis_to_outer_arc(arcset, mesh):
    arcs = arcset.arcs
    info = {"n_arcs": len(arcs)}
    if len(arcs) != 1:
        return False, info
    arc = arcs[0]
    ends = arc[[0, -1]]
    r_ends = sorted(float(e[0]) for e in ends)
    info["end_r"] = r_ends
    # one endpoint near the axis, the other near the outer boundary
    near_axis = r_ends[0] <= 2.0 * mesh.h
    outer_r = mesh.vertices[:, 0].max()
    bidx = np.unique(mesh.boundary_edges.ravel())
    outer_pts = mesh.vertices[bidx][mesh.vertices[bidx, 0] > 2.0 * mesh.h]
    d_outer = float(np.min(np.linalg.norm(
        outer_pts - ends[np.argmax(ends[:, 0])], axis=1))) if len(outer_pts) \
        else np.inf
    info["outer_endpoint_distance"] = d_outer
    info["outer_r"] = float(outer_r)
    return bool(near_axis and d_outer <= 2.0 * mesh.h), info


def _spheroid_volume(problem):
    # volume of the full spheroid of revolution in dimension n:
    # unit-ball volume times a^(n-1) b
    n = problem.n_dim
    import math as _m
    unit = _m.pi ** (n / 2.0) / _m.gamma(n / 2.0 + 1.0)
    return unit * problem.a ** (n - 1) * problem.b


# -- the suite ------------------------------------------------------------------

@dataclass
class SuiteResult:
    status: str                      # ok | infeasible | solver-failure
    report: VerificationReport
    mesh: object = None
    field: object = None
    solve_report: object = None
    trace: object = None
    records: list = dc_field(default_factory=list)
    feasibility: object = None
    domain: object = None
    problem: object = None


def build_domain(domain_cfg):
    kind = domain_cfg["type"]
    if kind == "disk":
        return make_disk(domain_cfg["R"])
    if kind == "ellipse":
        return make_ellipse(domain_cfg["a"], domain_cfg["b"])
    if kind == "rounded_polygon":
        return make_rounded_polygon(domain_cfg["vertices"], domain_cfg["r"])
    raise InvalidParameterError(f"unknown planar domain type {kind!r}")


def build_spec(problem_cfg):
    bc = problem_cfg["bc"]
    if bc == "neumann":
        return ProblemSpec.neumann(problem_cfg["H"], problem_cfg["c"],
                                   t=problem_cfg.get("t", 1.0),
                                   n_dim=problem_cfg.get("n_dim", 2))
    return ProblemSpec.robin(problem_cfg["H"], problem_cfg["alpha"],
                             t=problem_cfg.get("t", 1.0),
                             n_dim=problem_cfg.get("n_dim", 2))


def run_suite(config, solution_values=None):
    """Solve (or load) per the configuration and evaluate every applicable
    property; aggregates a verification report with a pass/fail/error verdict.
    """
    cfg = config.canonical if hasattr(config, "canonical") else dict(config)
    domain_cfg = cfg["domain"]
    problem_cfg = cfg["problem"]
    spec = build_spec(problem_cfg)
    opts = SolverOptions(**cfg.get("solver", {}))
    h_target = cfg["mesh"]["h_target"]
    provenance = {"config_hash": cfg.get("config_hash", ""),
                  "resolved_from_file": solution_values is not None}

    if domain_cfg["type"] in ("ball", "spheroid"):
        return _run_meridian_suite(cfg, spec, opts, h_target, provenance,
                                   solution_values)

    domain = build_domain(domain_cfg)
    mesh = triangulate(domain, h_target)
    provenance.update({"mesh_h": mesh.h, "mesh_hash": mesh.mesh_hash()})

    feasibility = None
    if spec.bc == "neumann":
        feasibility = neumann_feasibility(domain, spec)
        if not feasibility.feasible:
            report = VerificationReport(
                properties=[], verdict="error",
                provenance={**provenance,
                            "feasibility": feasibility.as_dict(),
                            "error": "infeasible Neumann data: necessary "
                                     "flux bound violated"})
            return SuiteResult(status="infeasible", report=report, mesh=mesh,
                               feasibility=feasibility, domain=domain)

    trace = None
    solve_report = None
    if solution_values is not None:
        field = ScalarField(mesh, np.asarray(solution_values, dtype=float))
    else:
        try:
            schedule = problem_cfg.get("schedule")
            if schedule:
                field, trace = homotopy_solve(mesh, spec, schedule, opts=opts)
                solve_report = None
            else:
                field, solve_report = newton_solve(mesh, spec, opts=opts)
        except (SolverFailure, LinearSolveFailure) as exc:
            rep = getattr(exc, "report", None)
            report = VerificationReport(
                properties=[], verdict="error",
                provenance={**provenance, "error": str(exc),
                            "solver": rep.as_dict() if rep else None})
            return SuiteResult(status="solver-failure", report=report,
                               mesh=mesh, feasibility=feasibility, domain=domain)

    records = find_critical_points(field, spec)
    loop = inward_offset_loop(domain, 2.0 * mesh.h)
    props = []
    props += verify_sign_conditions(field, spec)
    props += verify_critical_structure(field, spec, records,
                                       boundary_loop=loop,
                                       diam=domain.diameter)
    props.append(verify_saddle_equivalence(records))
    if trace is not None:
        props.append(verify_homotopy_stability(trace))
    props.append(verify_cylinder_contact(field, spec, records, domain.diameter))

    provenance["solver"] = solve_report.as_dict() if solve_report else None
    report = VerificationReport(properties=props, verdict=_aggregate(props),
                                provenance=provenance)
    return SuiteResult(status="ok", report=report, mesh=mesh, field=field,
                       solve_report=solve_report, trace=trace, records=records,
                       feasibility=feasibility, domain=domain)


def _run_meridian_suite(cfg, spec, opts, h_target, provenance, solution_values):
    dom = cfg["domain"]
    if dom["type"] == "ball":
        a = b = dom["R"]
    else:
        a, b = dom["a"], dom["b"]
    n_dim = cfg["problem"].get("n_dim", 3)
    problem = axi.MeridianProblem(a=a, b=b, n_dim=n_dim, spec=spec)
    mesh = axi.meridian_mesh(problem, h_target)
    provenance.update({"mesh_h": mesh.h, "mesh_hash": mesh.mesh_hash(),
                       "n_dim": n_dim})

    feasibility = None
    if spec.bc == "neumann":
        from .assembly import mesh_feasibility
        feasibility = mesh_feasibility(mesh, spec,
                                       axi.outer_flux_edges(mesh),
                                       problem.weight_exponent)
        if not feasibility.feasible:
            report = VerificationReport(
                properties=[], verdict="error",
                provenance={**provenance, "feasibility": feasibility.as_dict(),
                            "error": "infeasible Neumann data"})
            return SuiteResult(status="infeasible", report=report, mesh=mesh,
                               feasibility=feasibility, problem=problem)

    solve_report = None
    if solution_values is not None:
        field = ScalarField(mesh, np.asarray(solution_values, dtype=float))
    else:
        try:
            field, solve_report = axi.solve_meridian(problem, mesh, opts=opts)
        except (SolverFailure, LinearSolveFailure) as exc:
            rep = getattr(exc, "report", None)
            report = VerificationReport(
                properties=[], verdict="error",
                provenance={**provenance, "error": str(exc),
                            "solver": rep.as_dict() if rep else None})
            return SuiteResult(status="solver-failure", report=report,
                               mesh=mesh, problem=problem)

    props = []
    props += verify_sign_conditions(field, spec)
    props += verify_meridian_structure(field, problem)
    provenance["solver"] = solve_report.as_dict() if solve_report else None
    report = VerificationReport(properties=props, verdict=_aggregate(props),
                                provenance=provenance)
    return SuiteResult(status="ok", report=report, mesh=mesh, field=field,
                       solve_report=solve_report, records=[],
                       feasibility=feasibility, problem=problem)
