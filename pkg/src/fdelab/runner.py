"""Scenario presets, output layout and sweeps.

Each preset maps a :class:`~fdelab.config.Scenario` to an :class:`Outcome`
(check reports, CSV tables, a primary trajectory).  :func:`run` persists an
outcome under ``<out>/<config-hash>/``::

    manifest.json        scenario echo, version, hash, timings, verdicts, inventory
    verdicts.jsonl       one record per check
    results.csv          the same records as CSV
    fields/*.csv         snapshots
    diagnostics/*.csv    step logs and derived tables
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import os
from pathlib import Path
import tempfile
import time

import numpy as np

from . import __version__
from . import analysis as an
from .config import build_scenario
from .mesh import build_cartesian, build_graded_radial
from .profiles import (
    CapSchedule,
    exact_separable_extinction,
    exact_static_singular,
    oscillating_profile,
    oscillation_spec,
    power_law_profile,
    radial_power_law,
)
from .solver_cartesian import solve_nd
from .solver_radial import (
    BoundaryData,
    cap_sweep,
    dirichlet_power,
    l1_distance_to,
    solve,
    solve_ensemble,
)

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ("check", "pass", "measured", "relation", "tolerance", "anchor")


@dataclass
class Table:
    header: tuple
    rows: list


@dataclass
class Outcome:
    checks: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)       # name -> Table
    diagnostics: dict = field(default_factory=dict)  # name -> Table
    info: dict = field(default_factory=dict)
    primary: object = None                           # Trajectory for sweep summaries


def fmt(x):
    """Deterministic text form of a CSV cell."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def csv_bytes(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue().encode()


def _trajectory_table(traj):
    return Table(("t", "r", "u"), list(traj.snapshot_rows()))


def _diag_table(traj):
    return Table(("step", "t", "dt", "newton_iters", "residual"), list(traj.diagnostic_rows()))


def _mesh(s, R=None):
    return build_graded_radial(s["r_min"], s["R"] if R is None else R, s["N"], s["rho"],
                               n=s["n"])


def _lam(s, p, gamma=None):
    g = s["gamma"] if gamma is None else gamma
    return p.mu0 * s["delta1"] ** g if s.get("lambda") is None else s["lambda"]


def _bc(s, p, lam=None, gamma=None):
    lam = _lam(s, p) if lam is None else lam
    gamma = s["gamma"] if gamma is None else gamma
    if s.get("inner") == "dirichlet-power":
        return dirichlet_power(p.mu0, lam, gamma, s["r_min"])
    return BoundaryData(outer=p.mu0)


def _radial_profile(s, p):
    return radial_power_law(p, _lam(s, p), s["gamma"], s["delta1"], R=s["R"])


def _initial(s, p, mesh, profile):
    u0 = profile.sample_radial(mesh)
    if s.get("inner") == "capped" and s.get("cap") is not None:
        u0 = np.minimum(u0, s["cap"])
    return u0


# -- presets -----------------------------------------------------------------
def _steady_oracle(sc):
    s, p = sc.settings, sc.params
    oracle = exact_static_singular(p, s["c"])
    out = Outcome()
    rows, errs = [], []
    for k in range(s["refinements"]):
        N = s["N"] * 2**k
        mesh = build_graded_radial(s["r_min"], s["R"], N, s["rho"], n=p.n)
        exact = oracle(mesh.nodes)
        bc = BoundaryData(outer=float(exact[-1]), inner=float(exact[0]))
        tr = solve(p, mesh, exact, bc, s["T"], s["dt0"], snapshot_times=s["snapshots"],
                   dt_max=s["dt_max"])
        err = float(np.max(np.abs(tr.fields - exact) / exact))
        errs.append(err)
        rows.append((N, err, errs[-2] / err if k else float("nan")))
        if k == 0:
            out.primary = tr
            out.fields["snapshots"] = _trajectory_table(tr)
            out.diagnostics["steps"] = _diag_table(tr)
    out.diagnostics["convergence"] = Table(("N", "max_rel_error", "ratio"), rows)
    out.checks.append(an.CheckReport(
        "steady-error", errs[0] <= s["rtol"], errs[0], s["rtol"],
        "static singular solution u = c r^-((n-2)/m)"))
    if len(errs) > 1:
        ratio = min(errs[i] / errs[i + 1] for i in range(len(errs) - 1))
        out.checks.append(an.CheckReport(
            "steady-order", ratio >= s["order_ratio"], ratio, s["order_ratio"],
            "static singular solution under mesh refinement", relation=">="))
    out.info["errors"] = errs
    return out


def _extinction_oracle(sc):
    s, p = sc.settings, sc.params
    oracle = exact_separable_extinction(p, s["theta0"])
    mesh = _mesh(s)
    r = mesh.nodes
    # closed-form residual of the separable solution, relative to u_t
    tt = np.linspace(0, 0.9 * oracle.extinction_time, 7)
    cert = max(float(np.max(np.abs(oracle.pde_residual(r, t))
                            / np.abs(oracle.theta_dot(t) * r**-oracle.q))) for t in tt)
    bc = BoundaryData(outer=lambda t: float(oracle(r[-1], t)),
                      inner=lambda t: float(oracle(r[0], t)))
    tr = solve(p, mesh, oracle(r, 0.0), bc, s["T"], s["dt0"], snapshot_times=s["snapshots"],
               dt_max=s["dt_max"])
    exact = np.array([oracle(r, t) for t in tr.times])
    rel = np.max(np.abs(tr.fields - exact) / exact, axis=1)
    err = float(rel.max())
    out = Outcome(primary=tr)
    out.fields["snapshots"] = _trajectory_table(tr)
    out.diagnostics["steps"] = _diag_table(tr)
    out.diagnostics["error"] = Table(("t", "theta", "max_rel_error"),
                                     [(t, float(oracle.theta(t)), e) for t, e in zip(tr.times, rel)])
    out.checks.append(an.CheckReport(
        "extinction-certificate", cert <= 1e-12, cert, 1e-12,
        "separable solution theta(t) r^(-2/(1-m)) solves the equation"))
    out.checks.append(an.CheckReport(
        "extinction-error", err <= s["rtol"], err, s["rtol"],
        "separable extinction solution"))
    out.info["extinction_time"] = oracle.extinction_time
    return out


def _rate_sandwich(sc):
    s, p = sc.settings, sc.params
    mesh = _mesh(s)
    prof = _radial_profile(s, p)
    times = s["snapshots"]
    tr = solve(p, mesh, _initial(s, p, mesh, prof), _bc(s, p), s["T"], s["dt0"],
               snapshot_times=times, dt_max=s["dt_max"])
    window = (4 * s["r_min"], s["delta1"] / 4)
    rep = an.check_rate_sandwich(tr, prof, window, times, slack=s["slack"])
    out = Outcome(checks=[rep], primary=tr)
    out.fields["snapshots"] = _trajectory_table(tr)
    out.diagnostics["steps"] = _diag_table(tr)
    out.diagnostics["exponents"] = Table(("t", "exponent"),
                                         list(zip(times, rep.details["exponents"])))
    return out


def comparison_pairs(s, p, rng):
    """Randomised ordered pairs: lambda scaled, gamma increased or f shifted."""
    pairs = []
    for k in range(s["pairs"]):
        lam = s["lambda"] * rng.uniform(0.5, 2.0)
        g = rng.uniform(max(2.0 / (1 - p.m) + 0.05, s["gamma"] - 0.2), s["gamma"] + 0.5)
        lam2, g2, shift = lam, g, 0.0
        kind = ("lambda", "gamma", "shift")[k % 3]
        if kind == "lambda":
            lam2 = lam * rng.uniform(1.05, 3.0)
        elif kind == "gamma":
            g2 = g + rng.uniform(0.05, 0.5)
        else:
            shift = rng.uniform(0.01, 0.5)
        pairs.append((kind, lam, g, lam2, g2, shift))
    return pairs


def _comparison(sc):
    s, p = sc.settings, sc.params
    mesh = _mesh(s)
    rng = np.random.default_rng(s["seed"])
    out = Outcome()
    rows, worst = [], None
    for j, (kind, lam, g, lam2, g2, shift) in enumerate(comparison_pairs(s, p, rng)):
        p1 = radial_power_law(p, lam, g, s["delta1"], R=s["R"])
        p2 = radial_power_law(p, lam2, g2, s["delta1"], R=s["R"])
        b1 = _bc(s, p, lam, g)
        b2 = _bc(s, p, lam2, g2).shifted(shift)
        u1 = _initial(s, p, mesh, p1)
        u2 = _initial(s, p, mesh, p2) + shift
        t1, t2 = solve_ensemble(p, mesh, [u1, u2], [b1, b2], s["T"], s["dt0"],
                                snapshot_times=s["snapshots"], dt_max=s["dt_max"])
        rep = an.check_comparison(t1, t2, rtol=s["rtol"])
        rows.append((j, kind, lam, g, lam2, g2, shift, rep.measured, rep.tolerance,
                     rep.passed))
        if worst is None or rep.measured / rep.tolerance > worst.measured / worst.tolerance:
            worst = rep
        if j == 0:
            out.primary = t1
    out.diagnostics["pairs"] = Table(
        ("pair", "kind", "lambda1", "gamma1", "lambda2", "gamma2", "shift",
         "violation", "tolerance", "pass"), rows)
    ok = all(r[-1] for r in rows)
    out.checks.append(an.CheckReport(
        "comparison", ok, worst.measured, worst.tolerance,
        "ordered data give ordered solutions",
        details={"pairs": len(rows)}))
    out.info["max_violation"] = max(r[7] for r in rows)
    return out


def _cap_sweep(sc):
    s, p = sc.settings, sc.params
    mesh = _mesh(s)
    prof = _radial_profile(s, p)
    sched = CapSchedule(s["caps"], 0.0, p.mu0)
    trs = cap_sweep(p, mesh, prof, sched, BoundaryData(outer=p.mu0), s["T"], s["dt0"],
                    snapshot_times=s["snapshots"], dt_max=s["dt_max"])
    K = mesh.mask(s["delta1"], None)
    scale = max(float(np.max(t.fields)) for t in trs)
    order = max(float(np.max(a.fields - b.fields)) for a, b in zip(trs, trs[1:])) if len(trs) > 1 else 0.0
    order = max(order, 0.0)
    diffs = [float(np.max(np.abs(a.fields[1:, K] - b.fields[1:, K])))
             for a, b in zip(trs, trs[1:])]
    rows = []
    for i, d in enumerate(diffs):
        decades = np.log10(s["caps"][i + 1] / s["caps"][i])
        rate = (diffs[i - 1] / d) ** (1 / decades) if i else float("nan")
        rows.append((s["caps"][i], s["caps"][i + 1], d, rate))
    rates = [r[3] for r in rows[1:]]
    out = Outcome(primary=trs[-1])
    out.diagnostics["cap_differences"] = Table(("cap_low", "cap_high", "sup_difference",
                                                "decrease_per_decade"), rows)
    for M, t in zip(s["caps"], trs):
        out.fields[f"cap_{fmt(M)}"] = _trajectory_table(t)
    out.checks.append(an.CheckReport(
        "cap-order", order <= s["rtol"] * scale, order, s["rtol"] * scale,
        "capped solutions increase with the cap"))
    if rates:
        worst = float(min(rates))
        out.checks.append(an.CheckReport(
            "cap-convergence", worst >= s["decade_ratio"], worst, s["decade_ratio"],
            "capped solutions converge on compacts away from the point", relation=">=",
            details={"sup_differences": diffs}))
    return out


def _collar_l1(sc):
    s, p = sc.settings, sc.params
    mesh = _mesh(s)
    prof = _radial_profile(s, p)
    tr = solve(p, mesh, _initial(s, p, mesh, prof), BoundaryData(outer=p.mu0), s["T"],
               s["dt0"], snapshot_times=s["snapshots"], dt_max=s["dt_max"])
    cut = an.collar_cutoff(p, s["R"], s["collar_delta"], s["collar_alpha"])
    rep = an.check_collar_l1(tr, cut, p.mu0, slack=s["slack"])
    out = Outcome(checks=[rep], primary=tr)
    out.fields["snapshots"] = _trajectory_table(tr)
    out.diagnostics["steps"] = _diag_table(tr)
    out.diagnostics["collar"] = Table(("t", "y"), list(zip(tr.times, rep.details["y"])))
    out.info["C_eta"] = cut.C_eta
    return out


def _initial_trace(sc):
    s, p = sc.settings, sc.params
    mesh = _mesh(s)
    prof = _radial_profile(s, p)
    u0 = _initial(s, p, mesh, prof)
    tr = solve(p, mesh, u0, BoundaryData(outer=p.mu0), s["T"], s["dt0"],
               snapshot_times=s["snapshots"], dt_max=s["dt_max"])
    delta = s["trace_delta"] if s.get("trace_delta") is not None else 2 * s["delta1"]
    rep = an.check_initial_trace(tr, tr.fields[0], delta, rtol=s["rtol"])
    out = Outcome(checks=[rep], primary=tr)
    out.fields["snapshots"] = _trajectory_table(tr)
    out.diagnostics["trace"] = Table(("t", "relative_l1_distance"),
                                     list(zip(rep.details["times"],
                                              rep.details["relative_distance"])))
    return out


def _asymptotic(sc, expected):
    s, p = sc.settings, sc.params
    mesh = _mesh(s)
    prof = _radial_profile(s, p)
    tr = solve(p, mesh, _initial(s, p, mesh, prof), _bc(s, p), s["T"], s["dt0"],
               snapshot_times=s["snapshots"], dt_max=s["dt_max"])
    K = tuple(s["K"]) if s.get("K") else (s["delta1"], 2 * s["delta1"])
    cls = an.classify_asymptotics(tr, K, p.mu0, s["tol_lo"], s["tol_hi"])
    mask = mesh.mask(*K)
    out = Outcome(primary=tr)
    out.fields["snapshots"] = _trajectory_table(tr)
    out.diagnostics["steps"] = _diag_table(tr)
    out.diagnostics["compact"] = Table(
        ("t", "sup_K", "inf_K"),
        [(t, float(u[mask].max()), float(u[mask].min())) for t, u in zip(tr.times, tr.fields)])
    if expected == an.CONVERGED:
        out.checks.append(an.CheckReport(
            "asymptotic-mu0", cls.label == expected, cls.sup_dev, s["tol_lo"] * p.mu0,
            "relaxation to the floor for gamma < n", relation="<",
            details={"label": cls.label}))
    else:
        out.checks.append(an.CheckReport(
            "asymptotic-blowup", cls.label == expected, cls.inf_K, s["tol_hi"] * p.mu0,
            "growth on compacts for gamma > (n-2)/m", relation=">",
            details={"label": cls.label, "increasing": cls.increasing}))
    out.info["classification"] = cls.label
    return out


def oscillation_setup(s, p):
    spec = oscillation_spec(p, s["radii"], alpha1=s.get("alpha1"), delta0=s["R"] / 3.0)
    prof = oscillating_profile(p, spec)
    inner = s["r_min"] ** -spec.exponent(spec.layers)
    return spec, prof, BoundaryData(outer=p.mu0, inner=inner)


def _oscillation(sc):
    s, p = sc.settings, sc.params
    mesh = _mesh(s)
    spec, prof, bc = oscillation_setup(s, p)
    snaps = s["snapshots"] or tuple(np.geomspace(1e-3, s["T"], 120))
    tr = solve(p, mesh, prof, bc, s["T"], s["dt0"], snapshot_times=snaps, dt_max=s["dt_max"])
    d1 = spec.radii[0]
    K = tuple(s["K"]) if s.get("K") else (d1, 2 * d1)
    trace = an.oscillation_trace(tr, K, p.mu0)
    t_hi = trace.low_then_high()
    out = Outcome(primary=tr)
    out.fields["snapshots"] = _trajectory_table(tr)
    out.diagnostics["steps"] = _diag_table(tr)
    out.diagnostics["trace"] = Table(("t", "sup_K", "inf_K"), trace.rows())
    out.diagnostics["events"] = Table(("event", "t"), list(trace.events))
    out.checks.append(an.CheckReport(
        "oscillation-two-swing", t_hi is not None, 1.0 if t_hi is not None else 0.0, 1.0,
        "alternating layers drive low then high excursions on K", relation=">=",
        details={"events": [list(e) for e in trace.events],
                 "min_sup_K": float(trace.sup_K.min()),
                 "t_min_sup_K": float(trace.times[np.argmin(trace.sup_K)])}))
    out.info["events"] = [list(e) for e in trace.events]
    out.info["min_sup_K"] = float(trace.sup_K.min())
    return out


def cross_solver(s, p):
    """Single capped point: Cartesian box vs radial ball, relative L-inf on
    the annulus 2h < r < L/2 at time ``cross_T``."""
    grid = build_cartesian(s["L"], s["cells"], [(0.0, 0.0, 0.0)])
    lam = _lam(s, p)
    prof = radial_power_law(p, lam, s["gamma"], s["delta1"], R=s["L"])
    T = s["cross_T"]
    tc = solve_nd(p, grid, prof, p.mu0, T, cap=s["cap"])
    mesh = build_graded_radial(s["r_min"], s["L"], s["N"], s["rho"], n=3)
    u0 = np.minimum(prof.sample_radial(mesh), s["cap"])
    tr = solve(p, mesh, u0, BoundaryData(outer=p.mu0), T, s["dt0"])
    dist = grid.distance_to(grid.points[0])
    A = (dist > 2 * grid.h) & (dist < s["L"] / 2)
    ur = np.interp(dist[A], mesh.nodes, tr.fields[-1])
    err = float(np.max(np.abs(tc.fields[-1][A] - ur) / ur))
    return err, tc, tr


def _multipoint(sc):
    s, p = sc.settings, sc.params
    err, tc, tr = cross_solver(s, p)
    out = Outcome(primary=tr)
    out.checks.append(an.CheckReport(
        "cross-solver", err <= s["rtol"], err, s["rtol"],
        "radial and Cartesian discretisations agree"))
    grid = build_cartesian(s["L"], s["cells"], s["points"])
    delta1 = min(s["delta1"], 0.99 * grid.delta0)
    entries = [(pt, p.mu0 * delta1**g if s.get("lambda") is None else s["lambda"], g)
               for pt, g in zip(s["points"], s["gammas"])]
    prof = power_law_profile(p, entries, delta1, delta0=grid.delta0)
    tm = solve_nd(p, grid, prof, p.mu0, s["T"], snapshot_times=s["snapshots"], cap=s["cap"])
    out.fields["multipoint"] = Table(("t", "x", "y", "z", "u"), list(tm.snapshot_rows()))
    rows = []
    for k in range(len(s["points"])):
        for t in tm.times:
            d, v = tm.line_extract(t, k)
            for di, vi in zip(d, v):
                rows.append((k, t, di, vi))
    out.diagnostics["line_extracts"] = Table(("point", "t", "distance", "u"), rows)
    out.info["cross_solver_error"] = err
    out.info["delta0"] = grid.delta0
    return out


def _l1_contraction(sc):
    s, p = sc.settings, sc.params
    mesh = _mesh(s)
    prof = _radial_profile(s, p)
    snaps = s["snapshots"] or tuple(np.geomspace(1e-3, s["T"], 30))
    tr = solve(p, mesh, _initial(s, p, mesh, prof), BoundaryData(outer=p.mu0), s["T"],
               s["dt0"], snapshot_times=snaps, dt_max=s["dt_max"])
    L = np.array([l1_distance_to(mesh, u, p.mu0) for u in tr.fields])
    growth = float(np.max(np.diff(L) / L[:-1])) if L.size > 1 else 0.0
    growth = max(growth, 0.0)
    out = Outcome(primary=tr)
    out.fields["snapshots"] = _trajectory_table(tr)
    out.diagnostics["l1"] = Table(("t", "l1_distance_to_mu0"), list(zip(tr.times, L)))
    out.checks.append(an.CheckReport(
        "l1-contraction", growth <= s["rtol"], growth, s["rtol"],
        "L1 distance to the floor does not grow"))
    return out


PRESETS = {
    "steady-oracle": _steady_oracle,
    "extinction-oracle": _extinction_oracle,
    "rate-sandwich": _rate_sandwich,
    "comparison": _comparison,
    "cap-sweep": _cap_sweep,
    "collar-l1": _collar_l1,
    "initial-trace": _initial_trace,
    "asymptotic-mu0": lambda sc: _asymptotic(sc, an.CONVERGED),
    "asymptotic-blowup": lambda sc: _asymptotic(sc, an.BLOWING_UP),
    "oscillation": _oscillation,
    "multipoint-3d": _multipoint,
    "l1-contraction": _l1_contraction,
}


def execute(scenario):
    """Run the preset without touching the filesystem."""
    return PRESETS[scenario.name](scenario)


# -- persistence ---------------------------------------------------------------
def _atomic_write(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _record(rep):
    rec = rep.to_record()
    rec["relation"] = rep.relation
    return rec


def run(scenario, out_dir="out"):
    """Execute ``scenario`` and write its artefacts; returns the manifest dict.

    Solver or analysis errors are caught and recorded with ``status: error``.
    """
    h = scenario.config_hash()
    target = Path(out_dir) / h[:16]
    started = time.perf_counter()
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat()
    manifest = {
        "scenario": scenario.canonical(),
        "tool": "fdelab",
        "version": __version__,
        "config_hash": h,
        "started": stamp,
    }
    files = {}
    try:
        outcome = execute(scenario)
    except Exception as exc:  # recorded, not raised
        logger.exception("scenario %s failed", scenario.name)
        manifest.update(status="error", error=f"{type(exc).__name__}: {exc}",
                        verdicts=[], files={}, passed=False)
        manifest["wall_clock_s"] = time.perf_counter() - started
        _atomic_write(target / "manifest.json",
                      json.dumps(manifest, indent=2, sort_keys=True).encode())
        manifest["path"] = str(target)
        return manifest

    records = [_record(c) for c in outcome.checks]
    files["verdicts.jsonl"] = "".join(json.dumps(r, sort_keys=True) + "\n"
                                      for r in records).encode()
    files["results.csv"] = csv_bytes(Table(RESULT_COLUMNS,
                                           [[r[c] for c in RESULT_COLUMNS] for r in records]))
    for name, table in outcome.fields.items():
        files[f"fields/{name}.csv"] = csv_bytes(table)
    for name, table in outcome.diagnostics.items():
        files[f"diagnostics/{name}.csv"] = csv_bytes(table)
    for rel, data in sorted(files.items()):
        _atomic_write(target / rel, data)
    manifest.update(
        status="ok",
        passed=all(r["pass"] for r in records),
        verdicts=records,
        info=_json_safe(outcome.info),
        files={rel: hashlib.sha256(data).hexdigest() for rel, data in sorted(files.items())},
        wall_clock_s=time.perf_counter() - started,
    )
    _atomic_write(target / "manifest.json",
                  json.dumps(manifest, indent=2, sort_keys=True).encode())
    manifest["path"] = str(target)
    manifest["_outcome"] = outcome
    return manifest


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


# -- sweeps ------------------------------------------------------------------------
def sweep_values(scenario, axis, values):
    """Scenario copies with ``axis`` set to each value.  ``innermost_radius``
    replaces the last oscillation radius."""
    out = []
    for v in values:
        if axis == "innermost_radius":
            radii = tuple(scenario["radii"][:-1]) + (float(v),)
            out.append(scenario.with_value("radii", radii))
        else:
            out.append(scenario.with_value(axis, v))
    return out


def _run_packed(args):
    sc, out_dir = args
    m = run(sc, out_dir)
    outcome = m.pop("_outcome", None)
    tr = outcome.primary if outcome is not None else None
    return m, tr


def stability_summary(trajs, delta):
    """Sup-differences between successive runs on r >= delta at shared times."""
    rows = []
    for i, (a, b) in enumerate(zip(trajs, trajs[1:])):
        if a is None or b is None:
            rows.append((i, i + 1, float("nan"), 0))
            continue
        shared = np.intersect1d(np.round(a.times, 12), np.round(b.times, 12))
        shared = shared[shared > 0]
        worst = 0.0
        for t in shared:
            ua, ub = a.at(t), b.at(t)
            ra = a.mesh.nodes
            sel = ra >= delta
            ub_on_a = np.interp(ra[sel], b.mesh.nodes, ub)
            worst = max(worst, float(np.max(np.abs(ua[sel] - ub_on_a))))
        rows.append((i, i + 1, worst, int(shared.size)))
    return Table(("run_a", "run_b", "sup_difference", "shared_times"), rows)


def sweep(scenario, axis, values, out_dir="out", jobs=1):
    """Independent runs over ``values``; returns the manifests in order and
    writes a stability summary next to them."""
    values = list(values)
    if not values:
        return []
    scenarios = sweep_values(scenario, axis, values)
    tasks = [(sc, out_dir) for sc in scenarios]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_packed, tasks))
    else:
        results = [_run_packed(t) for t in tasks]
    manifests = [m for m, _ in results]
    delta = scenario.get("delta1") or (scenario.get("radii") or (0.1,))[0]
    table = stability_summary([tr for _, tr in results], delta)
    key = hashlib.sha256(json.dumps([scenario.config_hash(), axis, [str(v) for v in values]])
                         .encode()).hexdigest()[:16]
    target = Path(out_dir) / f"sweep-{key}"
    _atomic_write(target / "stability.csv", csv_bytes(Table(
        ("axis", "value_a", "value_b") + table.header[2:],
        [(axis, values[a], values[b], d, k) for a, b, d, k in table.rows])))
    summary = {"axis": axis, "values": [str(v) for v in values],
               "runs": [m["config_hash"] for m in manifests],
               "status": [m["status"] for m in manifests]}
    _atomic_write(target / "sweep.json", json.dumps(summary, indent=2).encode())
    return manifests


# -- verification ------------------------------------------------------------------
_RELATIONS = {
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def verify_record(rec):
    """True when the stored pass flag agrees with measured/tolerance."""
    rel = _RELATIONS.get(rec.get("relation", "<="))
    try:
        measured, tol = float(rec["measured"]), float(rec["tolerance"])
    except (TypeError, ValueError, KeyError):
        return False
    return rel is not None and rel(measured, tol) == bool(rec["pass"])


def verify_all(root):
    """Re-check every verdict file below ``root``.

    Returns a list of ``(path, check, consistent, passed)`` tuples; file
    hashes recorded in the manifest are re-checked as well.
    """
    results = []
    for vf in sorted(Path(root).rglob("verdicts.jsonl")):
        run_dir = vf.parent
        mf = run_dir / "manifest.json"
        hashes = {}
        if mf.exists():
            hashes = json.loads(mf.read_text()).get("files", {})
        for rel, digest in sorted(hashes.items()):
            p = run_dir / rel
            ok = p.exists() and hashlib.sha256(p.read_bytes()).hexdigest() == digest
            if not ok:
                results.append((str(p), "file-integrity", False, False))
        for line in vf.read_text().splitlines():
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                results.append((str(vf), "<unreadable>", False, False))
                continue
            results.append((str(vf), rec.get("check", "?"), verify_record(rec),
                            bool(rec.get("pass"))))
    return results


def scenario_from(name, **overrides):
    """Convenience: build a scenario programmatically."""
    return build_scenario(name, overrides)
