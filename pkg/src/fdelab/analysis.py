"""Verdicts computed from trajectories: exponent fits, collar and trace
bounds, ordering, long-time classification, oscillation events, barriers."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import quad

from .errors import (
    CutoffSingular,
    DegenerateAnnulus,
    InsufficientSnapshots,
    MeshMismatch,
    NonpositiveField,
    WindowTooSmall,
)
from .mesh import sphere_area
from .solver_radial import l1_distance_to

MIN_WINDOW_NODES = 8
RATE_SLACK = 0.15
COLLAR_SLACK = 0.05
COMPARISON_RTOL = 1e-10
TOL_LO = 0.05
TOL_HI = 10.0
LOW_MARGIN = 0.5
HIGH_LEVEL = 3.0

CONVERGED = "converged-to-mu0"
BLOWING_UP = "blowing-up"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    measured: float
    tolerance: float
    anchor: str
    relation: str = "<="
    details: dict = field(default_factory=dict)

    def to_record(self):
        return {
            "check": self.name,
            "pass": bool(self.passed),
            "measured": _jsonable(self.measured),
            "tolerance": _jsonable(self.tolerance),
            "anchor": self.anchor,
        }

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.name}: measured={self.measured:.6g} "
                f"{self.relation} tolerance={self.tolerance:.6g}")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


# -- exponent fitting ---------------------------------------------------------
@dataclass(frozen=True)
class RateFit:
    exponent: float
    prefactor: float
    window: tuple
    residual: float
    band: tuple = None
    nodes: int = 0

    def in_band(self, slack=RATE_SLACK):
        if self.band is None:
            raise ValueError("no target band declared")
        lo, hi = self.band
        return lo - slack <= self.exponent <= hi + slack


def fit_exponent(r, u, window, band=None):
    """Least-squares fit of log u = log C - k log r over nodes in ``window``.

    ``r`` are distances to the singular point.  Returns a :class:`RateFit`
    whose ``exponent`` is k (so u ~ r^-k).
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    a, b = window
    if not 0 < a < b:
        raise WindowTooSmall(f"window {window} is empty")
    sel = (r >= a) & (r <= b)
    if np.count_nonzero(sel) < MIN_WINDOW_NODES:
        raise WindowTooSmall(
            f"window [{a:g}, {b:g}] holds {np.count_nonzero(sel)} nodes, "
            f"need {MIN_WINDOW_NODES}"
        )
    us = u[sel]
    if not np.all(us > 0):
        raise NonpositiveField("field must be positive on the fit window")
    x = np.log(r[sel])
    y = np.log(us)
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    return RateFit(exponent=float(-coef[1]), prefactor=float(np.exp(coef[0])),
                   window=(float(a), float(b)), residual=rms,
                   band=None if band is None else tuple(map(float, band)),
                   nodes=int(np.count_nonzero(sel)))


def check_rate_sandwich(trajectory, profile, window, times, slack=RATE_SLACK, k=0):
    """Exponent fits at ``times`` must stay in [gamma - slack, gamma' + slack];
    the envelope constants C1 = min u r^gamma, C2 = max u r^gamma' over the
    window are reported and must be finite and positive."""
    e = profile.entries[k]
    band = (e.gamma, e.gamma_upper)
    r = trajectory.mesh.nodes
    sel = (r >= window[0]) & (r <= window[1])
    exps, c1s, c2s = [], [], []
    for t in times:
        u = trajectory.at(t)
        fit = fit_exponent(r, u, window, band)
        exps.append(fit.exponent)
        c1s.append(float(np.min(u[sel] * r[sel] ** band[0])))
        c2s.append(float(np.max(u[sel] * r[sel] ** band[1])))
    exps = np.array(exps)
    C1, C2 = min(c1s), max(c2s)
    worst = float(np.max(np.maximum(band[0] - exps, exps - band[1])))
    envelopes_ok = 0 < C1 <= C2 < np.inf
    return CheckReport(
        name="rate-sandwich",
        passed=bool(worst <= slack and envelopes_ok),
        measured=worst,
        tolerance=slack,
        anchor="two-sided power-law bound near the singular point",
        details={"exponents": exps.tolist(), "times": list(map(float, times)),
                 "band": list(band), "C1": C1, "C2": C2,
                 "exponent_min": float(exps.min()), "exponent_max": float(exps.max())},
    )


# -- collar bound -----------------------------------------------------------------
def smoothstep(x):
    """Quintic smoothstep, C^2, 0 for x <= 0 and 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    return np.clip(x**3 * (10.0 - 15.0 * x + 6.0 * x**2), 0.0, 1.0)


@dataclass(frozen=True)
class CollarCutoff:
    """eta = phi^alpha, with phi = 1 on the collar R - delta <= r <= R and 0
    for r <= R - 2 delta."""

    delta: float
    alpha: float
    R: float
    n: int
    m: float
    C_eta: float

    def phi(self, r):
        return smoothstep((np.asarray(r, dtype=float) - (self.R - 2 * self.delta)) / self.delta)

    def eta(self, r):
        return self.phi(r) ** self.alpha

    def to_dict(self):
        return {"delta": self.delta, "alpha": self.alpha, "R": self.R,
                "C_eta": self.C_eta}


def _radial_laplacian_eta(r, a, delta, alpha, n):
    # eta = s(x)^alpha, x = (r - a)/delta; Δeta = eta'' + (n-1)/r eta'
    x = (r - a) / delta
    s = x**3 * (10 - 15 * x + 6 * x**2)
    s1 = 30 * x**2 * (1 - x) ** 2 / delta
    s2 = 60 * x * (1 - x) * (1 - 2 * x) / delta**2
    e1 = alpha * s ** (alpha - 1) * s1
    e2 = alpha * (alpha - 1) * s ** (alpha - 2) * s1**2 + alpha * s ** (alpha - 1) * s2
    return s, e2 + (n - 1) / r * e1


def collar_cutoff(p, R, delta, alpha):
    """Cutoff for the collar of width ``delta`` at the outer radius ``R`` of a
    ball, with C_eta = (∫ (eta^-m |Δeta|)^(1/(1-m)) dx)^(1-m) by quadrature."""
    m, n = p.m, p.n
    if not alpha > 2.0 / (1.0 - m):
        raise CutoffSingular(f"alpha={alpha} must exceed 2/(1-m) = {2 / (1 - m):.6g}")
    if not 0 < 2 * delta < R:
        raise ValueError("need 0 < 2*delta < R")
    a = R - 2 * delta
    q = 1.0 / (1.0 - m)

    def integrand(r):
        s, lap = _radial_laplacian_eta(r, a, delta, alpha, n)
        if s <= 0:
            return 0.0
        return (s ** (-alpha * m) * abs(lap)) ** q * r ** (n - 1)

    # Δeta is zero outside the transition shell
    val, _ = quad(integrand, a, R - delta, limit=400, epsabs=0.0, epsrel=1e-10)
    C = (sphere_area(n) * val) ** (1.0 - m)
    if not (np.isfinite(C) and C > 0):
        raise CutoffSingular(f"C_eta={C} is not finite and positive")
    return CollarCutoff(float(delta), float(alpha), float(R), n, m, float(C))


def check_collar_l1(trajectory, cutoff, fbound, k_lift=1e-6, slack=COLLAR_SLACK):
    """y(t) = Σ V_i (u_i - k)_+ eta_i with k = fbound (1 + k_lift); pass iff
    y(t)^(1-m) <= y(0)^(1-m) + (1-m) C_eta t (1 + slack) at every snapshot."""
    mesh = trajectory.mesh
    m = cutoff.m
    k = fbound * (1.0 + k_lift)
    eta = cutoff.eta(mesh.nodes)
    V = mesh.volumes
    y = np.array([np.sum(V * np.maximum(u - k, 0.0) * eta) for u in trajectory.fields])
    t = trajectory.times
    lhs = y ** (1 - m)
    rhs = lhs[0] + (1 - m) * cutoff.C_eta * t * (1 + slack)
    ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 0, np.inf, 0.0))
    worst = float(np.max(ratio))
    return CheckReport(
        name="collar-l1",
        passed=bool(np.all(lhs <= rhs)),
        measured=worst,
        tolerance=1.0,
        anchor="L1 mass bound in the boundary collar",
        details={"C_eta": cutoff.C_eta, "k": k, "y": y.tolist(),
                 "times": t.tolist(), "slack": slack},
    )


# -- initial trace -------------------------------------------------------------
def check_initial_trace(trajectory, u0, delta, rtol=1e-3, last=4):
    """L1 distance to ``u0`` on r >= delta must decrease as t decreases over
    the ``last`` earliest positive snapshots, ending <= rtol * ||u0||."""
    mesh = trajectory.mesh
    t = trajectory.times
    pos = np.nonzero(t > 0)[0]
    if pos.size < last:
        raise InsufficientSnapshots(
            f"{pos.size} positive snapshot times, need {last} near t=0"
        )
    mask = mesh.mask(delta, None)
    norm = l1_distance_to(mesh, u0, 0.0, mask)
    idx = pos[:last]
    d = np.array([float(np.sum((mesh.volumes * np.abs(trajectory.fields[i] - u0))[mask]))
                  for i in idx])
    rel = d / norm if norm > 0 else d
    # times ascending, so the distance must increase with t
    monotone = bool(np.all(np.diff(rel) >= 0))
    final = float(rel[0])
    return CheckReport(
        name="initial-trace",
        passed=monotone and final <= rtol,
        measured=final,
        tolerance=rtol,
        anchor="initial trace in L1 away from the singular points",
        details={"times": t[idx].tolist(), "relative_distance": rel.tolist(),
                 "monotone": monotone, "norm_u0": norm},
    )


# -- comparison ------------------------------------------------------------------
def check_comparison(traj1, traj2, rtol=COMPARISON_RTOL):
    """Report max (u1 - u2)_+ over cells and snapshots; pass iff it is at most
    rtol * max u2."""
    if not _same_mesh(traj1.mesh, traj2.mesh):
        raise MeshMismatch("trajectories live on different meshes")
    if traj1.times.shape != traj2.times.shape or not np.array_equal(traj1.times, traj2.times):
        raise MeshMismatch("trajectories have different snapshot times")
    viol = float(np.max(np.maximum(traj1.fields - traj2.fields, 0.0)))
    scale = float(np.max(traj2.fields))
    tol = rtol * scale
    return CheckReport(
        name="comparison",
        passed=viol <= tol,
        measured=viol,
        tolerance=tol,
        anchor="ordered data give ordered solutions",
        details={"scale": scale},
    )


def _same_mesh(a, b):
    if hasattr(a, "same_as"):
        return a.same_as(b)
    return a is b or a == b


# -- long-time behaviour ---------------------------------------------------------
@dataclass(frozen=True)
class Classification:
    label: str
    sup_dev: float
    inf_K: float
    increasing: bool
    T: float


def classify_asymptotics(trajectory, K, mu0, tol_lo=TOL_LO, tol_hi=TOL_HI):
    """Label the end state on the radial band K = (a, b)."""
    mask = trajectory.mesh.mask(*K)
    if not np.any(mask):
        raise ValueError(f"K={K} contains no nodes")
    t = trajectory.times
    T = float(t[-1])
    uK = trajectory.fields[:, mask]
    sup_dev = float(np.max(np.abs(uK[-1] - mu0)))
    inf_series = uK.min(axis=1)
    late = t >= 0.75 * T
    late &= t > 0
    increasing = bool(np.count_nonzero(late) >= 2 and np.all(np.diff(inf_series[late]) >= 0)
                      and inf_series[late][-1] > inf_series[late][0])
    if sup_dev < tol_lo * mu0:
        label = CONVERGED
    elif inf_series[-1] > tol_hi * mu0 and increasing:
        label = BLOWING_UP
    else:
        label = UNDECIDED
    return Classification(label, sup_dev, float(inf_series[-1]), increasing, T)


@dataclass(frozen=True)
class OscillationTrace:
    times: np.ndarray
    sup_K: np.ndarray
    inf_K: np.ndarray
    events: tuple

    def kinds(self):
        return [k for k, _ in self.events]

    def low_then_high(self):
        """Time of the first high excursion preceded by a low one, else None."""
        seen_low = False
        for kind, t in self.events:
            if kind == "low":
                seen_low = True
            elif seen_low:
                return t
        return None

    def rows(self):
        return list(zip(self.times.tolist(), self.sup_K.tolist(), self.inf_K.tolist()))


def oscillation_trace(trajectory, K, mu0, low_margin=LOW_MARGIN, high_level=HIGH_LEVEL):
    """sup/inf over K at every positive snapshot, plus the list of entries into
    the low state (sup_K u <= mu0 + low_margin) and the high state
    (inf_K u >= high_level)."""
    mask = trajectory.mesh.mask(*K)
    keep = trajectory.times > 0
    times = trajectory.times[keep]
    uK = trajectory.fields[keep][:, mask]
    sup_K, inf_K = uK.max(axis=1), uK.min(axis=1)
    events = []
    state = None
    for t, s, i in zip(times, sup_K, inf_K):
        now = "low" if s <= mu0 + low_margin else ("high" if i >= high_level else None)
        if now is not None and now != state:
            events.append((now, float(t)))
            state = now
    return OscillationTrace(times, sup_K, inf_K, tuple(events))


# -- harmonic barrier ------------------------------------------------------------
def harmonic_barrier(delta, delta2, bound, n):
    """q(r) = bound (delta^(2-n) - r^(2-n)) / (delta^(2-n) - delta2^(2-n))."""
    if not 0 < delta < delta2:
        raise DegenerateAnnulus(f"need 0 < delta < delta2, got {delta}, {delta2}")
    d1 = delta ** (2 - n)
    den = d1 - delta2 ** (2 - n)

    def q(r):
        return bound * (d1 - np.asarray(r, dtype=float) ** (2 - n)) / den

    return q
