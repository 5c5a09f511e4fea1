"""Backward-Euler finite-volume solver for radial solutions of u_t = Δ(u^m).

The discrete operator on node i with control volume V_i is

    V_i (u_i - u_i^old) / dt = F_{i+1/2} - F_{i-1/2},
    F_{i+1/2} = A_{i+1/2} (w_{i+1} - w_i) / (r_{i+1} - r_i),   w = u^m,

with A the sphere area at the face midpoint.  Its Jacobian is an M-matrix
(positive diagonal, non-positive off-diagonals, column sums V_i/dt > 0), so
ordered data give ordered solutions.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.linalg import solve_banded

from .errors import NewtonDiverged, PositivityLost, StepFloorReached
from .profiles import SingularProfile, cap_regularize

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-11
MAX_NEWTON = 40
EASY_ITERS = 4
GROWTH = 1.2
FLOOR_FACTOR = 1e-12


def _as_time_function(value):
    if callable(value):
        return value
    v = float(value)
    return lambda t: v


@dataclass(frozen=True)
class BoundaryData:
    """Outer Dirichlet value f(t), and the inner closure.

    ``inner`` is ``"capped"`` (no inner boundary: zero flux through r_min, the
    data are expected to be capped) or a Dirichlet value / function of t.
    """

    outer: object
    inner: object = "capped"

    @property
    def inner_dirichlet(self):
        return not (isinstance(self.inner, str) and self.inner == "capped")

    def outer_value(self, t):
        return float(_as_time_function(self.outer)(t))

    def inner_value(self, t):
        return float(_as_time_function(self.inner)(t))

    def shifted(self, eps):
        """Boundary data f + eps (inner Dirichlet values shifted too)."""
        if eps == 0:
            return self
        f = _as_time_function(self.outer)
        outer = (self.outer + eps) if not callable(self.outer) else (lambda t: f(t) + eps)
        inner = self.inner
        if self.inner_dirichlet:
            g = _as_time_function(self.inner)
            inner = (self.inner + eps) if not callable(self.inner) else (lambda t: g(t) + eps)
        return BoundaryData(outer, inner)


def dirichlet_power(mu0, lam, gamma, r_min):
    """Inner Dirichlet closure holding the value lam * r_min**-gamma."""
    return BoundaryData(outer=mu0, inner=max(mu0, lam * r_min**-gamma))


@dataclass(frozen=True)
class RadialState:
    params: object
    mesh: object
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.shape != self.mesh.nodes.shape:
            raise ValueError("field does not match the mesh")
        if not np.all(u > 0):
            raise PositivityLost("state must be strictly positive")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    dt: float
    newton_iters: int
    residual: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots ``fields[k]`` at ``times[k]`` (strictly increasing)."""

    mesh: object
    times: np.ndarray
    fields: np.ndarray
    diagnostics: tuple = ()
    anomalies: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        fields = np.array(self.fields, dtype=float)
        if np.any(np.diff(times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        times.setflags(write=False)
        fields.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fields", fields)

    def __len__(self):
        return self.times.size

    def at(self, t):
        """Snapshot at time ``t`` (must be one of the snapshot times)."""
        k = int(np.argmin(np.abs(self.times - t)))
        if not np.isclose(self.times[k], t, rtol=1e-12, atol=1e-300):
            raise KeyError(f"no snapshot at t={t}")
        return self.fields[k]

    def snapshot_rows(self):
        r = self.mesh.nodes
        for t, u in zip(self.times, self.fields):
            for ri, ui in zip(r, u):
                yield (float(t), float(ri), float(ui))

    def diagnostic_rows(self):
        for d in self.diagnostics:
            yield (d.step, d.t, d.dt, d.newton_iters, d.residual)


def face_transmissibility(mesh):
    return mesh.face_areas / mesh.spacing


def fluxes(mesh, w):
    """F_{i+1/2} for the nodal field w (= u^m)."""
    return face_transmissibility(mesh) * np.diff(w)


def divergence(mesh, w):
    """Net inflow F_{i+1/2} - F_{i-1/2} into every control volume."""
    F = fluxes(mesh, w)
    div = np.zeros(mesh.nodes.size)
    div[:-1] += F
    div[1:] -= F
    return div


def discrete_laplacian(mesh, w):
    """Finite-volume Laplacian of w at interior nodes 1..N-1."""
    return (divergence(mesh, w) / mesh.volumes)[1:-1]


def step_implicit(state, bc, dt, tol=NEWTON_TOL, max_iter=MAX_NEWTON):
    """One backward-Euler step.  Returns ``(new_state, iterations, residual)``.

    Raises
    ------
    NewtonDiverged
        no convergence in ``max_iter`` iterations (retry with smaller dt).
    PositivityLost
        the damped Newton update could not keep the iterate positive.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    mesh, p = state.mesh, state.params
    m = p.m
    floor = FLOOR_FACTOR * p.mu0
    t_new = state.t + dt
    u_old = state.u
    V = mesh.volumes
    Tf = face_transmissibility(mesh)

    u = np.array(u_old)
    u[-1] = bc.outer_value(t_new)
    lo = 0
    if bc.inner_dirichlet:
        u[0] = bc.inner_value(t_new)
        lo = 1
    hi = u.size - 1  # exclusive; the outer node is always Dirichlet
    if u[-1] <= 0 or u[0] <= 0:
        raise PositivityLost("boundary values must be positive")

    def residual(u):
        w = u**m
        F = Tf * np.diff(w)
        div = np.zeros(u.size)
        div[:-1] += F
        div[1:] -= F
        acc = V * (u - u_old) / dt
        G = acc - div
        # flux summands set the roundoff level of the difference
        absF = Tf * (w[1:] + w[:-1])
        scale = V * np.maximum(u, u_old) / dt
        scale[:-1] += absF
        scale[1:] += absF
        return G[lo:hi], scale[lo:hi]

    def newton_update(u, G):
        dw = m * np.maximum(u, floor) ** (m - 1.0)
        diag = V / dt
        diag = diag.copy()
        diag[:-1] += Tf * dw[:-1]
        diag[1:] += Tf * dw[1:]
        upper = -Tf * dw[1:]   # d G_i / d u_{i+1}
        lower = -Tf * dw[:-1]  # d G_{i+1} / d u_i
        k = hi - lo
        ab = np.zeros((3, k))
        ab[0, 1:] = upper[lo:hi - 1]
        ab[1, :] = diag[lo:hi]
        ab[2, :-1] = lower[lo:hi - 1]
        return solve_banded((1, 1), ab, -G, check_finite=False)

    G, scale = residual(u)
    res = float(np.max(np.abs(G) / scale))
    it = 0
    polished = False
    while True:
        if not np.isfinite(res):
            raise NewtonDiverged("non-finite residual")
        if res <= tol:
            if polished:
                break
            polished = True  # one extra step drives the residual to roundoff
        elif it >= max_iter:
            raise NewtonDiverged(f"no convergence after {it} iterations (res={res:.3e})")
        delta = newton_update(u, G)
        lam = 1.0
        cur = u[lo:hi]
        trial = cur + delta
        while np.any(trial < 0.5 * cur):
            lam *= 0.5
            if lam < 2.0**-30:
                raise PositivityLost("damping could not keep the iterate positive")
            trial = cur + lam * delta
        u[lo:hi] = trial
        it += 1
        G_new, scale = residual(u)
        res_new = float(np.max(np.abs(G_new) / scale))
        if polished and res_new > res:
            # polishing made things worse (roundoff); undo it
            u[lo:hi] = cur
            G, scale = residual(u)
            res = float(np.max(np.abs(G) / scale))
            break
        G, res = G_new, res_new
    if np.any(u < floor):
        logger.warning("solution dropped below the positivity floor")
    return RadialState(p, mesh, u, t_new), it, res


def _targets(T, snapshot_times):
    ts = {float(T)}
    if snapshot_times is not None:
        for s in snapshot_times:
            s = float(s)
            if 0 < s <= T:
                ts.add(s)
    return sorted(ts)


def initial_field(profile, mesh):
    if isinstance(profile, SingularProfile):
        return profile.sample_radial(mesh)
    if callable(profile):
        return np.asarray(profile(mesh.nodes), dtype=float)
    return np.array(profile, dtype=float)


def solve(p, mesh, profile, bc, T, dt0, snapshot_times=None, dt_max=None,
          adaptive=True, tol=NEWTON_TOL):
    """Integrate to time ``T``; returns a :class:`Trajectory`.

    ``profile`` may be a :class:`SingularProfile`, a callable of r or an array
    of nodal values.  The step size is halved whenever Newton fails and grown
    by 1.2 after easy steps, capped at ``dt_max`` (default T/100).  Snapshot
    times are hit exactly; t=0 is always stored.
    """
    return solve_ensemble(p, mesh, [profile], [bc], T, dt0, snapshot_times,
                          dt_max=dt_max, adaptive=adaptive, tol=tol)[0]


def solve_ensemble(p, mesh, profiles, bcs, T, dt0, snapshot_times=None,
                   dt_max=None, adaptive=True, tol=NEWTON_TOL):
    """March several data sets with one shared step sequence.

    A Newton failure in any member halves the step for all of them, so the
    members see identical dt histories.  Ordered data then give ordered
    trajectories to roundoff.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if len(profiles) != len(bcs):
        raise ValueError("need one boundary condition per profile")
    states = []
    for profile, bc in zip(profiles, bcs):
        u0 = initial_field(profile, mesh).copy()
        u0[-1] = bc.outer_value(0.0)
        if bc.inner_dirichlet:
            u0[0] = bc.inner_value(0.0)
        states.append(RadialState(p, mesh, u0, 0.0))
    k = len(states)
    dt_max = T / 100.0 if dt_max is None else float(dt_max)
    dt = min(float(dt0), dt_max)
    floor = 1e-14 * T
    t = 0.0
    times = [0.0]
    fields = [[s.u] for s in states]
    diags = [[] for _ in range(k)]
    anomalies = [[] for _ in range(k)]
    step = 0
    for target in _targets(T, snapshot_times):
        while t < target:
            remaining = target - t
            if remaining <= dt * (1 + 1e-9):
                h, land = remaining, True
            elif remaining < 2 * dt:
                h, land = 0.5 * remaining, False
            else:
                h, land = dt, False
            try:
                results = [step_implicit(s, bc, h, tol=tol) for s, bc in zip(states, bcs)]
            except (NewtonDiverged, PositivityLost) as exc:
                dt = 0.5 * h
                logger.debug("t=%.6g: %s; dt -> %.3e", t, exc, dt)
                if dt < floor:
                    raise StepFloorReached(f"dt={dt:.3e} fell below {floor:.3e} at t={t:.6g}")
                continue
            t = target if land else t + h
            step += 1
            worst = 0
            for j, (new, iters, res) in enumerate(results):
                states[j] = RadialState(p, mesh, new.u, t)
                diags[j].append(StepRecord(step, t, h, iters, res))
                if np.min(new.u) < FLOOR_FACTOR * p.mu0:
                    anomalies[j].append(f"positivity floor touched at t={t:.6g}")
                worst = max(worst, iters)
            if adaptive and worst <= EASY_ITERS and h >= dt * (1 - 1e-12):
                dt = min(dt * GROWTH, dt_max)
        times.append(t)
        for j, s in enumerate(states):
            fields[j].append(s.u)
    return [Trajectory(mesh, times, np.vstack(fields[j]), tuple(diags[j]),
                       tuple(anomalies[j])) for j in range(k)]


def _solve_packed(args):
    return solve(*args[0], **args[1])


def cap_sweep(p, mesh, profile, schedule, bc, T, dt0=1e-4, snapshot_times=None,
              jobs=1, **kw):
    """One trajectory per cap M in the schedule (data min(u0, M) + eps,
    boundary data f + eps), on the same mesh and snapshot times.

    With ``jobs == 1`` the caps march together on one step sequence, which
    keeps them exactly ordered.  ``jobs > 1`` runs them as independent
    processes; each run adapts its own dt, so ordering then holds only up to
    the time-discretisation error.
    """
    u0 = initial_field(profile, mesh)
    bc_eps = bc.shifted(schedule.epsilon)
    data = [cap_regularize(u0, M, schedule.epsilon) for M in schedule.caps]
    if jobs > 1 and len(data) > 1:
        tasks = [((p, mesh, d, bc_eps, T, dt0), dict(snapshot_times=snapshot_times, **kw))
                 for d in data]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_solve_packed, tasks))
    return solve_ensemble(p, mesh, data, [bc_eps] * len(data), T, dt0,
                          snapshot_times, **kw)


def total_mass(mesh, u):
    return float(np.sum(mesh.volumes * u))


def l1_distance_to(mesh, u, level, mask=None):
    d = mesh.volumes * np.abs(u - level)
    if mask is not None:
        d = d[mask]
    return float(np.sum(d))
