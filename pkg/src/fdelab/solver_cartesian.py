"""Explicit 7-point solver for u_t = Δ(u^m) on a coarse 3D box with several
capped singular points."""
from dataclasses import dataclass

import numpy as np

from .errors import PositivityLost, StabilityViolation
from .solver_radial import StepRecord, Trajectory

SAFETY = 0.95


@dataclass(frozen=True)
class GridState:
    params: object
    grid: object
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.shape != self.grid.shape:
            raise ValueError("field does not match the grid")
        if not np.all(np.isfinite(u)) or not np.all(u > 0):
            raise PositivityLost("grid state must be finite and positive")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


def stable_dt(params, grid, u):
    """Largest dt keeping the explicit update monotone: h^2 / (2n m min(u)^(m-1))."""
    d_max = params.m * float(np.min(u)) ** (params.m - 1.0)
    return grid.h**2 / (2 * grid.n * d_max)


def laplacian(w, h):
    """7-point Laplacian at interior nodes; zero on the boundary layer."""
    out = np.zeros_like(w)
    c = w[1:-1, 1:-1, 1:-1]
    out[1:-1, 1:-1, 1:-1] = (
        w[2:, 1:-1, 1:-1] + w[:-2, 1:-1, 1:-1]
        + w[1:-1, 2:, 1:-1] + w[1:-1, :-2, 1:-1]
        + w[1:-1, 1:-1, 2:] + w[1:-1, 1:-1, :-2]
        - 6.0 * c
    ) / h**2
    return out


def step_explicit(state, f, dt, pinned=None):
    """Forward-Euler step on u^m; boundary nodes reset to ``f``.

    ``pinned`` is an optional boolean mask of nodes held at their current
    value (the capped singular nodes in the default mode).
    """
    p, grid = state.params, state.grid
    bound = stable_dt(p, grid, state.u)
    if dt > bound * (1 + 1e-12):
        raise StabilityViolation(f"dt={dt:.4g} exceeds the stability bound {bound:.4g}")
    u = state.u + dt * laplacian(state.u**p.m, grid.h)
    if pinned is not None:
        u[pinned] = state.u[pinned]
    u[grid.boundary_mask()] = f
    return GridState(p, grid, u, state.t + dt)


def singular_mask(grid):
    m = np.zeros(grid.shape, dtype=bool)
    for idx in grid.point_indices:
        m[idx] = True
    return m


class CartesianTrajectory(Trajectory):
    """Snapshots of 3D fields; ``mesh`` holds the :class:`CartesianGrid`."""

    @property
    def grid(self):
        return self.mesh

    def snapshot_rows(self, stride=4):
        ax = self.grid.axis
        sel = np.arange(0, ax.size, stride)
        for t, u in zip(self.times, self.fields):
            for i in sel:
                for j in sel:
                    for k in sel:
                        yield (float(t), float(ax[i]), float(ax[j]), float(ax[k]),
                               float(u[i, j, k]))

    def line_extract(self, t, point_index=0, axis=0):
        """Distances and values along the grid line through point ``point_index``
        in the +``axis`` direction, excluding the point itself."""
        idx = list(self.grid.point_indices[point_index])
        u = self.at(t)
        start = idx[axis]
        sl = list(idx)
        sl[axis] = slice(start + 1, None)
        vals = u[tuple(sl)]
        dist = np.arange(1, vals.size + 1) * self.grid.h
        return dist, np.array(vals)


def initial_grid_field(profile, grid, cap):
    u0 = profile.sample_grid(grid)
    return np.minimum(u0, cap)


def solve_nd(p, grid, profile, f, T, snapshot_times=None, cap=1e4, pinned=True,
             safety=SAFETY):
    """March to ``T`` with dt = safety * stability bound, re-evaluated each step.

    Singular nodes (and everything above ``cap``) start at ``cap``.  With
    ``pinned=True`` the singular nodes keep that value for all time.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    if profile is None:
        u0 = np.full(grid.shape, p.mu0)
    elif isinstance(profile, np.ndarray):
        u0 = np.array(profile, dtype=float)
    else:
        u0 = initial_grid_field(profile, grid, cap)
    u0[grid.boundary_mask()] = f
    state = GridState(p, grid, u0, 0.0)
    pin = singular_mask(grid) if pinned else None
    targets = sorted({float(T)} | {float(s) for s in (snapshot_times or ()) if 0 < s <= T})
    times, fields, diags = [0.0], [state.u], []
    step = 0
    for target in targets:
        if target == 0.0:
            continue
        while state.t < target:
            dt = safety * stable_dt(p, grid, state.u)
            remaining = target - state.t
            land = remaining <= dt
            h = remaining if land else dt
            state = step_explicit(state, f, h, pinned=pin)
            if land:
                state = GridState(p, grid, state.u, target)
            step += 1
            diags.append(StepRecord(step, state.t, h, 0, 0.0))
        times.append(state.t)
        fields.append(state.u)
    return CartesianTrajectory(grid, times, np.stack(fields), tuple(diags))
