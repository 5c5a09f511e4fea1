"""Graded radial meshes and coarse Cartesian grids."""
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from math import gamma as _gamma_fn
from math import pi

import numpy as np

from .errors import (
    GradingTooCoarse,
    InvalidRadii,
    PointOnBoundary,
    PointsTooClose,
    RangeOutsideMesh,
)

RHO_MAX = 1.2
MIN_CELLS = 16
MAX_CARTESIAN_CELLS = 64


def sphere_area(n):
    """Surface area of the unit sphere in R^n."""
    return 2.0 * pi ** (n / 2.0) / _gamma_fn(n / 2.0)


def shell_volume(n, a, b):
    """Volume of {a < |x| < b} in R^n, with 0 <= a <= b (arrays allowed)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return sphere_area(n) * (b**n - a**n) / n


@dataclass(frozen=True, eq=False)
class RadialMesh:
    """Vertex-centred radial mesh on the annulus r_min <= r <= R.

    Unknowns live on ``nodes``.  The control volume of node i is the shell
    between the neighbouring face midpoints (clipped to the mesh ends), so the
    volumes add up to the annulus measure exactly.
    """

    nodes: np.ndarray
    n: int
    rho_max: float = RHO_MAX
    transition: float = np.inf

    def __post_init__(self):
        r = np.array(self.nodes, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise InvalidRadii("a radial mesh needs at least 3 nodes")
        if r[0] <= 0 or np.any(np.diff(r) <= 0):
            raise InvalidRadii("nodes must be positive and strictly increasing")
        r.setflags(write=False)
        object.__setattr__(self, "nodes", r)

    @property
    def r_min(self):
        return float(self.nodes[0])

    @property
    def R(self):
        return float(self.nodes[-1])

    @property
    def N(self):
        """Number of cells (intervals); there are N+1 nodes."""
        return self.nodes.size - 1

    @cached_property
    def faces(self):
        """Control-volume boundaries, length N+2: r_0, midpoints, r_N."""
        r = self.nodes
        f = np.empty(r.size + 1)
        f[0] = r[0]
        f[-1] = r[-1]
        f[1:-1] = 0.5 * (r[1:] + r[:-1])
        f.setflags(write=False)
        return f

    @cached_property
    def volumes(self):
        f = self.faces
        v = shell_volume(self.n, f[:-1], f[1:])
        v.setflags(write=False)
        return v

    @cached_property
    def face_areas(self):
        """Sphere area at the N interior faces r_{i+1/2}."""
        a = sphere_area(self.n) * self.faces[1:-1] ** (self.n - 1)
        a.setflags(write=False)
        return a

    @cached_property
    def spacing(self):
        return np.diff(self.nodes)

    @property
    def ratios(self):
        return self.nodes[1:] / self.nodes[:-1]

    def mask(self, a=None, b=None):
        """Boolean node mask for a <= r <= b (either end open-ended)."""
        r = self.nodes
        m = np.ones(r.size, dtype=bool)
        if a is not None:
            m &= r >= a
        if b is not None:
            m &= r <= b
        return m

    def same_as(self, other):
        return (
            isinstance(other, RadialMesh)
            and self.n == other.n
            and self.nodes.shape == other.nodes.shape
            and np.array_equal(self.nodes, other.nodes)
        )

    def to_rows(self):
        return [(float(r), float(v)) for r, v in zip(self.nodes, self.volumes)]


def _solve_log_linear(c, ell, s_hi):
    # root of s + exp(s)/ell = c; convex increasing, so Newton from the right
    # converges monotonically
    s = np.minimum(c, s_hi)
    for _ in range(100):
        e = np.exp(s) / ell
        step = (s + e - c) / (1.0 + e)
        s = s - step
        if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(s))):
            break
    return s


def build_graded_radial(r_min, R, N, rho, n=3, transition=None):
    """Graded mesh: geometric near ``r_min``, quasi-uniform near ``R``.

    Nodes are equispaced in g(r) = log r + r/ell.  For r << ell the spacing
    is geometric, for r >> ell it is uniform, and every node ratio stays below
    exp(Δg) <= rho.  ``transition`` sets ell (default R/2); it is increased
    automatically if needed to respect ``rho``.  ``transition=np.inf`` gives a
    purely geometric mesh.

    Raises
    ------
    InvalidRadii
        unless 0 < r_min < R.
    GradingTooCoarse
        if rho**N * r_min < R, i.e. R is out of reach.
    """
    if not (np.isfinite(r_min) and np.isfinite(R) and 0 < r_min < R):
        raise InvalidRadii(f"need 0 < r_min < R, got r_min={r_min}, R={R}")
    if not 1.0 < rho <= RHO_MAX:
        raise GradingTooCoarse(f"rho={rho} must lie in (1, {RHO_MAX}]")
    N = int(N)
    log_span = np.log(R / r_min)
    budget = N * np.log(rho) - log_span
    if budget < 0:
        raise GradingTooCoarse(
            f"rho**N * r_min = {rho**N * r_min:.6g} < R = {R}: "
            f"{N} cells at ratio <= {rho} cannot reach R"
        )
    if N < MIN_CELLS:
        raise GradingTooCoarse(f"N={N} < {MIN_CELLS} cells")

    ell = 0.5 * R if transition is None else float(transition)
    if budget == 0:
        ell = np.inf
    elif np.isfinite(ell):
        ell = max(ell, (R - r_min) / budget)

    if np.isinf(ell):
        nodes = r_min * np.exp(np.linspace(0.0, log_span, N + 1))
    else:
        g0 = np.log(r_min) + r_min / ell
        g1 = np.log(R) + R / ell
        c = np.linspace(g0, g1, N + 1)
        nodes = np.exp(_solve_log_linear(c, ell, np.log(R)))
    nodes[0] = r_min
    nodes[-1] = R
    return RadialMesh(nodes=nodes, n=n, rho_max=rho, transition=ell)


def annulus_measure(mesh, a, b):
    """ω_{n-1} ∫_a^b r^{n-1} dr, for r_min <= a < b <= R.

    The value is analytic, so it does not depend on the mesh resolution.
    """
    slack = 1e-12
    if not (mesh.r_min * (1 - slack) <= a < b <= mesh.R * (1 + slack)):
        raise RangeOutsideMesh(
            f"[{a}, {b}] is not inside the mesh range [{mesh.r_min}, {mesh.R}]"
        )
    return float(shell_volume(mesh.n, a, b))


@dataclass(frozen=True, eq=False)
class CartesianGrid:
    """Uniform node grid on the box [-L, L]^n with registered singular points.

    ``points`` are the snapped node positions, ``requested_points`` the
    user-supplied ones; ``delta0`` is computed from the requested positions.
    """

    L: float
    cells_per_axis: int
    points: tuple
    requested_points: tuple
    point_indices: tuple
    delta0: float
    n: int = 3

    @property
    def h(self):
        return 2.0 * self.L / self.cells_per_axis

    @property
    def axis(self):
        return np.linspace(-self.L, self.L, self.cells_per_axis + 1)

    @property
    def shape(self):
        return (self.cells_per_axis + 1,) * self.n

    def coordinates(self):
        return np.meshgrid(*([self.axis] * self.n), indexing="ij")

    def distance_to(self, point):
        X = self.coordinates()
        return np.sqrt(sum((x - p) ** 2 for x, p in zip(X, point)))

    def boundary_mask(self):
        m = np.zeros(self.shape, dtype=bool)
        for ax in range(self.n):
            sl = [slice(None)] * self.n
            sl[ax] = 0
            m[tuple(sl)] = True
            sl[ax] = -1
            m[tuple(sl)] = True
        return m


def compute_delta0(points, L):
    """One third of the smallest of the boundary distances and pair distances."""
    pts = np.asarray(points, dtype=float)
    cands = [float(np.min(L - np.abs(p))) for p in pts]
    cands += [float(np.linalg.norm(p - q)) for p, q in combinations(pts, 2)]
    return min(cands) / 3.0


def build_cartesian(L, cells_per_axis, points):
    pts = [tuple(float(c) for c in p) for p in points]
    if not pts:
        raise ValueError("at least one singular point is required")
    n = len(pts[0])
    if n != 3 or any(len(p) != n for p in pts):
        raise ValueError("Cartesian grids are three-dimensional only")
    cells = int(cells_per_axis)
    if cells < 2 or cells % 2:
        raise ValueError("cells_per_axis must be an even integer >= 2")
    if cells > MAX_CARTESIAN_CELLS:
        raise ValueError(f"cells_per_axis={cells} exceeds {MAX_CARTESIAN_CELLS}")
    h = 2.0 * L / cells
    indices = []
    for p in pts:
        if any(abs(c) >= L for c in p):
            raise PointOnBoundary(f"point {p} is not interior to [-{L}, {L}]^3")
        idx = tuple(int(round((c + L) / h)) for c in p)
        if any(i <= 0 or i >= cells for i in idx):
            raise PointOnBoundary(f"point {p} snaps onto the boundary")
        indices.append(idx)
    if len(set(indices)) != len(indices):
        raise PointsTooClose(
            f"grid spacing h={h:g} merges distinct singular points when snapping"
        )
    snapped = tuple(tuple(-L + i * h for i in idx) for idx in indices)
    return CartesianGrid(
        L=float(L),
        cells_per_axis=cells,
        points=snapped,
        requested_points=tuple(pts),
        point_indices=tuple(indices),
        delta0=compute_delta0(pts, L),
        n=n,
    )
