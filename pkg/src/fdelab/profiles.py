"""Initial data: power-law singular profiles, layered oscillating data, caps,
and closed-form solutions used as oracles."""
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    Delta1TooLarge,
    GammaOutOfRange,
    RadiiNotDecreasing,
    SpecParityEmpty,
)
from .model import exponent_windows
from .mesh import RadialMesh

# sub-cells per control volume when averaging across a jump
_AVERAGING_POINTS = 64


@dataclass(frozen=True)
class SingularEntry:
    """One singular point with its lower/upper power-law envelopes.

    ``layers`` (optional) is a tuple of ``(outer_radius, exponent)`` pairs with
    decreasing radii; the last exponent is continued down to the point.
    Without layers the datum is ``max(mu0, lam * r**-gamma)`` for r < delta1.
    """

    point: tuple
    lam: float
    gamma: float
    lam_upper: float
    gamma_upper: float
    layers: tuple = None

    def to_dict(self):
        d = {
            "point": list(self.point),
            "lambda": self.lam,
            "gamma": self.gamma,
            "lambda_upper": self.lam_upper,
            "gamma_upper": self.gamma_upper,
        }
        if self.layers:
            d["layers"] = [list(x) for x in self.layers]
        return d


@dataclass(frozen=True)
class SingularProfile:
    entries: tuple
    delta1: float
    mu0: float
    n: int

    # -- pointwise evaluation --------------------------------------------
    def entry_value(self, rho, k=0):
        """Datum as a function of the distance ``rho`` to point ``k``."""
        e = self.entries[k]
        rho = np.asarray(rho, dtype=float)
        out = np.full(rho.shape, self.mu0)
        with np.errstate(divide="ignore", over="ignore"):
            if e.layers:
                radii = [r for r, _ in e.layers]
                for j, (r_out, expo) in enumerate(e.layers):
                    lo = radii[j + 1] if j + 1 < len(radii) else 0.0
                    sel = (rho < r_out) & (rho >= lo)
                    out[sel] = np.maximum(self.mu0, rho[sel] ** -expo)
            else:
                sel = rho < self.delta1
                out[sel] = np.maximum(self.mu0, e.lam * rho[sel] ** -e.gamma)
        return out

    def __call__(self, x):
        """Evaluate at points ``x`` of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[:-1], self.mu0)
        for k, e in enumerate(self.entries):
            rho = np.linalg.norm(x - np.asarray(e.point), axis=-1)
            near = rho < self.outer_radius(k)
            out[near] = self.entry_value(rho[near], k)
        return out

    def outer_radius(self, k=0):
        e = self.entries[k]
        return e.layers[0][0] if e.layers else self.delta1

    def interfaces(self, k=0):
        """Radii where the datum for point ``k`` may jump."""
        e = self.entries[k]
        if e.layers:
            return tuple(r for r, _ in e.layers)
        return (self.delta1,)

    def lower_envelope(self, rho, k=0):
        e = self.entries[k]
        return e.lam * np.asarray(rho, dtype=float) ** -e.gamma

    def upper_envelope(self, rho, k=0):
        e = self.entries[k]
        return e.lam_upper * np.asarray(rho, dtype=float) ** -e.gamma_upper

    # -- discretisation --------------------------------------------------
    def sample_radial(self, mesh: RadialMesh):
        """Nodal values on a radial mesh centred at the first point.

        Control volumes that straddle an interface get the volume average of
        the datum, computed by midpoint quadrature in log r.
        """
        r = mesh.nodes
        u = self.entry_value(r, 0)
        faces = mesh.faces
        for radius in self.interfaces(0):
            hit = np.nonzero((faces[:-1] < radius) & (faces[1:] > radius))[0]
            for i in hit:
                u[i] = _log_average(lambda s: self.entry_value(s, 0),
                                    faces[i], faces[i + 1], mesh.n)
        return u

    def sample_grid(self, grid):
        """Point values on a Cartesian grid; singular nodes come out as inf."""
        X = np.stack(grid.coordinates(), axis=-1)
        with np.errstate(divide="ignore"):
            return self(X)

    def to_dict(self):
        return {
            "delta1": self.delta1,
            "mu0": self.mu0,
            "n": self.n,
            "entries": [e.to_dict() for e in self.entries],
        }


def _log_average(fn, a, b, n):
    # volume average of fn over the shell a < r < b, midpoint rule in log r
    edges = np.exp(np.linspace(np.log(a), np.log(b), _AVERAGING_POINTS + 1))
    mid = np.sqrt(edges[1:] * edges[:-1])
    w = edges[1:] ** n - edges[:-1] ** n
    return float(np.sum(fn(mid) * w) / np.sum(w))


def power_law_profile(p, entries, delta1, delta0=None):
    """Build ``max(mu0, lam |x-a|^-gamma)`` bumps inside B_delta1(a), mu0 elsewhere.

    ``entries`` is an iterable of ``(point, lam, gamma)``.  The reported upper
    envelope uses gamma' = gamma and lam' = max(lam, mu0 * delta1**gamma).
    """
    w = exponent_windows(p)
    limit = 1.0 if delta0 is None else min(1.0, delta0)
    if not 0.0 < delta1 < limit:
        raise Delta1TooLarge(f"delta1={delta1} must satisfy 0 < delta1 < {limit:g}")
    built = []
    for point, lam, gamma in entries:
        if not gamma > w.gamma_low:
            raise GammaOutOfRange(
                f"gamma={gamma} must exceed 2/(1-m) = {w.gamma_low:.6g}"
            )
        if not lam > 0:
            raise ValueError(f"lambda={lam} must be positive")
        if len(point) != p.n:
            raise ValueError(f"point {point} is not in R^{p.n}")
        lam_up = max(lam, p.mu0 * delta1**gamma)
        built.append(SingularEntry(tuple(float(c) for c in point), float(lam),
                                   float(gamma), float(lam_up), float(gamma)))
    return SingularProfile(tuple(built), float(delta1), p.mu0, p.n)


def radial_power_law(p, lam, gamma, delta1, R=1.0):
    """Single-point profile centred at the origin of a ball of radius R."""
    return power_law_profile(p, [((0.0,) * p.n, lam, gamma)], delta1,
                             delta0=R / 3.0)


@dataclass(frozen=True)
class OscillationSpec:
    """Layer schedule for the alternating construction.

    Layer k (1-based) occupies radii[k] <= r < radii[k-1]; odd layers carry
    ``alpha2``, even layers ``alpha1``.
    """

    alpha1: float
    alpha2: float
    radii: tuple

    @property
    def layers(self):
        return len(self.radii)

    def exponent(self, k):
        return self.alpha2 if k % 2 == 1 else self.alpha1

    def to_dict(self):
        return {"alpha1": self.alpha1, "alpha2": self.alpha2,
                "radii": list(self.radii)}


def oscillation_spec(p, radii, alpha1=None, delta0=None):
    """Validated schedule; alpha2 is fixed at (2/(1-m) + n)/2 and alpha1
    defaults to (n-2)/m + 1."""
    w = exponent_windows(p)
    alpha2 = 0.5 * (w.gamma_low + p.n)
    if alpha1 is None:
        alpha1 = w.gamma_high + 1.0
    if not alpha1 > w.gamma_high:
        raise GammaOutOfRange(
            f"alpha1={alpha1} must exceed (n-2)/m = {w.gamma_high:.6g}"
        )
    radii = tuple(float(r) for r in radii)
    if len(radii) < 2:
        raise SpecParityEmpty("need at least two layers so both exponents occur")
    if any(b >= a for a, b in zip(radii, radii[1:])) or radii[-1] <= 0:
        raise RadiiNotDecreasing(f"radii {radii} are not strictly decreasing")
    limit = 1.0 if delta0 is None else min(1.0, delta0)
    if radii[0] >= limit:
        raise Delta1TooLarge(f"first radius {radii[0]} must be < {limit:g}")
    return OscillationSpec(float(alpha1), float(alpha2), radii)


def geometric_radii(first, layers, factor=10.0):
    """Default schedule 1/j_k with j_k = j_1 * factor**(k-1)."""
    return tuple(first / factor**k for k in range(layers))


def oscillating_profile(p, spec, point=None, other_points=()):
    """Layered datum around ``point`` plus plain alpha2 power laws at the
    other points (unit coefficients, radius radii[0])."""
    if point is None:
        point = (0.0,) * p.n
    r1 = spec.radii[0]
    layers = tuple((r, spec.exponent(k + 1)) for k, r in enumerate(spec.radii))
    lam_up = max(1.0, p.mu0 * r1**spec.alpha1)
    entries = [SingularEntry(tuple(float(c) for c in point), 1.0, spec.alpha2,
                             lam_up, spec.alpha1, layers)]
    for q in other_points:
        entries.append(SingularEntry(tuple(float(c) for c in q), 1.0,
                                     spec.alpha2, max(1.0, p.mu0 * r1**spec.alpha2),
                                     spec.alpha2))
    return SingularProfile(tuple(entries), r1, p.mu0, p.n)


@dataclass(frozen=True)
class CapSchedule:
    caps: tuple
    epsilon: float = 0.0
    mu0: float = 1.0

    def __post_init__(self):
        caps = tuple(float(c) for c in self.caps)
        if not caps:
            raise ValueError("a cap schedule needs at least one cap")
        if any(b <= a for a, b in zip(caps, caps[1:])):
            raise ValueError(f"caps {caps} must be strictly increasing")
        if caps[0] <= self.mu0:
            raise ValueError(f"caps must exceed mu0={self.mu0}")
        if not 0.0 <= self.epsilon < self.mu0:
            raise ValueError(f"epsilon={self.epsilon} must lie in [0, mu0)")
        object.__setattr__(self, "caps", caps)


def cap_regularize(u0, M, eps=0.0, mu0=None):
    """Pointwise ``min(u0, M) + eps``."""
    if mu0 is not None and not M > mu0:
        raise ValueError(f"cap M={M} must exceed mu0={mu0}")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    return np.minimum(np.asarray(u0, dtype=float), M) + eps


def power_laplacian_coefficient(k, n):
    """Δ r^k = k (k + n - 2) r^(k-2) in R^n, away from the origin."""
    return k * (k + n - 2)


@dataclass(frozen=True)
class StaticSingularSolution:
    """u*(r) = c r^-((n-2)/m): u*^m is a multiple of the fundamental solution."""

    params: object
    c: float

    @property
    def exponent(self):
        return (self.params.n - 2) / self.params.m

    def u(self, r, t=0.0):
        return self.c * np.asarray(r, dtype=float) ** -self.exponent

    __call__ = u

    def pde_residual(self, r, t=0.0):
        """u_t - Δ(u^m), evaluated from the closed form; identically zero."""
        p = self.params
        r = np.asarray(r, dtype=float)
        k = -self.exponent * p.m
        return -self.c**p.m * power_laplacian_coefficient(k, p.n) * r ** (k - 2)


@dataclass(frozen=True)
class SeparableExtinctionSolution:
    """u(r,t) = θ(t) r^(-2/(1-m)) with θ^(1-m) decreasing linearly to zero."""

    params: object
    theta0: float
    q: float = field(init=False)
    c_p: float = field(init=False)

    def __post_init__(self):
        m, n = self.params.m, self.params.n
        pw = 2.0 * m / (1.0 - m)
        object.__setattr__(self, "q", 2.0 / (1.0 - m))
        object.__setattr__(self, "c_p", power_laplacian_coefficient(-pw, n))

    @property
    def extinction_time(self):
        m = self.params.m
        return self.theta0 ** (1 - m) / (abs(self.c_p) * (1 - m))

    def theta(self, t):
        m = self.params.m
        base = self.theta0 ** (1 - m) - abs(self.c_p) * (1 - m) * np.asarray(t, dtype=float)
        return np.maximum(base, 0.0) ** (1.0 / (1 - m))

    def theta_dot(self, t):
        m = self.params.m
        base = self.theta0 ** (1 - m) - abs(self.c_p) * (1 - m) * np.asarray(t, dtype=float)
        return -abs(self.c_p) * np.maximum(base, 0.0) ** (m / (1 - m))

    def u(self, r, t=0.0):
        return self.theta(t) * np.asarray(r, dtype=float) ** -self.q

    __call__ = u

    def pde_residual(self, r, t):
        m = self.params.m
        r = np.asarray(r, dtype=float)
        lap = self.theta(t) ** m * self.c_p * r ** (-m * self.q - 2)
        return self.theta_dot(t) * r ** -self.q - lap


def exact_static_singular(p, c):
    if not c > 0:
        raise ValueError("c must be positive")
    return StaticSingularSolution(p, float(c))


def exact_separable_extinction(p, theta0):
    if not theta0 > 0:
        raise ValueError("theta0 must be positive")
    return SeparableExtinctionSolution(p, float(theta0))
