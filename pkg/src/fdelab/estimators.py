"""scikit-learn style wrappers over the functional solvers.

``fit`` runs a simulation (or a regression) and stores results in
trailing-underscore attributes; ``predict`` reads them back.
"""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .analysis import fit_exponent
from .mesh import build_cartesian, build_graded_radial
from .model import validate_params
from .solver_cartesian import solve_nd
from .solver_radial import BoundaryData, solve
from .validation import check_field, check_positive, check_radii


class RadialFDESolver(BaseEstimator):
    """Radially symmetric solver on the ball of radius ``R``.

    ``fit(u0)`` takes nodal initial data (or a callable of r) and integrates
    to ``T``.  ``inner`` is ``"capped"`` or a positive Dirichlet value.

    >>> est = RadialFDESolver(T=0.1, N=64).fit(lambda r: np.ones_like(r))
    >>> est.predict(0.1).shape
    (65,)
    """

    def __init__(self, n=3, m=0.2, mu0=1.0, r_min=1e-4, R=1.0, N=256, rho=1.2,
                 inner="capped", outer=None, T=1.0, dt0=1e-4, snapshot_times=None):
        self.n = n
        self.m = m
        self.mu0 = mu0
        self.r_min = r_min
        self.R = R
        self.N = N
        self.rho = rho
        self.inner = inner
        self.outer = outer
        self.T = T
        self.dt0 = dt0
        self.snapshot_times = snapshot_times

    def _build(self):
        params = validate_params(self.n, self.m, self.mu0)
        mesh = build_graded_radial(self.r_min, self.R, self.N, self.rho, n=self.n)
        return params, mesh

    def fit(self, X, y=None):
        params, mesh = self._build()
        check_positive(self.T, "T")
        u0 = X(mesh.nodes) if callable(X) else X
        u0 = check_field(u0, mesh.nodes.size, "initial data")
        outer = self.mu0 if self.outer is None else self.outer
        bc = BoundaryData(outer=outer, inner=self.inner)
        self.params_ = params
        self.mesh_ = mesh
        self.trajectory_ = solve(params, mesh, u0, bc, self.T, self.dt0,
                                 snapshot_times=self.snapshot_times)
        self.n_steps_ = len(self.trajectory_.diagnostics)
        return self

    def predict(self, t):
        """Nodal field at snapshot time ``t``."""
        check_is_fitted(self, "trajectory_")
        return np.array(self.trajectory_.at(t))

    @property
    def nodes_(self):
        check_is_fitted(self, "mesh_")
        return self.mesh_.nodes


class CartesianFDESolver(BaseEstimator):
    """Explicit 3D box solver; ``fit(profile)`` takes a singular profile or a
    nodal array on the grid."""

    def __init__(self, m=0.2, mu0=1.0, L=1.0, cells=32, points=((0.0, 0.0, 0.0),),
                 cap=1e4, pinned=True, T=0.1, snapshot_times=None):
        self.m = m
        self.mu0 = mu0
        self.L = L
        self.cells = cells
        self.points = points
        self.cap = cap
        self.pinned = pinned
        self.T = T
        self.snapshot_times = snapshot_times

    def fit(self, X, y=None):
        params = validate_params(3, self.m, self.mu0)
        grid = build_cartesian(self.L, self.cells, self.points)
        self.params_ = params
        self.grid_ = grid
        self.trajectory_ = solve_nd(params, grid, X, self.mu0, self.T,
                                    snapshot_times=self.snapshot_times, cap=self.cap,
                                    pinned=self.pinned)
        return self

    def predict(self, t):
        check_is_fitted(self, "trajectory_")
        return np.array(self.trajectory_.at(t))


class PowerLawRateEstimator(RegressorMixin, BaseEstimator):
    """Fit u ~ C r^-k on a distance window by least squares in log-log.

    ``X`` holds distances (shape (n,) or (n, 1)), ``y`` the positive field.
    """

    def __init__(self, window=None):
        self.window = window

    def fit(self, X, y):
        r = check_radii(X)
        u = check_field(y, r.size, "y")
        window = self.window or (float(r.min()), float(r.max()))
        fit = fit_exponent(r, u, window)
        self.exponent_ = fit.exponent
        self.prefactor_ = fit.prefactor
        self.residual_ = fit.residual
        self.window_ = fit.window
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        r = check_radii(X)
        return self.prefactor_ * r ** -self.exponent_
