import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdelab.errors import PositivityLost, StepFloorReached
from fdelab.mesh import build_graded_radial
from fdelab.profiles import (
    CapSchedule,
    exact_separable_extinction,
    exact_static_singular,
    radial_power_law,
)
from fdelab.solver_radial import (
    BoundaryData,
    RadialState,
    Trajectory,
    cap_sweep,
    dirichlet_power,
    face_transmissibility,
    l1_distance_to,
    solve,
    solve_ensemble,
    step_implicit,
    total_mass,
)


@pytest.fixture
def mesh64():
    return build_graded_radial(1e-3, 1.0, 64, 1.2)


def _capped(p, mesh, lam=1.0, gamma=2.75, delta1=0.1, cap=1e4):
    return np.minimum(radial_power_law(p, lam, gamma, delta1).sample_radial(mesh), cap)


def _residual(p, mesh, u_new, u_old, dt):
    """Backward-Euler residual written out from the flux definition."""
    r = mesh.nodes
    A = mesh.face_areas
    w = u_new**p.m
    F = A * (w[1:] - w[:-1]) / (r[1:] - r[:-1])
    net = np.zeros_like(u_new)
    net[:-1] += F
    net[1:] -= F
    return mesh.volumes * (u_new - u_old) / dt - net


def test_constant_state_is_steady(p3, mesh64):
    st0 = RadialState(p3, mesh64, np.ones(65))
    new, _, _ = step_implicit(st0, BoundaryData(outer=1.0), 0.1)
    assert np.array_equal(new.u, st0.u)


def test_static_solution_one_step(p3):
    mesh = build_graded_radial(1e-3, 1.0, 256, 1.2)
    o = exact_static_singular(p3, 1.0)
    u = o(mesh.nodes)
    bc = BoundaryData(outer=float(u[-1]), inner=float(u[0]))
    new, _, _ = step_implicit(RadialState(p3, mesh, u), bc, 1e-5)
    assert np.max(np.abs(new.u - u) / u) <= 1e-9


def test_extinction_one_step(p3):
    mesh = build_graded_radial(1e-2, 1.0, 256, 1.2)
    e = exact_separable_extinction(p3, 1.0)
    r = mesh.nodes
    dt = 1e-3
    bc = BoundaryData(outer=float(e(r[-1], dt)), inner=float(e(r[0], dt)))
    new, _, _ = step_implicit(RadialState(p3, mesh, e(r, 0.0)), bc, dt)
    rel = np.max(np.abs(new.u - e(r, dt)) / e(r, dt))
    # one step: local error O(dt^2) plus dt times the spatial truncation
    assert rel <= 1e-5


def test_step_solves_scheme(p3, mesh64):
    u0 = _capped(p3, mesh64)
    new, _, _ = step_implicit(RadialState(p3, mesh64, u0), BoundaryData(outer=1.0), 1e-3)
    G = _residual(p3, mesh64, new.u, u0, 1e-3)[:-1]
    scale = mesh64.volumes[:-1] * np.maximum(new.u, u0)[:-1] / 1e-3
    assert np.max(np.abs(G) / scale) <= 1e-9


def test_jacobian_is_m_matrix(p3, mesh64):
    rng = np.random.default_rng(1)
    u_old = 1.0 + rng.uniform(0, 50, 65)
    u = u_old * rng.uniform(0.8, 1.2, 65)
    dt = 1e-2
    J = np.zeros((64, 64))
    g0 = _residual(p3, mesh64, u, u_old, dt)[:-1]
    for j in range(64):
        h = 1e-7 * u[j]
        up = u.copy()
        up[j] += h
        J[:, j] = (_residual(p3, mesh64, up, u_old, dt)[:-1] - g0) / h
    off = J - np.diag(np.diag(J))
    assert np.all(np.diag(J) > 0)
    assert np.all(off <= 1e-8 * np.abs(np.diag(J)).max())
    # column diagonal dominance: M-matrix by columns
    assert np.all(np.diag(J) >= np.sum(np.abs(off), axis=0) * (1 - 1e-6))


def test_mass_balance_matches_boundary_flux(p3, mesh64):
    u0 = _capped(p3, mesh64)
    dt = 1e-3
    new, _, _ = step_implicit(RadialState(p3, mesh64, u0), BoundaryData(outer=1.0), dt)
    V = mesh64.volumes
    dmass = np.sum(V[:-1] * (new.u - u0)[:-1]) / dt
    w = new.u**p3.m
    flux_in = face_transmissibility(mesh64)[-1] * (w[-1] - w[-2])
    assert dmass == pytest.approx(flux_in, rel=1e-9, abs=1e-9 * np.sum(V * new.u) / dt)


def test_solve_constant(p3, mesh64):
    tr = solve(p3, mesh64, np.ones(65), BoundaryData(outer=1.0), 1.0, 1e-3)
    assert np.all(tr.fields == 1.0)


def test_solve_capped_power_law(p3):
    mesh = build_graded_radial(1e-4, 1.0, 256, 1.2)
    u0 = _capped(p3, mesh, cap=1e6)
    tr = solve(p3, mesh, u0, BoundaryData(outer=1.0), 1.0, 1e-4, snapshot_times=[0.1, 0.5])
    assert np.all(tr.fields > 0)
    assert np.all(tr.fields >= 1.0 - 1e-12)
    assert np.all(np.diff(tr.fields[-1]) <= 1e-12 * tr.fields[-1].max())
    assert np.allclose(tr.times, [0.0, 0.1, 0.5, 1.0], rtol=0, atol=0)


def test_extinction_to_t4(p3):
    mesh = build_graded_radial(1e-3, 1.0, 256, 1.2)
    e = exact_separable_extinction(p3, 1.0)
    r = mesh.nodes
    bc = BoundaryData(outer=lambda t: float(e(r[-1], t)), inner=lambda t: float(e(r[0], t)))
    tr = solve(p3, mesh, e(r, 0.0), bc, 4.0, 1e-3)
    assert np.max(np.abs(tr.fields[-1] - e(r, 4.0)) / e(r, 4.0)) <= 0.02


def test_static_space_order(p3):
    o = exact_static_singular(p3, 1.0)
    errs = []
    for N in (64, 128, 256):
        mesh = build_graded_radial(1e-4, 1.0, N, 1.2)
        u = o(mesh.nodes)
        bc = BoundaryData(outer=float(u[-1]), inner=float(u[0]))
        tr = solve(p3, mesh, u, bc, 1.0, 1e-3)
        errs.append(np.max(np.abs(tr.fields[-1] - u) / u))
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_extinction_time_order(p3):
    mesh = build_graded_radial(1e-2, 1.0, 512, 1.2)
    e = exact_separable_extinction(p3, 1.0)
    r = mesh.nodes
    bc = BoundaryData(outer=lambda t: float(e(r[-1], t)), inner=lambda t: float(e(r[0], t)))
    errs = []
    for dt in (0.2, 0.1, 0.05):
        tr = solve(p3, mesh, e(r, 0.0), bc, 2.0, dt, dt_max=dt, adaptive=False)
        errs.append(np.max(np.abs(tr.fields[-1] - e(r, 2.0)) / e(r, 2.0)))
    assert errs[0] / errs[1] >= 1.8 and errs[1] / errs[2] >= 1.8


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(2.55, 4.0), st.floats(1.0, 3.0), st.floats(0.0, 0.5),
       st.floats(0.0, 0.5))
def test_discrete_comparison(lam, gamma, factor, dgamma, shift):
    from fdelab.model import validate_params
    p = validate_params(3, 0.2, 1.0)
    mesh = build_graded_radial(1e-3, 1.0, 64, 1.2)
    u1 = _capped(p, mesh, lam, gamma, cap=1e5)
    u2 = _capped(p, mesh, lam * factor, gamma + dgamma, cap=1e5) + shift
    b1 = BoundaryData(outer=1.0)
    b2 = b1.shifted(shift)
    t1, t2 = solve_ensemble(p, mesh, [u1, u2], [b1, b2], 0.2, 1e-4, snapshot_times=[0.05])
    viol = np.max(t1.fields - t2.fields)
    assert viol <= 1e-10 * np.max(t2.fields)


def test_l1_contraction(p3):
    mesh = build_graded_radial(1e-4, 1.0, 128, 1.2)
    u0 = _capped(p3, mesh, cap=1e6)
    tr = solve(p3, mesh, u0, BoundaryData(outer=1.0), 2.0, 1e-4,
               snapshot_times=np.linspace(0.05, 2.0, 40))
    d = np.array([l1_distance_to(mesh, u, 1.0) for u in tr.fields])
    assert np.all(np.diff(d) <= 1e-8 * d[0])
    assert total_mass(mesh, tr.fields[-1]) < total_mass(mesh, u0)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(1.0, 1e6), st.floats(1.0, 1e6)), min_size=1, max_size=30),
       st.floats(0.05, 0.95))
def test_lipschitz_bound(pairs, m):
    a = np.array(pairs)
    u1, u2 = a[:, 0], a[:, 1]
    lhs = np.max(np.maximum(u1**m - u2**m, 0))
    rhs = m * np.max(np.maximum(u1 - u2, 0))
    assert lhs <= rhs * (1 + 1e-12) + 1e-12


def test_lipschitz_on_solutions(p3, mesh64):
    u1 = _capped(p3, mesh64, 1.0, 2.75)
    u2 = _capped(p3, mesh64, 0.5, 2.75)
    t1, t2 = solve_ensemble(p3, mesh64, [u1, u2], [BoundaryData(1.0)] * 2, 0.1, 1e-4)
    lhs = np.max(np.maximum(t1.fields**0.2 - t2.fields**0.2, 0))
    assert lhs <= 0.2 * np.max(np.maximum(t1.fields - t2.fields, 0)) * (1 + 1e-12)


def test_cap_sweep_ordered(p3):
    mesh = build_graded_radial(1e-5, 1.0, 128, 1.2)
    prof = radial_power_law(p3, 1.0, 2.75, 0.1)
    trs = cap_sweep(p3, mesh, prof, CapSchedule((1e2, 1e3, 1e4)), BoundaryData(1.0), 0.5,
                    snapshot_times=[0.1])
    for a, b in zip(trs, trs[1:]):
        assert np.array_equal(a.times, b.times)
        assert np.max(a.fields - b.fields) <= 1e-10 * np.max(b.fields)


def test_single_cap_equals_solve(p3, mesh64):
    prof = radial_power_law(p3, 1.0, 2.75, 0.1)
    (tr,) = cap_sweep(p3, mesh64, prof, CapSchedule((1e3,)), BoundaryData(1.0), 0.2)
    ref = solve(p3, mesh64, np.minimum(prof.sample_radial(mesh64), 1e3), BoundaryData(1.0),
                0.2, 1e-4)
    assert np.array_equal(tr.fields, ref.fields)


def test_cap_sweep_epsilon_shift(p3, mesh64):
    prof = radial_power_law(p3, 1.0, 2.75, 0.1)
    (tr,) = cap_sweep(p3, mesh64, prof, CapSchedule((1e3,), epsilon=0.1), BoundaryData(1.0), 0.1)
    assert tr.fields[-1][-1] == pytest.approx(1.1)
    assert np.all(tr.fields >= 1.1 - 1e-12)


def test_dirichlet_power_inner(p3, mesh64):
    bc = dirichlet_power(1.0, 1.0, 2.75, 1e-3)
    assert bc.inner_value(3.0) == pytest.approx(1e-3**-2.75)
    tr = solve(p3, mesh64, _capped(p3, mesh64, cap=1e12), bc, 0.1, 1e-4)
    assert np.all(tr.fields[:, 0] == pytest.approx(1e-3**-2.75))


def test_step_floor(p3, mesh64, monkeypatch):
    import fdelab.solver_radial as sr

    def refuse(*a, **k):
        raise sr.NewtonDiverged("forced")
    monkeypatch.setattr(sr, "step_implicit", refuse)
    with pytest.raises(StepFloorReached):
        solve(p3, mesh64, np.ones(65), BoundaryData(1.0), 1.0, 1e-3)


def test_state_positivity(p3, mesh64):
    with pytest.raises(PositivityLost):
        RadialState(p3, mesh64, np.zeros(65))


def test_trajectory_invariants(p3, mesh64):
    with pytest.raises(ValueError):
        Trajectory(mesh64, [0.0, 0.0], np.ones((2, 65)))
    tr = solve(p3, mesh64, _capped(p3, mesh64), BoundaryData(1.0), 0.3, 1e-4,
               snapshot_times=[0.2, 0.1, 0.1, 5.0])
    assert list(tr.times) == [0.0, 0.1, 0.2, 0.3]
    assert tr.fields.flags.writeable is False
    steps = [d.step for d in tr.diagnostics]
    assert steps == list(range(1, len(steps) + 1))
    assert sum(d.dt for d in tr.diagnostics) == pytest.approx(0.3, rel=1e-12)
    with pytest.raises(KeyError):
        tr.at(0.15)


def test_invalid_T(p3, mesh64):
    with pytest.raises(ValueError):
        solve(p3, mesh64, np.ones(65), BoundaryData(1.0), 0.0, 1e-3)
