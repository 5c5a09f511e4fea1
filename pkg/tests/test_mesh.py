from math import gamma as G, pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdelab.errors import (
    GradingTooCoarse,
    InvalidRadii,
    PointOnBoundary,
    PointsTooClose,
    RangeOutsideMesh,
)
from fdelab.mesh import annulus_measure, build_cartesian, build_graded_radial, sphere_area


def test_graded_contract():
    mesh = build_graded_radial(1e-3, 1.0, 256, 1.05)
    assert mesh.nodes[0] == 1e-3 and mesh.nodes[-1] == 1.0
    assert mesh.nodes.size == 257
    assert np.all(np.diff(mesh.nodes) > 0)
    assert mesh.ratios.max() <= 1.05 + 1e-12


def test_too_coarse():
    # 1.01**8 * 1e-3 < 1 by direct arithmetic
    assert 1.01**8 * 1e-3 < 1.0
    with pytest.raises(GradingTooCoarse):
        build_graded_radial(1e-3, 1.0, 8, 1.01)


def test_inverted_radii():
    with pytest.raises(InvalidRadii):
        build_graded_radial(0.5, 0.25, 64, 1.1)


def test_rho_out_of_range():
    with pytest.raises(GradingTooCoarse):
        build_graded_radial(1e-3, 1.0, 256, 1.5)


def test_too_few_cells():
    with pytest.raises(GradingTooCoarse):
        build_graded_radial(0.5, 1.0, 8, 1.2)


def test_geometric_near_origin_uniform_near_R():
    mesh = build_graded_radial(1e-6, 1.0, 256, 1.2)
    ratios = mesh.ratios
    assert np.ptp(ratios[:20]) < 1e-3  # geometric start
    h = mesh.spacing
    assert h[-1] / h[-10] < 1.1  # nearly uniform at the end


def test_volumes_sum_to_annulus():
    mesh = build_graded_radial(1e-4, 2.0, 300, 1.2)
    exact = 4 * pi / 3 * (2.0**3 - 1e-12)
    assert abs(mesh.volumes.sum() - exact) / exact < 1e-12


def test_unit_ball_limit():
    mesh = build_graded_radial(1e-9, 1.0, 256, 1.2)
    assert annulus_measure(mesh, mesh.r_min, 1.0) == pytest.approx(4 * pi / 3, rel=1e-12)


def test_shell_n3():
    mesh = build_graded_radial(1e-3, 2.0, 256, 1.2)
    assert annulus_measure(mesh, 1.0, 2.0) == pytest.approx(28 * pi / 3, rel=1e-14)


def test_ball_n4():
    mesh = build_graded_radial(1e-9, 1.0, 256, 1.2, n=4)
    # omega_3 = 2 pi^2 and the radial integral is 1/4
    assert annulus_measure(mesh, mesh.r_min, 1.0) == pytest.approx(pi**2 / 2, rel=1e-12)


def test_sphere_area_against_gamma_formula():
    for n in range(2, 8):
        assert sphere_area(n) == pytest.approx(2 * pi ** (n / 2) / G(n / 2))


def test_range_outside():
    mesh = build_graded_radial(1e-3, 1.0, 64, 1.2)
    with pytest.raises(RangeOutsideMesh):
        annulus_measure(mesh, 0.5, 2.0)
    with pytest.raises(RangeOutsideMesh):
        annulus_measure(mesh, 0.5, 0.4)


def test_measure_refinement_invariant():
    a = build_graded_radial(1e-3, 1.0, 64, 1.2)
    b = build_graded_radial(1e-3, 1.0, 128, 1.2)
    assert annulus_measure(a, 0.1, 0.7) == annulus_measure(b, 0.1, 0.7)


@settings(max_examples=40, deadline=None)
@given(st.floats(-7, -1), st.floats(0.0, 1.5), st.integers(64, 600), st.floats(1.02, 1.2))
def test_ratio_bound_and_volume(log_rmin, log_R, N, rho):
    r_min, R = 10.0**log_rmin, 10.0**log_R
    if rho**N * r_min < R:
        with pytest.raises(GradingTooCoarse):
            build_graded_radial(r_min, R, N, rho)
        return
    mesh = build_graded_radial(r_min, R, N, rho)
    assert mesh.ratios.max() <= rho * (1 + 1e-10)
    exact = 4 * pi / 3 * (R**3 - r_min**3)
    assert abs(mesh.volumes.sum() - exact) <= 1e-12 * exact


def test_cartesian_two_points():
    g = build_cartesian(1.0, 32, [(0.3, 0, 0), (-0.3, 0, 0)])
    assert g.delta0 == pytest.approx(0.2)
    assert g.h == pytest.approx(1 / 16)


def test_cartesian_origin():
    g = build_cartesian(1.0, 32, [(0, 0, 0)])
    assert g.delta0 == pytest.approx(1 / 3)
    assert g.points[0] == (0.0, 0.0, 0.0)
    assert g.point_indices[0] == (16, 16, 16)


def test_cartesian_merge():
    with pytest.raises(PointsTooClose):
        build_cartesian(1.0, 4, [(0.1, 0, 0), (0.2, 0, 0)])


def test_cartesian_boundary_point():
    with pytest.raises(PointOnBoundary):
        build_cartesian(1.0, 32, [(1.0, 0, 0)])


def test_points_on_nodes():
    g = build_cartesian(1.0, 32, [(0.31, -0.2, 0.05)])
    ax = g.axis
    for c, i in zip(g.points[0], g.point_indices[0]):
        assert c == pytest.approx(ax[i])
