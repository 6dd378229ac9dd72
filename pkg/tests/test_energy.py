import numpy as np
import pytest

from conformal_retarget.energy import (
    assemble,
    assemble_full_matrix,
    discrete_energy,
    energy_density,
    grad_coeffs,
    map_jacobians,
    orientation_determinants,
    verify_m_matrix,
)
from conformal_retarget.errors import DegenerateTriangle, EmptyFreeSet, SizeMismatch
from conformal_retarget.mesh import Role, SimplicialMesh, VertexClassification, build_mesh

import oracles
from conftest import boundary_classification, random_rect_mesh


def unit_right_triangle():
    return SimplicialMesh(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        np.array([[0, 1, 2]]),
        1.0,
        1.0,
    )


def grid_mesh(n):
    """Regular n x n unit-square grid, every cell split along the same diagonal."""

    def idx(i, j):
        return j * (n + 1) + i

    pts = np.array([(i, j) for j in range(n + 1) for i in range(n + 1)], float)
    tris = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)
            tris.append((a, b, c))
            tris.append((b, d, c))
    return SimplicialMesh(pts, np.array(tris), float(n), float(n))


def test_grad_coeffs_unit_right_triangle():
    # hand-derived: area 1/2, x-weights (-1, 1, 0), y-weights (-1, 0, 1)
    c = grad_coeffs(unit_right_triangle())
    np.testing.assert_allclose(c.areas, [0.5])
    np.testing.assert_allclose(c.a[0], [-1.0, 1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(c.b[0], [-1.0, 0.0, 1.0], atol=1e-15)


def test_grad_coeffs_rows_sum_to_zero(rng):
    for k in range(5):
        m = random_rect_mesh(rng, n_interior=25)
        c = grad_coeffs(m)
        np.testing.assert_allclose(c.a.sum(axis=1), 0, atol=1e-12)
        np.testing.assert_allclose(c.b.sum(axis=1), 0, atol=1e-12)


def test_grad_coeffs_identity_jacobian():
    m = build_mesh(40, 30, 6)
    c = grad_coeffs(m)
    ux, uy, vx, vy = map_jacobians(m, c, m.points)
    np.testing.assert_allclose(ux, 1, atol=1e-12)
    np.testing.assert_allclose(uy, 0, atol=1e-12)
    np.testing.assert_allclose(vx, 0, atol=1e-12)
    np.testing.assert_allclose(vy, 1, atol=1e-12)


def test_grad_coeffs_degenerate():
    flat = SimplicialMesh(
        np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 1e-16]]),
        np.array([[0, 1, 2]]),
        2.0,
        1.0,
    )
    with pytest.raises(DegenerateTriangle):
        grad_coeffs(flat)


@pytest.mark.parametrize("w", [0.5, 0.75, 1.0, 1.5])
def test_stretch_energy_closed_form(w):
    m = build_mesh(1.0, 1.0, 0.2)
    c = grad_coeffs(m)
    f = m.points * np.array([w, 1.0])
    rep = discrete_energy(m, c, f, target_area=w * 1.0 * 1.0)
    assert abs(rep.conformal - 0.5 * (w - 1.0) ** 2) < 1e-9
    assert abs(rep.dirichlet - 0.5 * (w * w + 1.0)) < 1e-9


def test_identity_and_rotation_energy_zero():
    m = build_mesh(1.0, 1.0, 0.25)
    c = grad_coeffs(m)
    assert abs(discrete_energy(m, c, m.points, 1.0).conformal) < 1e-9
    for th in (0.3, 1.2, np.pi / 2):
        r = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        assert abs(discrete_energy(m, c, m.points @ r.T, 1.0).conformal) < 1e-9


def test_energy_scaled_by_domain_area():
    m = build_mesh(120, 90, 10)
    c = grad_coeffs(m)
    w = 0.75
    f = m.points * np.array([w, 1.0])
    rep = discrete_energy(m, c, f, target_area=w * 120 * 90)
    assert abs(rep.conformal - 0.5 * (w - 1) ** 2 * 120 * 90) < 1e-9 * 120 * 90


def test_energy_size_mismatch():
    m = build_mesh(10, 10, 2)
    c = grad_coeffs(m)
    with pytest.raises(SizeMismatch):
        discrete_energy(m, c, m.points[:-1], 100.0)


def test_energy_nonnegative_on_feasible_maps(rng):
    # maps that hit the target boundary exactly have conformal energy >= 0
    m = build_mesh(1.0, 1.0, 0.2)
    c = grad_coeffs(m)
    w = 0.7
    bm = m.boundary_mask()
    for _ in range(20):
        f = m.points * np.array([w, 1.0])
        f[~bm] += rng.normal(0, 0.08, f[~bm].shape)
        rep = discrete_energy(m, c, f, target_area=w)
        assert rep.conformal >= -1e-12


def test_density_uniform_for_stretch():
    m = build_mesh(1.0, 1.0, 0.2)
    c = grad_coeffs(m)
    for w in (0.5, 1.0, 1.3):
        d = energy_density(m, c, m.points * np.array([w, 1.0]))
        np.testing.assert_allclose(d, 0.5 * (w - 1) ** 2, atol=1e-12)


def test_density_zero_for_similarity():
    m = build_mesh(1.0, 1.0, 0.25)
    c = grad_coeffs(m)
    th = 0.77
    s = 1.4
    r = s * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    d = energy_density(m, c, m.points @ r.T + np.array([3.0, -1.0]))
    np.testing.assert_allclose(d, 0, atol=1e-12)


def test_density_integrates_to_conformal_energy():
    # boundary-exact orientation-preserving map: smooth interior wobble
    m = build_mesh(1.0, 1.0, 0.15)
    c = grad_coeffs(m)
    w = 0.8
    x, y = m.points[:, 0], m.points[:, 1]
    bump = np.sin(np.pi * x) * np.sin(np.pi * y)
    f = np.column_stack([w * (x + 0.15 * bump), y + 0.1 * bump])
    assert (orientation_determinants(m, c, f) > 0).all()
    rep = discrete_energy(m, c, f, target_area=w)
    total = float(energy_density(m, c, f) @ c.areas)
    assert abs(total - rep.conformal) < 1e-8


def test_unit_grid_laplacian_stencil():
    # five-point stencil on the diagonal-split grid: axis edges -1,
    # diagonal edges 0, diagonal entry 4 (hand derivation: the two 45-degree
    # angles opposite an axis edge give cot 45 + cot 45 = 2, halved and
    # negated; the 90-degree angles opposite a diagonal give cot 90 = 0)
    n = 4
    m = grid_mesh(n)
    c = grad_coeffs(m)
    L = assemble_full_matrix(m, c).toarray()

    def idx(i, j):
        return j * (n + 1) + i

    v = idx(2, 2)
    for nb in (idx(1, 2), idx(3, 2), idx(2, 1), idx(2, 3)):
        assert abs(L[v, nb] - (-1.0)) < 1e-12
    for nb in (idx(1, 3), idx(3, 1)):
        assert abs(L[v, nb]) < 1e-12
    assert abs(L[v, v] - 4.0) < 1e-12
    # non-neighbors are structurally zero
    assert abs(L[v, idx(0, 0)]) == 0.0


def test_full_matrix_annihilates_affine(rng):
    m = random_rect_mesh(rng, n_interior=40)
    c = grad_coeffs(m)
    L = assemble_full_matrix(m, c)
    ones = np.ones(m.n_vertices)
    np.testing.assert_allclose(L @ ones, 0, atol=1e-9)
    interior = ~m.boundary_mask()
    lx = L @ m.points[:, 0]
    ly = L @ m.points[:, 1]
    np.testing.assert_allclose(lx[interior], 0, atol=1e-9)
    np.testing.assert_allclose(ly[interior], 0, atol=1e-9)


def test_cotangent_equivalence(rng):
    for k in range(5):
        m = random_rect_mesh(rng, n_interior=30 + 5 * k)
        c = grad_coeffs(m)
        L = assemble_full_matrix(m, c).toarray()
        ref = oracles.cotan_laplacian(m.points, m.triangles)
        assert np.abs(L - ref).max() < 1e-10


def test_assembled_gradient_matches_finite_differences(rng):
    m = build_mesh(1.0, 1.0, 0.25)
    c = grad_coeffs(m)
    L = assemble_full_matrix(m, c)
    f = m.points * np.array([0.8, 1.0])
    interior = np.flatnonzero(~m.boundary_mask())
    f[interior] += rng.normal(0, 0.05, (len(interior), 2))

    h = 1e-6
    analytic_u = (L @ f[:, 0])[interior]
    analytic_v = (L @ f[:, 1])[interior]
    for v, gu, gv in zip(interior[:10], analytic_u[:10], analytic_v[:10]):
        for axis, g in ((0, gu), (1, gv)):
            fp = f.copy()
            fp[v, axis] += h
            fm = f.copy()
            fm[v, axis] -= h
            ep = discrete_energy(m, c, fp, 0.8).conformal
            em = discrete_energy(m, c, fm, 0.8).conformal
            fd = (ep - em) / (2 * h)
            assert abs(fd - g) <= 1e-4 * max(1.0, abs(g))


def test_verify_m_matrix_on_delaunay(rng):
    for k in range(3):
        m = random_rect_mesh(rng, n_interior=35)
        c = grad_coeffs(m)
        sysm = assemble(m, c, boundary_classification(m))
        rep = verify_m_matrix(sysm)
        assert rep == {"symmetric": True, "off_diag_nonpositive": True, "spd": True}


def test_verify_m_matrix_flags_non_delaunay_pair():
    # thin kite: both angles opposite the shared edge are obtuse, so the
    # cotangent weight flips sign
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.08], [0.5, -0.08]])
    tris = np.array([[0, 1, 2], [1, 0, 3]])
    m = SimplicialMesh(pts, tris, 1.0, 1.0)
    c = grad_coeffs(m)
    kinds = np.array([Role.INTERIOR, Role.INTERIOR, Role.BOUNDARY, Role.BOUNDARY], np.int8)
    cl = VertexClassification(kinds, np.full(4, -1), 0, 0)
    rep = verify_m_matrix(assemble(m, c, cl))
    assert rep["symmetric"] is True
    assert rep["off_diag_nonpositive"] is False


def test_assemble_empty_free_set():
    m = build_mesh(4, 4, 2)
    c = grad_coeffs(m)
    kinds = np.full(m.n_vertices, Role.BOUNDARY, np.int8)
    cl = VertexClassification(kinds, np.full(m.n_vertices, -1), 0, 0)
    with pytest.raises(EmptyFreeSet):
        assemble(m, c, cl)


def test_system_partition_views(rng):
    m = random_rect_mesh(rng, n_interior=20)
    c = grad_coeffs(m)
    cl = boundary_classification(m)
    sysm = assemble(m, c, cl)
    assert sysm.n_free == cl.n_free
    la = sysm.la_matrix()
    lb = sysm.lb_matrix()
    assert la.shape == (cl.n_free, cl.n_free)
    assert lb.shape == (cl.n_free, m.n_vertices - cl.n_free)
    # the views really are submatrices of the full matrix
    L = sysm.L.toarray()
    np.testing.assert_array_equal(la.toarray(), L[np.ix_(sysm.free, sysm.free)])
    np.testing.assert_array_equal(lb.toarray(), L[np.ix_(sysm.free, sysm.fixed)])
