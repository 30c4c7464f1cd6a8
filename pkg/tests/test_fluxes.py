import numpy as np
import pytest
from hypothesis import given, strategies as st

from oblique_fv import affine_case, build_mesh, generate_grid, get_case
from oblique_fv.fluxes import (LinearStencil, SplittingBreakdown, advective_bracket, edge_brackets,
                               face_brackets, hmm_local_operator, hmm_matrices, inner_flux_matrix,
                               inner_flux_stencil, inner_flux_values, splitting_boundary_stencil,
                               splitting_flux_matrix, surface_div_bracket, upwind_boundary_stencil)

coeffs = st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4)


def _affine_points(mesh, c):
    return c[0] + mesh.points @ np.asarray(c[1:])


@given(c=coeffs, seed=st.integers(0, 1000))
def test_inner_flux_exact_for_affine(c, seed):
    m = build_mesh(generate_grid("cube", (3, 3, 3), 0.2, seed))
    F = inner_flux_values(m, _affine_points(m, c))
    exact = -m.face_ntilde @ np.asarray(c[1:])
    scale = np.linalg.norm(c[1:]) * m.face_area + 1e-300
    assert np.all(np.abs(F - exact) <= 1e-11 * scale + 1e-14)


def test_inner_flux_exact_on_curved_domains():
    c = np.array([0.4, -1.0, 2.0, 0.5])
    for domain in ("tesseroid", "perturbed_sphere"):
        m = build_mesh(generate_grid(domain, (4, 3, 3), 0.15, 1))
        F = inner_flux_values(m, _affine_points(m, c))
        assert np.allclose(F, -m.face_ntilde @ c[1:], rtol=0, atol=1e-12)


def test_sparse_and_direct_inner_flux_agree(perturbed5, rng):
    phi = rng.standard_normal(perturbed5.n_points)
    F = inner_flux_matrix(perturbed5) @ phi
    assert np.allclose(F, inner_flux_values(perturbed5, phi), rtol=0, atol=1e-13)


def test_two_point_flux_on_uniform_mesh(uniform3, rng):
    phi = rng.standard_normal(uniform3.n_points)
    m = uniform3
    jump = phi[m.cell_pid[m.face_p]] - phi[m.face_q_point]
    assert np.allclose(inner_flux_values(m, phi), m.face_area * jump / m.face_d, atol=1e-14)


def test_inner_stencils_antisymmetric(perturbed4):
    m = perturbed4
    F = inner_flux_matrix(m)
    for f in m.interior_faces[::7]:
        sp_ = inner_flux_stencil(m, int(f), "p", matrix=F)
        sq = inner_flux_stencil(m, int(f), "q", matrix=F)
        total = sp_ + sq
        assert all(c == 0.0 for c in total.terms.values())
        assert total.constant == 0.0


def test_inner_stencil_folds_dirichlet_data(perturbed4, rng):
    m = perturbed4
    data = rng.standard_normal(m.n_points)
    pv = data.copy()
    cells = rng.standard_normal(m.n_cells)
    pv[m.cell_pid] = cells
    F = inner_flux_values(m, pv)
    for f in m.dirichlet_faces[::5]:
        st_ = inner_flux_stencil(m, int(f), point_data=data)
        assert np.isclose(st_.apply(cells), F[f], rtol=1e-13, atol=1e-13)
    with pytest.raises(ValueError):
        inner_flux_stencil(m, int(m.dirichlet_faces[0]), "q")


def test_stencil_csv():
    s = LinearStencil.from_arrays([3, 1, 3], [1.0, 2.0, 0.5], constant=-1.5)
    assert s.to_csv() == "dof,coeff\n1,2\n3,1.5\nconst,-1.5\n"
    assert (-s).apply(np.arange(4.0)) == -(2.0 + 4.5 - 1.5)


@given(c=coeffs, seed=st.integers(0, 1000))
def test_hmm_flux_exact_on_flat_gamma(c, seed):
    m = build_mesh(generate_grid("cube", (4, 3, 3), 0.2, seed))
    A, G = hmm_matrices(m)
    grad = np.asarray(c[1:])
    u = lambda x: c[0] + x @ grad
    phi_p = u(m.gface_points)
    phi_e = u(m.edge_gauss).mean(axis=1)[m.gface_edges]
    F = np.einsum("gef,gf->ge", A, phi_p[:, None] - phi_e)
    cn = m.gface_conormal()
    exact = -m.edge_length[m.gface_edges] * (cn @ grad)
    assert np.abs(F - exact).max() <= 1e-11 * (1 + np.abs(grad).sum())
    # tangential gradient is reproduced
    g = np.einsum("gie,ge->gi", G, phi_e - phi_p[:, None])
    assert np.allclose(g, np.broadcast_to(grad * [1, 1, 0], g.shape), atol=1e-12)


def test_hmm_local_operator_properties(perturbed5, tesseroid4):
    for m in (perturbed5, tesseroid4):
        for sigma in (0, m.n_gamma // 2, m.n_gamma - 1):
            op = hmm_local_operator(m, sigma)
            assert np.allclose(op.A, op.A.T, atol=1e-14)
            assert np.linalg.eigvalsh(op.A).min() > 0
            assert np.allclose(op.fluxes(2.0, [2.0] * 4), 0.0, atol=1e-14)


def test_brackets_antisymmetric_and_divergence():
    m = build_mesh(generate_grid("cube", (6, 6, 2), 0.1, 4))
    case = get_case("cube_div")
    b = face_brackets(m, case.W)
    e = m.interior_edges
    side = lambda k: b[m.edge_faces[e, k], np.argmax(m.gface_edges[m.edge_faces[e, k]] == e[:, None], axis=1)]
    assert np.array_equal(side(0), -side(1))
    # W = (x, y, 0) has surface divergence 2
    assert np.allclose(b.sum(axis=1), 2.0 * m.gface_area, rtol=1e-12)
    assert np.isclose(surface_div_bracket(m, 3, case.W), b[3].sum())
    assert np.isclose(advective_bracket(m, 3, 1, case.W), b[3, 1])
    # interior edges cancel, so the total equals the outflow through the rim
    # (rim edges are oriented by their only face)
    outflow = edge_brackets(m, case.W)[~m.edge_interior].sum()
    assert np.isclose(b.sum(), outflow, rtol=1e-12)


def test_upwind_stencil_picks_upwind_cell(uniform3):
    m = uniform3
    W = lambda x: np.broadcast_to([1.0, 0.0, 0.0], np.shape(x))
    sigma = int(m.cell_gface[m.cell_index[2, 2, 0]])
    for e in range(4):
        b = advective_bracket(m, sigma, e, W)
        st_ = upwind_boundary_stencil(m, sigma, e, W)
        if b > 0:
            assert st_.terms == {int(m.cell_index[2, 2, 0]): b}
        elif b < 0:
            assert list(st_.terms) == [int(m.cell_index[1, 2, 0])]
    # inflow through the rim takes the edge datum
    sigma = int(m.cell_gface[m.cell_index[1, 2, 0]])
    data = np.full(m.n_edges, 3.0)
    for e in range(4):
        b = advective_bracket(m, sigma, e, W)
        if b < 0:
            st_ = upwind_boundary_stencil(m, sigma, e, W, data)
            assert st_.terms == {} and np.isclose(st_.constant, 3.0 * b)


@given(c=coeffs, seed=st.integers(0, 1000), vx=st.floats(-2, 2), vy=st.floats(-2, 2))
def test_splitting_flux_exact_for_affine(c, seed, vx, vy):
    m = build_mesh(generate_grid("cube", (3, 3, 3), 0.2, seed))
    case = affine_case(c[0], c[1:], V=lambda x: np.broadcast_to([vx, vy, -1.0], np.shape(x)))
    S, const = splitting_flux_matrix(m, case.V_normalized, case.g)
    F = S @ case.exact(m.points) + const
    exact = -m.gface_ntilde @ np.asarray(c[1:])
    assert np.abs(F - exact).max() <= 1e-11 * (1 + np.abs(c[1:]).sum())
    st_ = splitting_boundary_stencil(m, 2, case.V_normalized, case.g, case.exact(m.points))
    assert np.isclose(st_.apply(case.exact(m.cell_points)), exact[2], atol=1e-12)


def test_splitting_breakdown_for_tangential_direction(uniform3):
    case = get_case("cube_const")
    tangent = lambda x: np.broadcast_to([1.0, 0.0, 0.0], np.shape(x))
    with pytest.raises(SplittingBreakdown, match="splitting breakdown on Gamma face 0"):
        splitting_flux_matrix(uniform3, tangent, case.g)
