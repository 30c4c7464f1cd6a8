import itertools
import math

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given, strategies as st

from oblique_fv import build_mesh, generate_grid
from oblique_fv.fluxes import inner_flux_matrix
from oblique_fv.regularity import (regularity_report, reg_mesh, reg_mesh_gamma, reg_mesh_omega,
                                   varrho_face_by_definition, varrho_faces, varrho_mesh_omega)

# closed forms on the unperturbed 5x5x5 cube (h = 1/6):
#   reg_M:  3*sqrt(3) from a 1.5h corner cube seen from its cell point,
#           sqrt(14)/3 from the diameter ratio of a Gamma cell and its rim neighbour
#   reg_Omega: sqrt(4.8) from a rim vertex, 5/3 from a 1.5h x 0.5h face
#   reg_Gamma: 3*sqrt(2) from a rim Gamma face, sqrt(1.625) from the rim diameter ratio
UNIFORM5 = {
    "reg_mesh": 3 * math.sqrt(3) + math.sqrt(14) / 3,
    "reg_mesh_omega": math.sqrt(4.8) + 5 / 3,
    "reg_mesh_gamma": 3 * math.sqrt(2) + math.sqrt(1.625),
}


def _lattice_axis(n, gamma_axis):
    """Cell point coordinates and cell intervals along one axis of the uniform lattice."""
    h = 1.0 / (n + 1)
    pts = [i * h for i in (range(0, n + 1) if gamma_axis else range(1, n + 1))]
    bounds = [0.0] + [(a + b) / 2 for a, b in zip(pts, pts[1:])] + [1.0]
    return pts, list(zip(bounds[:-1], bounds[1:]))


def _lattice_stencil(x, pts):
    """Distinct lattice coordinates averaged into the vertex coordinate x."""
    if x in (0.0, 1.0):
        return [x]
    for a, b in zip(pts, pts[1:]):
        if math.isclose((a + b) / 2, x):
            return [a, b]
    raise AssertionError(x)


def _box_oracle(n):
    """Regularity factors of the unperturbed cube, computed from axis-aligned boxes."""
    axes = [_lattice_axis(n, False), _lattice_axis(n, False), _lattice_axis(n, True)]
    shape = tuple(len(a[0]) for a in axes)
    diam = lambda lo, hi: math.dist(lo, hi)
    first_m, second_m, first_o, second_o = [], [], [], []
    for idx in itertools.product(*map(range, shape)):
        x = [axes[a][0][idx[a]] for a in range(3)]
        lo = [axes[a][1][idx[a]][0] for a in range(3)]
        hi = [axes[a][1][idx[a]][1] for a in range(3)]
        for a, side in itertools.product(range(3), (0, 1)):
            if a == 2 and side == 0 and idx[2] == 0:
                continue  # Gamma face
            plane = hi[a] if side else lo[a]
            first_m.append(diam(lo, hi) / abs(plane - x[a]))
            nb = list(idx)
            nb[a] += 1 if side else -1
            if 0 <= nb[a] < shape[a]:
                nlo = [axes[b][1][nb[b]][0] for b in range(3)]
                nhi = [axes[b][1][nb[b]][1] for b in range(3)]
                r = diam(lo, hi) / diam(nlo, nhi)
                second_m.append(max(r, 1 / r))
            # face rectangle and its vertices
            t = [b for b in range(3) if b != a]
            wa, wb = hi[t[0]] - lo[t[0]], hi[t[1]] - lo[t[1]]
            dg = math.hypot(wa, wb)
            second_o.append(dg * dg / (2 * wa * wb))  # 1 / sin of the diagonal angle
            for ca, cb in itertools.product((lo[t[0]], hi[t[0]]), (lo[t[1]], hi[t[1]])):
                v = [0.0] * 3
                v[a], v[t[0]], v[t[1]] = plane, ca, cb
                sten = itertools.product(*(_lattice_stencil(v[b], axes[b][0]) for b in range(3)))
                norm = math.sqrt(sum(math.dist(v, s) ** 2 for s in sten))
                first_o.append(norm / dg)
    # Gamma faces: rectangles [lo_x, hi_x] x [lo_y, hi_y] at z = 0
    first_g, second_g = [], []
    for i, j in itertools.product(range(n), range(n)):
        (x0, x1), (y0, y1) = axes[0][1][i], axes[1][1][j]
        px, py = axes[0][0][i], axes[1][0][j]
        d = math.hypot(x1 - x0, y1 - y0)
        first_g += [d / (px - x0), d / (x1 - px), d / (py - y0), d / (y1 - py)]
        for ni, nj in ((i + 1, j), (i, j + 1)):
            if ni < n and nj < n:
                (a0, a1), (b0, b1) = axes[0][1][ni], axes[1][1][nj]
                r = d / math.hypot(a1 - a0, b1 - b0)
                second_g.append(max(r, 1 / r))
    return {"reg_mesh": max(first_m) + max(second_m),
            "reg_mesh_omega": max(first_o) + max(second_o),
            "reg_mesh_gamma": max(first_g) + max(second_g)}


def test_uniform_closed_forms(uniform5):
    got = {"reg_mesh": reg_mesh(uniform5), "reg_mesh_omega": reg_mesh_omega(uniform5),
           "reg_mesh_gamma": reg_mesh_gamma(uniform5)}
    for key, value in UNIFORM5.items():
        assert math.isclose(got[key], value, rel_tol=1e-12), key


@pytest.mark.parametrize("n", [3, 5, 6])
def test_uniform_against_box_oracle(n):
    m = build_mesh(generate_grid("cube", (n, n, n)))
    ref = _box_oracle(n)
    assert math.isclose(reg_mesh(m), ref["reg_mesh"], rel_tol=1e-12)
    assert math.isclose(reg_mesh_omega(m), ref["reg_mesh_omega"], rel_tol=1e-12)
    assert math.isclose(reg_mesh_gamma(m), ref["reg_mesh_gamma"], rel_tol=1e-12)


def test_box_oracle_reproduces_closed_forms():
    ref = _box_oracle(5)
    for key, value in UNIFORM5.items():
        assert math.isclose(ref[key], value, rel_tol=1e-13), key


def test_uniform_varrho_is_one(uniform3, uniform5):
    for m in (uniform3, uniform5):
        assert varrho_mesh_omega(m) == 1.0
        assert np.allclose(varrho_faces(m), 1.0, rtol=0, atol=1e-14)


@given(seed=st.integers(0, 10**6), amp=st.floats(0.0, 0.3))
def test_lower_bounds(seed, amp):
    m = build_mesh(generate_grid("cube", (3, 3, 3), amp, seed))
    assert reg_mesh(m) >= 2.0
    assert reg_mesh_omega(m) >= 1.0
    assert reg_mesh_gamma(m) >= 2.0


@pytest.mark.parametrize("domain,amp,seed", [("cube", 0.3, 7), ("cube", 0.15, 42),
                                              ("tesseroid", 0.2, 3)])
def test_traversal_matches_set_definition(domain, amp, seed):
    m = build_mesh(generate_grid(domain, (4, 3, 3), amp, seed))
    rho = varrho_faces(m)
    for f in range(0, m.n_faces, 3):
        assert abs(varrho_face_by_definition(m, f) - rho[f]) <= 1e-12


def test_unit_weights_match_unweighted(perturbed5):
    w = np.ones(perturbed5.n_faces)
    assert varrho_mesh_omega(perturbed5, w) == varrho_mesh_omega(perturbed5)
    with pytest.raises(ValueError):
        varrho_mesh_omega(perturbed5, np.zeros(perturbed5.n_faces))


def test_weights_move_the_bracket(perturbed5):
    base = varrho_faces(perturbed5)
    w = np.full(perturbed5.n_faces, 2.0)
    # larger weights shrink the own cross term and enlarge the deposits
    assert not np.array_equal(varrho_faces(perturbed5, w), base)


def test_perturbed_nine_cube_ranges():
    m = build_mesh(generate_grid("cube", (9, 9, 9), 0.15, 42))
    rep = regularity_report(m)
    assert 7 <= rep.reg_mesh <= 9
    assert 5 <= rep.reg_mesh_gamma <= 8
    assert 0.1 < rep.varrho_mesh_omega < 0.8


def test_perturbed_nine_cube_reg_omega_band():
    # published band; the 1.5h x 0.5h rim faces alone contribute 5/3 here
    m = build_mesh(generate_grid("cube", (9, 9, 9), 0.15, 42))
    assert 3 <= reg_mesh_omega(m) <= 4


def test_varrho_decreases_with_refinement():
    values = [varrho_mesh_omega(build_mesh(generate_grid("cube", (n, n, n), 0.15, 42)))
              for n in (3, 7, 15)]
    assert all(v > 0 for v in values)
    assert values[0] > values[1] > values[2]


def test_report_offenders(perturbed5):
    rep = regularity_report(perturbed5)
    assert rep.worst["varrho"].value == rep.varrho_mesh_omega
    assert math.isclose(varrho_faces(perturbed5)[rep.worst["varrho"].face], rep.varrho_mesh_omega)
    assert list(rep.row()) == ["h", "reg_mesh", "reg_mesh_omega", "reg_mesh_gamma", "varrho"]


def _inner_energy_eigenvalue(m):
    """Smallest generalized eigenvalue of the inner-flux energy against |.|_{V_h,Omega}^2."""
    F = inner_flux_matrix(m).tocsc()[:, m.cell_pid]
    rows = np.arange(m.n_faces)
    inner = m.face_q >= 0
    B = sp.csr_matrix((np.ones(m.n_faces), (rows, m.face_p)), shape=(m.n_faces, m.n_cells))
    B = B - sp.csr_matrix((np.ones(inner.sum()), (rows[inner], m.face_q[inner])),
                          shape=(m.n_faces, m.n_cells))
    E = (B.T @ F).toarray()
    G = (B.T @ sp.diags(m.face_area / m.face_d) @ B).toarray()
    return sla.eigh(0.5 * (E + E.T), G, eigvals_only=True)[0]


@pytest.mark.parametrize("amp,seed", [(0.0, 0), (0.15, 42), (0.25, 9)])
def test_coercivity_bound(amp, seed):
    m = build_mesh(generate_grid("cube", (4, 4, 4), amp, seed))
    rho = varrho_mesh_omega(m)
    lam = _inner_energy_eigenvalue(m)
    assert lam >= rho - 1e-12
    if amp == 0.0:
        assert math.isclose(lam, 1.0, rel_tol=1e-12)
