"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The lines are collected in ``conftest.ACCEPTANCE_LINES`` and printed in the
terminal summary.  Bands and tolerances are the published ones; a criterion
that misses its band fails.
"""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oblique_fv import (assemble, build_mesh, builtin_cases, default_R, generate_grid, get_case,
                        seminorms, solve, solve_dense_oracle)
from oblique_fv.analysis import eoc
from oblique_fv.cases import affine_case
from oblique_fv.config import ExperimentConfig
from oblique_fv.fields import random_field
from oblique_fv.fluxes import (face_brackets, hmm_matrices, inner_flux_matrix,
                               inner_flux_stencil, splitting_flux_matrix)
from oblique_fv.grid import Domain
from oblique_fv.regularity import regularity_report, varrho_mesh_omega
from oblique_fv.study import run_study

CUBE_LEVELS = [(3, 3, 3), (7, 7, 7), (15, 15, 15), (31, 31, 31)]
TESSEROID_LEVELS = [(3, 3, 3), (7, 7, 7), (15, 15, 15)]


def record(n: int, checks: list[tuple[str, bool]], seconds: float | None = None) -> None:
    ok = all(c for _, c in checks)
    detail = "; ".join(f"{text} [{'ok' if c else 'MISS'}]" for text, c in checks)
    if seconds is not None:
        detail += f"; {seconds:.1f} s"
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def in_band(name: str, value, lo: float, hi: float) -> tuple[str, bool]:
    if value is None:
        return f"{name} unavailable", False
    return f"{name} {value:.3f} in [{lo}, {hi}]", lo <= value <= hi


_studies: dict = {}


def study(case: str, scheme: str, levels, amplitude: float = 0.15):
    key = (case, scheme, tuple(levels), amplitude)
    if key not in _studies:
        t0 = time.perf_counter()
        cfg = ExperimentConfig(domain=get_case(case).domain.value, case=case, scheme=scheme,
                               levels=list(levels), amplitude=amplitude, seed=42)
        res = run_study(cfg, write=False)
        _studies[key] = (res, time.perf_counter() - t0)
    return _studies[key]


def last_rate(res, norm: str):
    reps = [lv.report for lv in res.levels[-2:]]
    if len(reps) < 2 or any(r is None for r in reps):
        return None
    return eoc(reps, norm)[1]


# --------------------------------------------------------------------- 1
def test_criterion_1_affine_exactness():
    t0 = time.perf_counter()
    m = build_mesh(generate_grid("cube", (5, 5, 5), 0.15, 42))
    F = inner_flux_matrix(m)
    A, _ = hmm_matrices(m)
    cn = m.gface_conormal()
    rng = np.random.default_rng(1)
    worst = {"inner": 0.0, "hmm": 0.0, "splitting": 0.0}
    for _ in range(10):
        c0, grad = rng.normal(), rng.normal(size=3)
        u = lambda x: c0 + x @ grad
        scale = np.linalg.norm(grad)
        exact = -m.face_ntilde @ grad
        worst["inner"] = max(worst["inner"],
                             (np.abs(F @ u(m.points) - exact) / (scale * m.face_area)).max())
        phi_p = u(m.gface_points)
        phi_e = u(m.edge_gauss).mean(axis=1)[m.gface_edges]
        hmm = np.einsum("gef,gf->ge", A, phi_p[:, None] - phi_e)
        length = m.edge_length[m.gface_edges]
        worst["hmm"] = max(worst["hmm"],
                           (np.abs(hmm + length * (cn @ grad)) / (scale * length)).max())
        V = rng.normal(size=3)
        V[2] = -abs(V[2]) - 0.5
        case = affine_case(c0, grad, V=lambda x, V=V: np.broadcast_to(V, np.shape(x)))
        S, const = splitting_flux_matrix(m, case.V_normalized, case.g)
        gamma_exact = -m.gface_ntilde @ grad
        worst["splitting"] = max(worst["splitting"], (np.abs(S @ u(m.points) + const - gamma_exact)
                                                      / (scale * m.gface_area)).max())
    dt = time.perf_counter() - t0
    checks = [(f"{k} flux rel. error {v:.1e} <= 1e-11", v <= 1e-11) for k, v in worst.items()]
    checks.append((f"runtime {dt:.2f} s < 5 s", dt < 5))
    record(1, checks)


# --------------------------------------------------------------------- 2
def test_criterion_2_conservativity():
    t0 = time.perf_counter()
    m = build_mesh(generate_grid("cube", (7, 7, 7), 0.15, 42))
    F = inner_flux_matrix(m)
    negate = True
    for f in m.interior_faces:
        sp_ = inner_flux_stencil(m, int(f), "p", matrix=F)
        sq = inner_flux_stencil(m, int(f), "q", matrix=F)
        negate &= (sp_.terms.keys() == sq.terms.keys()
                   and all(sp_.terms[k] == -sq.terms[k] for k in sp_.terms))
    case = get_case("cube_const")
    R = default_R(m, case)
    sol, _ = solve(assemble(m, case, "central", R), tol=1e-12)
    M, _ = hmm_matrices(m)
    b = face_brackets(m, case.W)
    phi_e = sol.edges[m.gface_edges]
    flux = np.einsum("gef,gf->ge", M, sol.cells[m.gface_cell][:, None] - phi_e)
    balance = np.zeros(m.n_edges)
    np.add.at(balance, m.gface_edges.ravel(), (-phi_e * b - R * m.h_gamma * flux).ravel())
    worst = np.abs(balance[m.edge_interior]).max()
    dt = time.perf_counter() - t0
    record(2, [("inner stencils negate exactly", bool(negate)),
               (f"edge rows {worst:.1e} <= 1e-9", worst <= 1e-9),
               (f"runtime {dt:.2f} s < 10 s", dt < 10)])


# ----------------------------------------------------------------- 3-5
def test_criterion_3_central_cube_eoc():
    res, dt = study("cube_const", "central", CUBE_LEVELS)
    record(3, [in_band("Vh EOC", last_rate(res, "Vh"), 0.85, 1.15),
               in_band("L2_Omega EOC", last_rate(res, "L2_Omega"), 0.85, 1.15),
               (f"runtime {dt:.0f} s <= 300 s", dt <= 300)])


def test_criterion_4_splitting_cube_eoc():
    res, _ = study("cube_const", "splitting", CUBE_LEVELS)
    record(4, [in_band("L2_Omega EOC", last_rate(res, "L2_Omega"), 1.7, 2.3),
               in_band("Vh_Omega EOC", last_rate(res, "Vh_Omega"), 0.9, 1.5)])


def test_criterion_5_upwind_cube_eoc():
    res, _ = study("cube_const", "upwind", CUBE_LEVELS)
    record(5, [in_band("L2_Omega EOC", last_rate(res, "L2_Omega"), 0.85, 1.2),
               in_band("Vh_Omega EOC", last_rate(res, "Vh_Omega"), 0.45, 0.9)])


# --------------------------------------------------------------------- 6
def test_criterion_6_tesseroid_eoc():
    res, dt = study("tesseroid", "central", TESSEROID_LEVELS)
    record(6, [in_band("Vh EOC", last_rate(res, "Vh"), 0.9, 1.3),
               (f"runtime {dt:.0f} s <= 300 s", dt <= 300)])


# --------------------------------------------------------------------- 7
def test_criterion_7_regularity():
    reps = [regularity_report(build_mesh(generate_grid("cube", d, 0.15, 42))) for d in CUBE_LEVELS]
    col = lambda k: [r.row()[k] for r in reps]
    rho = col("varrho")
    fmt = lambda xs: ", ".join(f"{x:.3f}" for x in xs)
    uniform = varrho_mesh_omega(build_mesh(generate_grid("cube", (7, 7, 7))))
    record(7, [
        (f"reg_M [{fmt(col('reg_mesh'))}] in [6, 10]", all(6 <= x <= 10 for x in col("reg_mesh"))),
        (f"reg_Omega [{fmt(col('reg_mesh_omega'))}] in [2.5, 4.5]",
         all(2.5 <= x <= 4.5 for x in col("reg_mesh_omega"))),
        (f"reg_Gamma [{fmt(col('reg_mesh_gamma'))}] in [4, 8]",
         all(4 <= x <= 8 for x in col("reg_mesh_gamma"))),
        (f"varrho [{fmt(rho)}] positive, decreasing",
         all(x > 0 for x in rho) and all(a > b for a, b in zip(rho, rho[1:]))),
        (f"uniform varrho {uniform!r} == 1", uniform == 1.0),
    ])


# --------------------------------------------------------------------- 8
def test_criterion_8_coercivity_probe():
    t0 = time.perf_counter()
    m = build_mesh(generate_grid("cube", (5, 5, 5), 0.15, 42))
    rho = varrho_mesh_omega(m)
    rng = np.random.default_rng(8)
    cube_cases = [c for c in builtin_cases() if c.domain == Domain.CUBE]
    checks = []
    for case in cube_cases:
        system = assemble(m, case, "central", default_R(m, case))
        A = system.matrix
        values, ratios = [], []
        for _ in range(100):
            phi = random_field(m, rng)
            x = system.dofmap.to_vector(phi)
            a = float(x @ (A @ x))
            values.append(a)
            ratios.append(a / seminorms(m, phi).Vh_Omega ** 2)
        checks.append((f"{case.name} min a_h {min(values):.3e} > 0", min(values) > 0))
        if case.name == "cube_neumann":  # W = 0
            checks.append((f"{case.name} min a_h/|phi|^2 {min(ratios):.3f} >= 0.9*varrho "
                           f"{0.9 * rho:.3f}", min(ratios) >= 0.9 * rho))
    dt = time.perf_counter() - t0
    checks.append((f"runtime {dt:.1f} s < 30 s", dt < 30))
    record(8, checks)


# --------------------------------------------------------------------- 9
def test_criterion_9_dense_oracle():
    m = build_mesh(generate_grid("cube", (4, 4, 4), 0.15, 42))
    case = get_case("cube_const")
    checks = []
    for scheme in ("central", "upwind", "splitting"):
        system = assemble(m, case, scheme)
        it, _ = solve(system, tol=1e-13)
        lu = solve_dense_oracle(system)
        diff = np.abs(it.cells - lu.cells).max()
        if scheme == "central":
            diff = max(diff, np.abs(it.edges - lu.edges).max())
        checks.append((f"{scheme} max diff {diff:.1e} <= 1e-8", diff <= 1e-8))
    record(9, checks)


# -------------------------------------------------------------------- 10
def test_criterion_10_tangential_field():
    split, _ = study("cube_tangential", "splitting", CUBE_LEVELS)
    central, _ = study("cube_tangential", "central", CUBE_LEVELS)
    upwind, _ = study("cube_tangential", "upwind", CUBE_LEVELS)
    failed = [lv for lv in split.levels if not lv.ok]
    diag = ", ".join(f"{'x'.join(map(str, lv.dims))}: {lv.status}" for lv in failed) or "none"
    checks = [
        (f"splitting diagnostics ({diag})",
         bool(failed) and all(lv.status in ("splitting breakdown", "solver failed") for lv in failed)
         and split.exit_code == 3),
        (f"central exit {central.exit_code}, upwind exit {upwind.exit_code}",
         central.exit_code == 0 and upwind.exit_code == 0),
    ]
    vh = last_rate(central, "Vh")
    vo = last_rate(upwind, "Vh_Omega")
    checks.append((f"central Vh EOC {vh:.3f} > 0.3" if vh is not None else "central Vh EOC n/a",
                   vh is not None and vh > 0.3))
    checks.append((f"upwind Vh_Omega EOC {vo:.3f} > 0.3" if vo is not None else "upwind EOC n/a",
                   vo is not None and vo > 0.3))
    record(10, checks)


@pytest.fixture(scope="module", autouse=True)
def _clear_cache():
    yield
    _studies.clear()
