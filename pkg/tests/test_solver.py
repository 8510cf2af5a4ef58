import numpy as np
import pytest

from shallowshell import (
    Displacement,
    ForceDensity,
    Grid,
    Immersion,
    Material,
    SolverConfig,
    boundedness_certificate,
    homotopy_solve,
    linear_bending_solve,
    make_assembly,
    minimize,
    rigidity_gap,
    v_norm,
)
from shallowshell.energy import membrane_functional
from shallowshell.grid import l2_norm, random_clamped_displacement
from shallowshell.solver import pack, unpack


def test_solver_config_validation():
    SolverConfig()
    with pytest.raises(ValueError):
        SolverConfig(ls_shrink=1.0)
    with pytest.raises(ValueError):
        SolverConfig(ls_c1=0.5)
    with pytest.raises(ValueError):
        SolverConfig(memory=0)
    with pytest.raises(ValueError):
        SolverConfig(restarts=0)


def test_pack_unpack_roundtrip(grid9, rng):
    u = random_clamped_displacement(grid9, rng)
    x = pack(grid9, u)
    assert x.size == 3 * (grid9.n1 - 2) * (grid9.n2 - 2)
    v = unpack(grid9, x)
    for a, b in zip(u.components(), v.components()):
        assert np.array_equal(a, b)


def test_zero_load_returns_immediately(grid9, material):
    asm = make_assembly(grid9, Immersion("plate"), material, ForceDensity.zero(grid9))
    u, diag = minimize(asm, Displacement.zeros(grid9), SolverConfig())
    assert diag.iterations == 0 and diag.converged
    assert v_norm(grid9, u) == 0.0


def test_minimize_requires_clamped_start(grid9, material):
    asm = make_assembly(grid9, Immersion("plate"), material, ForceDensity.zero(grid9))
    u0 = Displacement.zeros(grid9)
    u0.u1[0, 3] = 1.0
    with pytest.raises(ValueError, match="boundary"):
        minimize(asm, u0, SolverConfig())


def test_residual_contract_and_monotone_energy(grid17, material, general_force):
    asm = make_assembly(grid17, Immersion("paraboloid", params={"t": 0.1}),
                        material, general_force(grid17))
    cfg = SolverConfig()
    u, diag = minimize(asm, Displacement.zeros(grid17), cfg)
    assert diag.converged
    assert diag.final_residual <= cfg.grad_tol * (1.0 + asm.load_norm())
    assert asm.residual_norm(u) <= cfg.grad_tol * (1.0 + asm.load_norm()) * (1 + 1e-12)
    hist = np.asarray(diag.energy_history)
    assert hist[-1] < hist[0]
    # monotone up to the documented fp-noise allowance of the line search
    assert np.max(np.diff(hist)) <= diag.noise_floor


def test_minimize_deterministic_bitwise(grid9, material, general_force):
    asm = make_assembly(grid9, Immersion("paraboloid", params={"t": 0.1}),
                        material, general_force(grid9))
    cfg = SolverConfig(seed=3, restarts=2)
    u1, d1 = minimize(asm, Displacement.zeros(grid9), cfg)
    u2, d2 = minimize(asm, Displacement.zeros(grid9), cfg)
    for a, b in zip(u1.components(), u2.components()):
        assert np.array_equal(a, b)
    assert d1.final_energy == d2.final_energy
    assert d1.iterations == d2.iterations


def test_nonconverged_flagged(grid9, material, general_force):
    asm = make_assembly(grid9, Immersion("plate"), material, general_force(grid9))
    u, diag = minimize(asm, Displacement.zeros(grid9), SolverConfig(max_iter=3))
    assert not diag.converged
    assert diag.iterations == 3


def test_symmetric_load_gives_symmetric_solution(material):
    # constant transverse load on the unit square: the minimizer inherits
    # the y1 <-> 1-y1 reflection symmetry (u1 odd, u2/u3 even)
    grid = Grid(1.0, 1.0, 17, 17)
    asm = make_assembly(grid, Immersion("plate"), material,
                        ForceDensity.constant(grid, 0.0, 0.0, 1.0))
    u, diag = minimize(asm, Displacement.zeros(grid), SolverConfig())
    assert diag.converged
    refl = Displacement(-u.u1[::-1, :].copy(), u.u2[::-1, :].copy(), u.u3[::-1, :].copy())
    assert v_norm(grid, u - refl) <= 1e-8 * max(1.0, v_norm(grid, u))


def test_linear_regime_oracle_small():
    # thin plate, tiny transverse load: the nonlinear minimizer lands on the
    # direct linear bending solve (same stencils, independent route)
    grid = Grid(1.0, 1.0, 17, 17)
    mat = Material(1.0, 1.0, 0.02)
    force = ForceDensity.constant(grid, 0.0, 0.0, 1e-4)
    asm = make_assembly(grid, Immersion("plate"), mat, force)
    u, diag = minimize(asm, Displacement.zeros(grid), SolverConfig(memory=20))
    assert diag.converged
    u3_lin = linear_bending_solve(grid, mat, force.p3)
    rel = l2_norm(grid, u.u3 - u3_lin) / l2_norm(grid, u3_lin)
    assert rel <= 0.05


def test_linear_bending_solve_matches_clamped_plate_literature():
    # Timoshenko: clamped unit square under uniform load, w_max = alpha q/D
    # with alpha = 0.00126; the isotropic bending stiffness of this tensor
    # is D = (eps^3/3) A^{1111}
    grid = Grid(1.0, 1.0, 65, 65)
    mat = Material(1.0, 1.0, 0.1)
    u3 = linear_bending_solve(grid, mat, np.ones(grid.shape))
    D = (mat.eps**3 / 3.0) * (16.0 / 3.0)
    alpha = float(np.max(np.abs(u3)) * D)
    assert abs(alpha - 0.00126) <= 2e-5


# -- homotopy ------------------------------------------------------------------


def test_homotopy_single_plate_step(grid9, material, general_force):
    force = general_force(grid9)
    steps = homotopy_solve(
        Immersion("paraboloid", params={"t": 0.3}), [0.0], grid9, material, force,
        SolverConfig(),
    )
    assert len(steps) == 1 and steps[0].t == 0.0 and steps[0].c2_dist == 0.0
    asm = make_assembly(grid9, Immersion("plate"), material, force)
    u_direct, _ = minimize(asm, Displacement.zeros(grid9), SolverConfig())
    for a, b in zip(steps[0].u.components(), u_direct.components()):
        assert np.array_equal(a, b)


def test_homotopy_validates_parameters(grid9, material, general_force):
    imm = Immersion("paraboloid", params={"t": 0.2})
    force = general_force(grid9)
    with pytest.raises(ValueError, match="decreasing"):
        homotopy_solve(imm, [0.1, 0.2, 0.0], grid9, material, force, SolverConfig())
    with pytest.raises(ValueError, match="nonnegative"):
        homotopy_solve(imm, [0.1, -0.2], grid9, material, force, SolverConfig())


def test_homotopy_zero_force_all_zero(grid9, material):
    steps = homotopy_solve(
        Immersion("paraboloid", params={"t": 0.2}), [0.1, 0.0], grid9, material,
        ForceDensity.zero(grid9), SolverConfig(),
    )
    assert boundedness_certificate(steps) == 0.0


def test_homotopy_warm_start_not_worse_than_cold(material, general_force):
    grid = Grid(1.0, 1.0, 17, 17)
    force = general_force(grid)
    imm = Immersion("paraboloid", params={"t": 0.2})
    cfg = SolverConfig()
    steps = homotopy_solve(imm, [0.2, 0.1, 0.0], grid, material, force, cfg)
    for step in steps:
        if step.t == 0.0:
            continue
        asm = make_assembly(grid, imm.with_scale(step.t), material, force)
        _, cold = minimize(asm, Displacement.zeros(grid), cfg)
        assert step.diagnostics.final_energy <= cold.final_energy + 1e-10


def test_homotopy_records_c2_distance(grid9, material, general_force):
    steps = homotopy_solve(
        Immersion("paraboloid", params={"t": 0.2}), [0.2, 0.1, 0.0], grid9,
        material, general_force(grid9), SolverConfig(),
    )
    dists = [s.c2_dist for s in steps]
    assert dists[0] > dists[1] > dists[2] == 0.0


# -- rigidity probe ---------------------------------------------------------------


def test_rigidity_gap_positive_and_deterministic(grid9):
    cfg = SolverConfig(seed=0)
    gap1 = rigidity_gap(grid9, cfg, starts=5, max_iter=300)
    gap2 = rigidity_gap(grid9, cfg, starts=5, max_iter=300)
    assert gap1 > 0.0
    assert gap1 == gap2


def test_membrane_functional_reflection_symmetry(grid9, rng):
    u = random_clamped_displacement(grid9, rng)
    refl = Displacement(
        -u.u1[::-1, :].copy(), u.u2[::-1, :].copy(), u.u3[::-1, :].copy()
    )
    r1 = membrane_functional(grid9, u)
    r2 = membrane_functional(grid9, refl)
    assert abs(r1 - r2) <= 1e-12 * r1


def test_rigidity_descent_matches_from_reflected_start(grid9, rng):
    from shallowshell.solver import _normalize, _project_descend

    u = _normalize(grid9, random_clamped_displacement(grid9, rng))
    refl = Displacement(
        -u.u1[::-1, :].copy(), u.u2[::-1, :].copy(), u.u3[::-1, :].copy()
    )
    v1 = _project_descend(grid9, u, 400)
    v2 = _project_descend(grid9, refl, 400)
    assert abs(v1 - v2) <= 1e-8 * max(v1, 1e-30)


def test_rigidity_zero_set_trivial(grid9):
    """Vanishing flat membrane strain forces zero displacement (discretely).

    The cell-difference kernel argument: zero cell strain propagates the
    boundary zeros through the whole lattice; so R > 0 on the sphere.
    """
    d1c, d2c = grid9.cell_d1_ops
    rows = []
    for op in (d1c, d2c):
        rows.append(op.toarray())
    stacked = np.vstack(rows)
    cols = np.flatnonzero(grid9.interior.ravel())
    sv = np.linalg.svd(stacked[:, cols], compute_uv=False)
    assert sv.min() > 1e-12
