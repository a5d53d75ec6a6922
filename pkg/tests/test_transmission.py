import dataclasses
import math

import numpy as np
import pytest

from treedisk.calculus import constant_function
from treedisk.circle import FourierFn, MultiscaleDecomposition, PiecewiseConstantFn
from treedisk.errors import (
    Alpha1Zero,
    DepthBelowChartLevel,
    InsufficientLevels,
    SingularInterfaceOperator,
)
from treedisk.exterior import RadialSource
from treedisk.transmission import (
    TransmissionConfig,
    assemble_system,
    convergence_study,
    plasmonic_pencil,
    reconstruct,
    root_bump,
    solve_interface,
    solve_transmission,
)
from treedisk.tree import TreeParams, build_condensed

REF = TreeParams(p=2, ell=0.5, omega=0.4, L0=1.0, omega0=1.0)


def _ext_source(k=1, amp=1.0):
    terms = [(k, {0: amp})]
    if k != 0:
        terms.append((-k, {0: amp}))
    return RadialSource(R=1.0, r_max=2.0, terms=terms)


def test_zero_sources_give_zero_trace():
    sol = solve_transmission(TransmissionConfig(params=REF, level=3, alpha1=1.0, alpha0=0.3))
    assert np.abs(sol.g.values).max() == 0.0
    assert sol.trace_defect == 0.0
    assert sol.flux_residual == 0.0


def test_interface_matrix_composition():
    cfg = TransmissionConfig(params=REF, level=3, alpha1=2.0 + 1.0j, alpha0=0.25)
    sy = assemble_system(cfg)
    mu = sy.decomp.cell_measure(3)
    expected = -sy.C + (2.0 + 1.0j) * sy.D + 0.25 * mu * np.eye(8)
    assert np.abs(sy.M - expected).max() < 1e-14
    # D is the condensed tree map: row sums carry the radial flux per cell
    assert np.abs(sy.D.sum(axis=1) - 0.375 / 8).max() < 1e-12


def test_tree_dtn_block_closed_form_at_level_one():
    # one junction below the root edge: each branch collapses to the series
    # admittance Y = omega0*omega*(1-r)/(L0*ell), the root edge to Y0 = 1,
    # giving D = Y I - Y^2/(Y0 + 2Y) J
    sy = assemble_system(TransmissionConfig(params=REF, level=1, alpha1=1.0, alpha0=0.0))
    Y = 0.4 * (1.0 - 0.625) / 0.5
    expected = Y * np.eye(2) - Y**2 / (1.0 + 2.0 * Y) * np.ones((2, 2))
    assert np.abs(sy.D - expected).max() < 1e-13


def test_rhs_superposition():
    base = dict(params=REF, level=3, alpha1=2.0, alpha0=0.5)
    h_ext = assemble_system(TransmissionConfig(**base, exterior_source=_ext_source(2, 0.3))).h
    h_root = assemble_system(TransmissionConfig(**base, c_root=0.8)).h
    h_both = assemble_system(TransmissionConfig(**base, exterior_source=_ext_source(2, 0.3),
                                                c_root=0.8)).h
    assert np.abs(h_ext + h_root - h_both).max() < 1e-12
    h_scaled = assemble_system(TransmissionConfig(**base, c_root=1.6)).h
    assert np.abs(h_scaled - 2.0 * h_root).max() < 1e-12


def test_constant_equilibrium_recovered():
    # alpha0 = 0 with only a root value c: u_T = c and u_Omega = c solve the
    # problem exactly, so the interface trace must be the constant c
    cfg = TransmissionConfig(params=REF, level=4, alpha1=2.0, alpha0=0.0, c_root=2.5)
    sol = solve_transmission(cfg)
    assert np.abs(sol.g.values - 2.5).max() < 1e-10
    assert sol.flux_residual < 1e-10
    assert sol.u_tree.root_value == pytest.approx(2.5, abs=1e-10)


def test_lift_choice_does_not_change_the_trace():
    # replacing the quadratic root bump by a cubic one with the same root
    # value and vanishing boundary data must leave h and g unchanged
    cfg_a = TransmissionConfig(params=REF, level=3, alpha1=1.5, alpha0=0.4, c_root=1.0)
    sy_a = assemble_system(cfg_a)
    tree = build_condensed(REF, cfg_a.source_depth)
    cubic = constant_function(tree, 0.0)
    l0 = tree.lengths[0][0]
    # -Lap((1 - t/l0)^3) = -6/l0^2 + 6 t/l0^3
    cubic.coeffs[0] = np.array([[-6.0 / l0**2, 6.0 / l0**3]])
    cfg_b = TransmissionConfig(params=REF, level=3, alpha1=1.5, alpha0=0.4,
                               tree_source=cubic, source_depth=cfg_a.source_depth)
    sy_b = assemble_system(cfg_b)
    assert np.abs(sy_a.h - sy_b.h).max() < 1e-12
    g_a = solve_interface(sy_a)
    g_b = solve_interface(sy_b)
    assert np.abs(g_a.values - g_b.values).max() < 1e-12


def test_root_bump_properties():
    tree = build_condensed(REF, 4)
    u1 = root_bump(tree)
    assert u1.root_value == 1.0
    assert np.abs(u1.leaf_values()).max() == 0.0
    from treedisk.calculus import leaf_flux

    assert np.abs(leaf_flux(u1)).max() == 0.0


def test_flux_residual_within_discretization_defect():
    cfg = TransmissionConfig(params=REF, level=3, alpha1=2.0, alpha0=0.5, c_root=1.5,
                             exterior_source=_ext_source(1))
    cfg.tree_source = constant_function(build_condensed(REF, cfg.source_depth), 0.7)
    sol = solve_transmission(cfg)
    assert sol.trace_defect <= 1e-10
    assert sol.flux_residual <= sol.discretization_defect + 1e-10
    assert sol.u_tree.root_value == pytest.approx(1.5, abs=1e-10)


def test_case_ii_purely_imaginary_coupling_solves():
    cfg = TransmissionConfig(params=REF, level=4, alpha1=1j, alpha0=0.0,
                             exterior_source=_ext_source(2, 0.4))
    sol = solve_transmission(cfg)
    assert sol.meta["solvability"] == {"case_i": False, "case_ii": True}
    assert sol.flux_residual < 1e-10
    assert np.isfinite(sol.condition_estimate)


def test_hermitian_part_positive_for_case_i_data():
    rng = np.random.default_rng(5)
    for _ in range(5):
        a1 = rng.uniform(0.2, 3.0) + 1j * rng.uniform(0.0, 2.0)
        a0 = rng.uniform(0.0, 2.0, size=16)
        sy = assemble_system(TransmissionConfig(params=REF, level=4, alpha1=a1, alpha0=a0))
        assert sy.config.solvability()["case_i"]
        assert sy.hermitian_min_eig() > 0.0


def test_manufactured_smooth_datum_converges():
    cfg = TransmissionConfig(params=REF, level=3, alpha1=1.0, alpha0=0.3)
    gstar = FourierFn.from_modes(1.0, {1: 0.5, -1: 0.5})
    st = convergence_study(cfg, [3, 4, 5, 6, 7], manufactured=gstar)
    assert st.rho_hat > 0.3
    assert all(b < a for a, b in zip(st.err_h12, st.err_h12[1:]))
    assert all(b < a for a, b in zip(st.err_l2, st.err_l2[1:]))
    assert len(st.rate_running) == len(st.levels)
    assert st.dof == [8, 16, 32, 64, 128]
    assert st.reference == "manufactured"
    assert st.rho_admissible_max == pytest.approx((1 - 2 * REF.sigma) / 2, abs=1e-12)


def test_piecewise_constant_datum_recovered_exactly():
    # a datum already in V_3 is resolved by every level >= 3
    dec = MultiscaleDecomposition(R=1.0, p=2, n_max=10)
    rng = np.random.default_rng(7)
    v3 = PiecewiseConstantFn(dec, 3, rng.normal(size=8))
    cfg = TransmissionConfig(params=REF, level=3, alpha1=1.0, alpha0=0.3)
    st = convergence_study(cfg, [3, 4, 5, 6], manufactured=v3)
    assert max(st.err_h12) < 1e-9
    assert max(st.err_l2) < 1e-9


def test_self_reference_study_with_exterior_source():
    cfg = TransmissionConfig(params=REF, level=3, alpha1=1.0, alpha0=0.3,
                             exterior_source=_ext_source(1))
    st = convergence_study(cfg, [3, 4, 5, 6], manufactured=None)
    assert st.reference == "finest level"
    assert st.err_h12[-1] == 0.0
    assert all(b < a for a, b in zip(st.err_h12[:-1], st.err_h12[1:-1]))
    assert st.rho_hat > 0.3
    assert len(st.rate_running) == len(st.levels)
    assert math.isnan(st.rate_running[-1])


def test_study_needs_enough_levels():
    cfg = TransmissionConfig(params=REF, level=3, alpha1=1.0, alpha0=0.3)
    gstar = FourierFn.from_modes(1.0, {1: 0.5, -1: 0.5})
    with pytest.raises(InsufficientLevels):
        convergence_study(cfg, [3], manufactured=gstar)
    with pytest.raises(InsufficientLevels):
        convergence_study(cfg, [3, 4], manufactured=None)


def test_pencil_level_one_closed_form():
    # both matrices diagonalize on [1,1], [1,-1]; the nonzero eigenvalue is
    # (C00-C01)/(D00-D01) with C00-C01 = -(8/pi) sum_{odd k<=31} 1/k at the
    # default cutoff M=32 and D00-D01 = Y = 0.3
    sy = assemble_system(TransmissionConfig(params=REF, level=1, alpha1=1.0, alpha0=0.0))
    evs = plasmonic_pencil(sy.C, sy.D, 2)
    harmonic = sum(1.0 / k for k in range(1, 32, 2))
    expected = -(8.0 / math.pi) * harmonic / 0.3
    assert abs(evs[0]) < 1e-12
    assert evs[1].real == pytest.approx(expected, rel=1e-12)
    assert abs(evs[1].imag) < 1e-12


def test_pencil_structure_across_levels():
    leading = []
    for n in [2, 3, 4, 5]:
        sy = assemble_system(TransmissionConfig(params=REF, level=n, alpha1=1.0, alpha0=0.0))
        evs = plasmonic_pencil(sy.C, sy.D, count=2**n)
        assert abs(evs[0]) < 1e-10
        ones = np.ones(2**n)
        assert np.abs(sy.C @ ones).max() < 1e-10
        for z in evs[1:]:
            assert abs(z.imag) <= 1e-8
            assert z.real < 0.0
        leading.append(evs[1].real)
    # the leading nonzero eigenvalue converges geometrically at ratio 1/2
    diffs = [abs(a - b) for a, b in zip(leading, leading[1:])]
    ratios = [d2 / d1 for d1, d2 in zip(diffs, diffs[1:])]
    for q in ratios:
        assert q == pytest.approx(0.5, abs=0.15)


def test_pencil_scales_inversely_with_tree_weight():
    scaled = dataclasses.replace(REF, omega0=3.0)
    sy1 = assemble_system(TransmissionConfig(params=REF, level=3, alpha1=1.0, alpha0=0.0))
    sy3 = assemble_system(TransmissionConfig(params=scaled, level=3, alpha1=1.0, alpha0=0.0))
    ev1 = plasmonic_pencil(sy1.C, sy1.D, 8)
    ev3 = plasmonic_pencil(sy3.C, sy3.D, 8)
    for a, b in zip(ev1[1:], ev3[1:]):
        assert b.real == pytest.approx(a.real / 3.0, rel=1e-10)


def test_singular_at_pencil_eigenvalue():
    sy = assemble_system(TransmissionConfig(params=REF, level=4, alpha1=1.0, alpha0=0.0))
    lam = plasmonic_pencil(sy.C, sy.D, 3)[1]
    bad = assemble_system(TransmissionConfig(params=REF, level=4, alpha1=lam, alpha0=0.0,
                                             exterior_source=_ext_source(1)))
    with pytest.raises(SingularInterfaceOperator):
        solve_interface(bad)


def test_pencil_shape_mismatch_rejected():
    sy3 = assemble_system(TransmissionConfig(params=REF, level=3, alpha1=1.0, alpha0=0.0))
    sy2 = assemble_system(TransmissionConfig(params=REF, level=2, alpha1=1.0, alpha0=0.0))
    with pytest.raises(ValueError):
        plasmonic_pencil(sy3.C, sy2.D)


def test_config_validation():
    with pytest.raises(Alpha1Zero):
        TransmissionConfig(params=REF, level=3, alpha1=0.0, alpha0=0.3)
    bumpy = dataclasses.replace(REF, N1=2, length_overrides={(0, 0): 0.9})
    with pytest.raises(DepthBelowChartLevel):
        TransmissionConfig(params=bumpy, level=1, alpha1=1.0)
    with pytest.raises(DepthBelowChartLevel):
        TransmissionConfig(params=REF, level=4, alpha1=1.0, source_depth=3)
    with pytest.raises(ValueError):
        TransmissionConfig(params=REF, level=3, alpha1=1.0, alpha0=np.ones(5)).alpha0_cells()


def test_tree_source_on_wrong_tree_rejected():
    shallow = constant_function(build_condensed(REF, 4), 1.0)
    cfg = TransmissionConfig(params=REF, level=3, alpha1=1.0, alpha0=0.3,
                             tree_source=shallow, source_depth=6)
    with pytest.raises(DepthBelowChartLevel):
        assemble_system(cfg)


def test_reconstruct_matches_band_limited_exterior_trace():
    cfg = TransmissionConfig(params=REF, level=3, alpha1=1.0, alpha0=0.3,
                             exterior_source=_ext_source(1))
    sy = assemble_system(cfg)
    g = solve_interface(sy)
    sol = reconstruct(cfg, g, system=sy)
    assert sol.trace_defect <= 1e-10
    assert sol.condition_estimate == sy.condition_estimate
    r = np.linspace(1.0, 3.0, 7)
    vals = sol.u_ext.eval(r, np.zeros_like(r))
    assert np.all(np.isfinite(vals))
