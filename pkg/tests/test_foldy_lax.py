import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tempwave.errors import CapacityError, NearSingularError
from tempwave.experiments import table2_params
from tempwave.foldy_lax import (
    FoldyLaxSystem,
    assemble,
    assemble_matrix,
    assemble_rhs,
    condition_estimate,
    foldy_lax_trace,
    nystrom_solve,
    phi,
    phi_tilde,
    reconstruct_field,
    solve,
    step_l2_norms,
)
from tempwave.model import RegimeParams, StepProfile, build_profile
from tempwave.oracle import field_at, solve_scattering, trace


def two_steps(gap, kappa=1.0, delta=1e-2):
    c = np.array([3.0, 3.0 + gap])
    return StepProfile(c, delta / 2, 1.0, 10.0, gap)


def test_kernel_prefactor():
    t, s = np.linspace(-3, 3, 7), 0.4
    np.testing.assert_array_equal(phi(t, s, 2.0), 1j / 4.0 * phi_tilde(t, s, 2.0))
    assert phi_tilde(1.0, 3.0, 1.0) == phi_tilde(3.0, 1.0, 1.0)


def test_single_step_matrix():
    p = RegimeParams(delta=1e-2, h=0.5, l=1.0, T=0.03)
    prof = build_profile(p)
    assert prof.n == 1
    sys = assemble_matrix(prof, p)
    assert sys.beta == pytest.approx(0.05j)
    assert sys.A_bar.shape == (1, 1) and sys.A_bar[0, 0] == 1 - sys.beta


def test_two_steps_half_wavelength_apart():
    p = RegimeParams(delta=1e-2, h=0.5)
    sys = assemble_matrix(two_steps(math.pi), p)
    assert abs(sys.A_bar[0, 1] - sys.beta) < 1e-15


def test_matrix_structure():
    p = RegimeParams(delta=1e-3, h=0.3, l=0.4)
    prof = build_profile(p)
    A = assemble_matrix(prof, p).A_bar
    assert np.array_equal(A, A.T)
    assert np.all(np.diag(A) == 1 - p.beta)
    m, j = 3, 11
    assert A[m, j] == pytest.approx(-p.beta * np.exp(1j * abs(prof.centers[m] - prof.centers[j])), abs=1e-15)


def test_capacity_gate():
    p = RegimeParams(delta=1e-3, h=0.1, l=0.9)
    prof = build_profile(p)
    with pytest.raises(CapacityError):
        assemble_matrix(prof, p, max_unknowns=1000)
    with pytest.raises(CapacityError):
        nystrom_solve(build_profile(RegimeParams(delta=1e-3, l=0.5)), p, 50, [0.0], max_unknowns=1000)


def test_rhs_exact_value():
    prof = StepProfile(np.array([0.5]), 0.05, 1.0, 1.0, 0.5)
    shifted = assemble_rhs(prof, RegimeParams(kappa=1.0)) * np.exp(-0.5j)
    # integral of exp(i t) over [-0.05, 0.05]
    assert shifted[0] == pytest.approx(0.09995833854135666, abs=1e-15)
    assert 2 * math.sin(0.05) == pytest.approx(0.09995833854135666, abs=1e-16)


@given(kappa=st.floats(0.1, 5.0), delta=st.floats(1e-5, 0.2))
def test_rhs_taylor_bound(kappa, delta):
    p = RegimeParams(kappa=kappa, delta=delta, l=1.0, T=1.0)
    prof = build_profile(p, d=max(delta, 0.05))
    d = assemble_rhs(prof, p)
    lead = delta * np.exp(1j * kappa * prof.centers)
    assert np.all(np.abs(d - lead) <= kappa**2 * delta**3 / 24 * (1 + 1e-9) + 1e-18)
    assert np.allclose(d / delta, np.exp(1j * kappa * prof.centers), atol=kappa**2 * delta**2)


def test_solve_single_step_scalar():
    p = RegimeParams(delta=1e-2, h=0.5, l=1.0, T=0.03)
    prof = build_profile(p)
    sys = solve(assemble(prof, p))
    assert abs(sys.q_tilde[0] - sys.d_tilde[0] / (1 - p.beta)) < 1e-14 * abs(sys.q_tilde[0])


def test_solve_identity_when_beta_zero():
    p = RegimeParams(C=0.0, delta=1e-2, l=0.5)
    prof = build_profile(p)
    sys = solve(assemble(prof, p))
    assert np.array_equal(sys.q_tilde, sys.d_tilde)
    assert condition_estimate(sys) == pytest.approx(1.0, abs=1e-12)


def test_two_step_ratio_closed_form():
    p = RegimeParams(delta=1e-2, h=0.5)
    b = p.beta
    for gap in (math.pi, 1.3):
        prof = two_steps(gap)
        sys = solve(assemble(prof, p))
        # 2x2 inverse by hand: q1 / q2 = exp(i k (T1 - T2)) (1 - b + b exp(2 i k gap))
        expected = np.exp(1j * (prof.centers[0] - prof.centers[1])) * (1 - b + b * np.exp(2j * gap))
        assert abs(sys.q_tilde[0] / sys.q_tilde[1] - expected) < 1e-13
    # at k * gap = pi the ratio is a pure phase
    sys = solve(assemble(two_steps(math.pi), p))
    assert abs(abs(sys.q_tilde[0] / sys.q_tilde[1]) - 1) < 1e-14


def test_near_singular_reports_index():
    A = np.eye(3, dtype=complex)
    A[2, 2] = 1e-20
    sys = FoldyLaxSystem(A, 0j, np.ones(3), np.ones((3, 3)), 1.0, d_tilde=np.ones(3, dtype=complex))
    with pytest.raises(NearSingularError) as info:
        solve(sys)
    assert info.value.index == 2


def test_condition_estimate_scalar():
    p = RegimeParams(delta=1e-2, h=0.5, l=1.0, T=0.03)
    sys = solve(assemble(build_profile(p), p))
    assert condition_estimate(sys) == pytest.approx(1 / abs(1 - p.beta), rel=1e-12)


@pytest.mark.parametrize("delta", [1e-2, 1e-3])
def test_condition_estimate_bounded(delta):
    p = table2_params(0).replace(delta=delta)
    sys = solve(assemble(build_profile(p), p))
    est = condition_estimate(sys)
    dense = np.linalg.norm(np.linalg.inv(sys.A_bar), 2)
    assert est < 10
    # power iteration approaches the norm from below
    assert 0.95 * dense <= est <= dense * (1 + 1e-12)


def test_reconstruct_zero_charges():
    p = RegimeParams(delta=1e-2, l=0.5)
    prof = build_profile(p)
    sys = solve(assemble(prof, p))
    from dataclasses import replace
    empty = replace(sys, q_tilde=np.zeros(prof.n, dtype=complex))
    t = np.linspace(-3, 13, 9)
    np.testing.assert_array_equal(reconstruct_field(empty, prof, p, t), np.exp(1j * t))


def test_scattered_field_is_left_moving_below_steps():
    p = RegimeParams(delta=1e-3, h=0.3, l=0.4)
    prof = build_profile(p)
    sys = solve(assemble(prof, p))
    t = np.linspace(-20, prof.lower[0] - 1e-9, 100)
    sigma = reconstruct_field(sys, prof, p, t) - np.exp(1j * t)
    moved = sigma * np.exp(1j * t)
    assert np.ptp(np.abs(moved - moved[0])) / abs(moved[0]) < 1e-10


def test_prefactor_adjudication():
    """The derived prefactor tracks the exact field; the bare one does not."""
    p = RegimeParams(delta=1e-3, h=0.1, l=0.1)
    prof = build_profile(p)
    grid = np.linspace(-5, 15, 200)
    ref = trace(prof, 1.0, grid)
    derived, sys = foldy_lax_trace(prof, p, grid)
    bare, _ = foldy_lax_trace(prof, p, grid, form="bare")
    assert sys.residual < 1e-10
    assert derived.sup_diff(ref) < 1e-7
    assert bare.sup_diff(ref) > 100 * derived.sup_diff(ref)
    with pytest.raises(ValueError):
        reconstruct_field(sys, prof, p, grid, form="other")


def test_nystrom_free_field():
    p = RegimeParams(C=0.0, delta=1e-2, l=0.5)
    prof = build_profile(p)
    t = np.linspace(-3, 13, 9)
    tr, _ = nystrom_solve(prof, p, 3, t)
    np.testing.assert_allclose(tr.values, np.exp(1j * t), atol=1e-15)


def test_nystrom_single_node_is_midpoint_foldy_lax():
    p = RegimeParams(delta=1e-2, h=0.3, l=0.5)
    prof = build_profile(p)
    _, E_nodes = nystrom_solve(prof, p, 1, [0.0])
    sys = solve(assemble(prof, p), rhs=p.delta * np.exp(1j * prof.centers))
    np.testing.assert_allclose(p.delta * E_nodes, sys.q_tilde, rtol=1e-12, atol=1e-16)


def test_nystrom_converges_to_oracle():
    p = RegimeParams(delta=0.05, h=0.5, l=0.5)
    prof = build_profile(p)
    grid = np.linspace(-5, 15, 200)
    ref = trace(prof, p.wavenumber, grid)
    errs = [nystrom_solve(prof, p, m, grid)[0].sup_diff(ref) for m in (1, 2, 4, 8)]
    # the kernel kink at each node inside its own step limits Gauss-Legendre to algebraic order
    assert all(b <= 0.5 * a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-4


@pytest.mark.parametrize("row", [0, 1, 2])
def test_step_norm_bound(row):
    p = table2_params(row)
    prof = build_profile(p)
    sc = solve_scattering(prof, p.wavenumber)
    norms = step_l2_norms(lambda s: field_at(prof, p.wavenumber, sc, s), prof)
    ratio = norms.sum() / (math.sqrt(p.delta) * prof.n)
    assert ratio < 10


def test_step_norms_of_incident_wave():
    prof = build_profile(RegimeParams(delta=1e-2, l=0.5))
    norms = step_l2_norms(lambda s: np.exp(1j * s), prof)
    np.testing.assert_allclose(norms, math.sqrt(prof.delta), rtol=1e-12)
