"""Constant-theta solver: closed forms, constraints, pulses and the grid oracle.

Closed-form su(2) values and the three-level Hadamard values are checked
against hand derivations; everything else against the brute-force grid.
"""

import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from kpsynth import (
    GroupElement,
    SynthesisProblem,
    commutant_condition,
    decomposition_preset,
    euler_conjugate,
    grid_oracle,
    group_exp,
    hamiltonian_at,
    solve,
    sweep_su2,
    target_from_unitary,
    turning_rate,
)
from kpsynth.errors import NoConsistentTheta, TargetNotInK, TimeOutOfRange, UnreachableTarget
from kpsynth.presets import gell_mann, hadamard_target
from kpsynth.synth import hamiltonian_batch

LAM = gell_mann()
SU2 = decomposition_preset("su2-aiii")
DAL = decomposition_preset("su3-dalessandro")
AIII = decomposition_preset("su3-aiii31")


def su2_solution(eta, omega=1.0, **kw):
    return solve(SynthesisProblem(SU2, SU2.basis.element(Jz=2 * eta), omega=omega, **kw))


def hadamard_solution(omega=1.0, **kw):
    x = target_from_unitary(DAL.decomposition, GroupElement(DAL.basis, hadamard_target()))
    return solve(SynthesisProblem(DAL, x, omega=omega, **kw))


@pytest.mark.parametrize("eta", [0.3, 1.0, math.pi / 2, 2.5, math.pi, 4.0, 6.0])
def test_su2_closed_forms(eta):
    sol = su2_solution(eta)
    assert sol.n_star == 1
    assert math.cos(sol.theta_star) == pytest.approx(1 - eta / math.pi, abs=1e-12)
    assert sol.omega_time == pytest.approx(2 * math.sqrt(eta * (2 * math.pi - eta)), abs=1e-12)
    lam = turning_rate(sol).as_dict()["Jz"]
    assert lam == pytest.approx((math.pi - eta) / math.sqrt(eta * (2 * math.pi - eta)), abs=1e-12)
    assert sol.phi_star.allclose(SU2.basis.generator("Jz") * (2 * math.pi), atol=1e-12)


def test_su2_omega_scaling():
    sol = su2_solution(1.0, omega=3.0)
    assert sol.time == pytest.approx(2 * math.sqrt(2 * math.pi - 1) / 3, abs=1e-12)
    assert turning_rate(sol).as_dict()["Jz"] == pytest.approx(
        3 * (math.pi - 1) / math.sqrt(2 * math.pi - 1), abs=1e-12
    )


def test_su2_symmetric_point_has_no_turning():
    sol = su2_solution(math.pi)
    assert turning_rate(sol).norm() < 1e-12
    assert sol.omega_time == pytest.approx(2 * math.pi, abs=1e-12)


def test_hadamard_case_study():
    sol = hadamard_solution()
    assert math.cos(sol.theta_star) == pytest.approx(7 / 8, abs=1e-12)
    assert math.sin(sol.theta_star) == pytest.approx(math.sqrt(15) / 8, abs=1e-12)
    assert sol.n_star == 1
    assert sol.omega_time == pytest.approx(math.sqrt(15) * math.pi / 4, abs=1e-12)
    assert np.allclose(sol.phi_star.matrix, 2 * math.pi * (-1j) * LAM["l6"], atol=1e-12)
    assert np.allclose(turning_rate(sol).matrix, 7 / math.sqrt(15) * (-1j) * LAM["l6"], atol=1e-12)


def test_hadamard_pulse_rotates_between_l1_and_l5():
    sol = hadamard_solution()
    w = 7 / math.sqrt(15)
    h0 = hamiltonian_at(sol, 0.0).matrix
    sign = np.real(np.trace(h0 @ (-1j * LAM["l1"]).conj().T)) / 2
    assert abs(sign) == pytest.approx(1.0, abs=1e-12)
    for t in np.linspace(0, sol.time, 7):
        expected = sign * (math.cos(w * t) * -1j * LAM["l1"] - math.sin(w * t) * -1j * LAM["l5"])
        assert np.allclose(hamiltonian_at(sol, t).matrix, expected, atol=1e-12)


def test_su2_hamiltonian_closed_form():
    eta = 1.0
    sol = su2_solution(eta, omega=2.0)
    lam = 2.0 * (math.pi - eta) / math.sqrt(eta * (2 * math.pi - eta))
    for t in np.linspace(0, sol.time, 9):
        h = hamiltonian_at(sol, t)
        assert h.allclose(SU2.basis.element(Jx=2 * math.cos(lam * t), Jy=2 * math.sin(lam * t)),
                          atol=1e-12)
    with pytest.raises(TimeOutOfRange):
        hamiltonian_at(sol, sol.time * 1.01)
    with pytest.raises(TimeOutOfRange):
        hamiltonian_at(sol, -0.1)


def test_batch_matches_pointwise():
    sol = hadamard_solution()
    times = np.linspace(0, sol.time, 11)
    batch = hamiltonian_batch(sol, times)
    for t, row in zip(times, batch):
        assert np.allclose(row, hamiltonian_at(sol, t).coeffs, atol=1e-12)


def test_identity_target_is_trivial():
    sol = solve(SynthesisProblem(SU2, SU2.basis.zero()))
    assert sol.time == 0 and sol.phi_star.norm() == 0 and sol.n_star == 0


def check_invariants(sol, samples=100):
    """Constraint closure, commutant, horizontality and energy."""
    x = sol.problem.target_x
    theta = sol.theta_element
    cos_part, sin_part = euler_conjugate(theta, sol.phi_star)
    assert (sol.phi_star - cos_part - x).norm() < 1e-9
    ok, res = commutant_condition(sol.problem.subalgebra, sol.phi_star)
    assert ok and res < 1e-9
    # exp(Phi) fixes Theta*, checked directly on matrices
    g = sla.expm(sol.phi_star.matrix)
    assert np.linalg.norm(g @ theta.matrix @ g.conj().T - theta.matrix) < 1e-9
    assert sol.omega_time == pytest.approx(sin_part.norm(), abs=1e-10)
    assert (sol.lambda_rate * sol.time - cos_part).norm() < 1e-9
    d = sol.problem.subalgebra.decomposition
    for t in np.linspace(0, sol.time, samples):
        h = hamiltonian_at(sol, t)
        assert np.max(np.abs(h.coeffs[list(d.k_indices)])) < 1e-10
        assert h.norm() == pytest.approx(sol.omega, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(eta=st.floats(0.01, 2 * math.pi - 0.01), omega=st.floats(0.2, 5.0))
def test_su2_invariants(eta, omega):
    check_invariants(su2_solution(eta, omega=omega), samples=20)


def test_hadamard_invariants():
    check_invariants(hadamard_solution(omega=1.7))


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-3.0, 3.0), b=st.floats(-3.0, 3.0))
def test_single_family_targets_in_su3(a, b):
    # l1 and l2 share a root family, so any mix stays consistent
    x = AIII.basis.element(l1=a, l2=b)
    if x.norm() < 1e-3:
        return
    check_invariants(solve(SynthesisProblem(AIII, x)), samples=10)


def test_two_family_target_found_or_rejected():
    # 2 theta family alone
    sol = solve(SynthesisProblem(AIII, AIII.basis.element(H_III_perp=0.4)))
    check_invariants(sol, samples=10)
    # mixing families with no shared theta
    with pytest.raises(NoConsistentTheta):
        solve(SynthesisProblem(AIII, AIII.basis.element(l1=1.0, H_III_perp=0.2)))


def test_shared_theta_but_noncommuting_families_rejected():
    # build X from a shared theta; cos_part(Phi) then fails to commute with Phi
    b = AIII.basis
    theta = AIII.a_generators[0] * 1.1
    phi = b.generator("l1") * (2 * math.pi) + b.generator("H_III_perp") * math.pi
    cos_part, sin_part = euler_conjugate(theta, phi)
    x = phi - cos_part
    reached = sla.expm(cos_part.matrix) @ sla.expm(sin_part.matrix - cos_part.matrix)
    assert np.linalg.norm(reached - sla.expm(-x.matrix)) > 1e-3
    with pytest.raises(NoConsistentTheta):
        solve(SynthesisProblem(AIII, x, n_max=1))


def test_commutant_target_is_unreachable():
    with pytest.raises(UnreachableTarget):
        solve(SynthesisProblem(AIII, AIII.basis.element(H_III=0.3)))
    with pytest.raises(UnreachableTarget):
        solve(SynthesisProblem(AIII, AIII.basis.element(H_III=0.3, l1=0.5)))


def test_target_must_lie_in_k():
    with pytest.raises(TargetNotInK):
        SynthesisProblem(SU2, SU2.basis.element(Jx=0.1))


def test_phi_m_does_not_change_time_when_it_commutes():
    # H_III commutes with H_III_perp, so the free m part leaves the holonomy alone
    x = AIII.basis.element(H_III_perp=0.7)
    base = solve(SynthesisProblem(AIII, x))
    shifted = solve(SynthesisProblem(AIII, x, phi_m=AIII.basis.element(H_III=0.9)))
    assert shifted.omega_time == pytest.approx(base.omega_time, abs=1e-12)
    check_invariants(shifted, samples=10)


def test_noncommuting_phi_m_is_rejected_by_holonomy():
    with pytest.raises(NoConsistentTheta):
        solve(SynthesisProblem(AIII, AIII.basis.element(l1=0.7),
                               phi_m=AIII.basis.element(H_III=0.9)))


@pytest.mark.parametrize("eta", [0.4, 2.0, 5.5])
def test_root_sign_leaves_time_unchanged(eta):
    plus = su2_solution(eta)
    minus = su2_solution(eta, root_sign=-1)
    assert minus.time == pytest.approx(plus.time, abs=1e-12)
    assert not minus.p_generator.allclose(plus.p_generator, atol=1e-6)
    check_invariants(minus, samples=10)
    had_minus = hadamard_solution(root_sign=-1)
    assert had_minus.time == pytest.approx(hadamard_solution().time, abs=1e-12)


def test_target_from_unitary():
    d = DAL.decomposition
    b = DAL.basis
    rng = np.random.default_rng(3)
    u0 = group_exp(b.element(rng.normal(size=8)))
    assert target_from_unitary(d, u0, u0).norm() < 1e-10
    x = target_from_unitary(d, GroupElement(b, hadamard_target()))
    assert np.allclose(x.matrix, math.pi / 4 * (-1j) * LAM["l6"], atol=1e-12)
    with pytest.raises(TargetNotInK):
        target_from_unitary(d, group_exp(b.generator("l1") * 0.4))
    # shifted initial condition: target is u_t u0^-1
    u_t = GroupElement(b, hadamard_target()) @ u0
    assert target_from_unitary(d, u_t, u0).allclose(x, atol=1e-10)


def test_solution_json_keys():
    doc = hadamard_solution().to_json()
    assert set(doc) == {
        "theta_star", "n_star", "phi_star_coeffs", "time", "omega_time",
        "lambda_coeffs", "p_generator_coeffs", "constraint_residual",
    }
    assert doc["n_star"] == 1


def test_gauge_frame_is_minus_lambda_t():
    sol = su2_solution(1.0)
    assert sol.gauge_frame(0.5).allclose(sol.lambda_rate * -0.5)


def test_sweep_rows():
    grid = [math.pi / 2, math.pi, 1e-6]
    rows = sweep_su2(grid)
    assert rows[0]["lambda"] == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert rows[1]["omega_time_analytic"] == pytest.approx(2 * math.pi, abs=1e-12)
    assert rows[2]["omega_time_analytic"] < 1e-2
    for r in rows:
        assert r["omega_time_boozer"] == pytest.approx(r["omega_time_analytic"], abs=1e-9)
    bad = sweep_su2([7.0])
    assert bad[0]["error"]


def test_sweep_row_against_grid_oracle():
    row = sweep_su2([math.pi / 2], oracle=True)[0]
    assert abs(row["grid_oracle_omega_time"] - row["omega_time_analytic"]) < 1e-3


@pytest.mark.parametrize("eta", [0.5, 2.0, math.pi, 5.0])
def test_grid_oracle_dominance_su2(eta):
    sol = su2_solution(eta)
    oracle = grid_oracle(sol.problem)
    assert oracle.feasible_count > 0
    assert oracle.omega_time >= sol.omega_time - 1e-3
    # the oracle is not vacuous: it lands next to the analytic optimum
    assert oracle.omega_time - sol.omega_time < 1e-2
