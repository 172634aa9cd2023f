"""Propagation, distances, reports and integrator order.

A high-accuracy scipy ODE solve of the matrix equation serves as the
independent integration oracle.
"""

import csv
import io
import json
import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from kpsynth import (
    GroupElement,
    PulseSchedule,
    SynthesisProblem,
    convergence_order,
    decomposition_preset,
    group_exp,
    hamiltonian_at,
    phase_aligned_distance,
    propagate,
    solve,
    target_from_unitary,
    verify_solution,
)
from kpsynth.errors import DimensionMismatch
from kpsynth.presets import hadamard_target

SU2 = decomposition_preset("su2-aiii")
DAL = decomposition_preset("su3-dalessandro")


def su2_solution(eta):
    return solve(SynthesisProblem(SU2, SU2.basis.element(Jz=2 * eta)))


def hadamard_solution():
    x = target_from_unitary(DAL.decomposition, GroupElement(DAL.basis, hadamard_target()))
    return solve(SynthesisProblem(DAL, x))


def ode_oracle(sol, u0):
    """U(T) from an adaptive high-order integration of dU/dt = h(t) U."""
    n = u0.shape[0]

    def rhs(t, y):
        u = y.reshape(n, n)
        return (hamiltonian_at(sol, min(t, sol.time)).matrix @ u).ravel()

    out = solve_ivp(rhs, (0, sol.time), u0.astype(complex).ravel(), method="DOP853",
                    rtol=1e-12, atol=1e-12)
    return out.y[:, -1].reshape(n, n)


def test_zero_and_constant_hamiltonians():
    b = SU2.basis
    rng = np.random.default_rng(0)
    u0 = group_exp(b.element(rng.normal(size=3)))
    rep = propagate(PulseSchedule.constant(b.zero(), 2.0, 16), u0)
    assert rep.target_distance == 0.0
    assert np.allclose(rep.final_unitary.matrix, u0.matrix, atol=0)

    h = b.element(Jx=0.3, Jy=-0.8, Jz=0.2)
    rep = propagate(PulseSchedule.constant(h, 1.7, 64), u0)
    expected = sla.expm(h.matrix * 1.7) @ u0.matrix
    assert np.linalg.norm(rep.final_unitary.matrix - expected) < 1e-12
    assert rep.converged


def test_su2_pulse_matches_ode_oracle():
    sol = su2_solution(math.pi / 2)
    u0 = sol.initial_unitary()
    oracle = ode_oracle(sol, u0.matrix)
    target = sla.expm(1j * math.pi * np.diag([0.5, -0.5])) @ u0.matrix
    assert np.linalg.norm(oracle - target) < 1e-8
    rep = verify_solution(sol, steps=10**5, tol=1e-6)
    assert rep.target_distance < 1e-6
    assert np.linalg.norm(rep.final_unitary.matrix - oracle) < 1e-6


def test_hadamard_pulse_matches_ode_oracle():
    sol = hadamard_solution()
    u0 = sol.initial_unitary().matrix
    oracle = ode_oracle(sol, u0)
    assert np.linalg.norm(oracle - hadamard_target() @ u0) < 1e-8


def test_phase_aligned_distance():
    b = DAL.basis
    rng = np.random.default_rng(4)
    u = group_exp(b.element(rng.normal(size=8)))
    assert phase_aligned_distance(u, u) == 0.0
    w = np.exp(2j * math.pi / 3)
    assert phase_aligned_distance(u.matrix, w * u.matrix) < 1e-14
    with pytest.raises(DimensionMismatch):
        phase_aligned_distance(np.eye(2), np.eye(3))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=16, max_size=16))
def test_phase_aligned_distance_brute_force(vals):
    b = DAL.basis
    u = group_exp(b.element(vals[:8])).matrix
    v = group_exp(b.element(vals[8:])).matrix
    brute = min(np.linalg.norm(u - np.exp(2j * math.pi * k / 3) * v) for k in range(3))
    assert phase_aligned_distance(u, v) == pytest.approx(brute, abs=1e-14)


def test_verify_examples():
    sol = su2_solution(1.0)
    rep = verify_solution(sol, steps=2**16, tol=1e-6)
    assert rep.converged
    assert rep.invariant_residuals["unitarity"] < 1e-10
    assert rep.invariant_residuals["holonomy_p_component"] < 1e-6
    assert rep.invariant_residuals["arc_length"] < 1e-6
    assert not verify_solution(sol, steps=64, tol=0.0).converged

    had = hadamard_solution()
    rep = verify_solution(had, steps=2**16, tol=1e-6)
    assert rep.converged
    assert had.time == pytest.approx(math.sqrt(15) * math.pi / 4, abs=1e-12)


def test_verify_with_arbitrary_start():
    sol = su2_solution(2.0)
    u0 = group_exp(SU2.basis.element([0.4, -1.3, 0.9]))
    rep = verify_solution(sol, steps=4096, u0=u0)
    assert rep.converged
    expected = sla.expm(-sol.problem.target_x.matrix) @ u0.matrix
    assert np.allclose(rep.target_unitary.matrix, expected, atol=1e-12)


def test_distance_decreases_with_steps():
    sol = hadamard_solution()
    dists = [verify_solution(sol, steps=s).target_distance for s in (64, 128, 256, 512)]
    assert all(b < a for a, b in zip(dists, dists[1:]))


@pytest.mark.parametrize("eta", [1.0, 4.0])
def test_convergence_order_su2(eta):
    assert convergence_order(su2_solution(eta), 4) == pytest.approx(2.0, abs=0.2)


def test_convergence_order_hadamard_and_constant():
    assert convergence_order(hadamard_solution(), 4) == pytest.approx(2.0, abs=0.2)
    sched = PulseSchedule.constant(SU2.basis.element(Jx=1.0), 1.0, 8)
    assert math.isnan(convergence_order(sched, 3))
    with pytest.raises(ValueError):
        convergence_order(sched, 2)


def test_schedule_samples_and_csv():
    sol = hadamard_solution()
    sched = PulseSchedule.from_solution(sol, 32)
    t, coeffs = sched.samples()
    assert t[0] == 0 and t[-1] == pytest.approx(sol.time) and np.all(np.diff(t) > 0)
    rows = list(csv.reader(io.StringIO(sched.to_csv())))
    assert rows[0] == ["t", "l1", "l2", "l4", "l5"]
    assert len(rows) == 34
    # 17 significant digits round-trip exactly
    assert float(rows[5][0]) == t[4]
    p_idx = [DAL.basis.index(s) for s in rows[0][1:]]
    assert [float(v) for v in rows[5][1:]] == list(coeffs[4, p_idx])


def test_report_json():
    rep = verify_solution(su2_solution(1.0), steps=256)
    doc = json.loads(rep.dumps())
    assert set(doc) >= {"final_unitary", "target_distance", "step_count",
                        "invariant_residuals", "converged"}
    assert doc["step_count"] == 256


@pytest.mark.parametrize("backend", ["python", "cython"])
def test_backends_agree(backend):
    from kpsynth import kernels

    if backend not in kernels.backends():
        pytest.skip("compiled extension not built")
    sol = hadamard_solution()
    ref = verify_solution(sol, steps=512, backend="python")
    rep = verify_solution(sol, steps=512, backend=backend)
    assert np.allclose(rep.final_unitary.matrix, ref.final_unitary.matrix, atol=1e-13)
