"""Propagation of piecewise-sampled controls and verification of synthesized pulses."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import DimensionMismatch, LogBranchAmbiguous, NonUnitaryDrift, NotInSpan
from .lie import AlgebraElement, GeneratorBasis, GroupElement, _exp_anti_hermitian
from .synth import SynthesisSolution, hamiltonian_batch

DRIFT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Control coefficients on a uniform grid over ``[0, duration]``.

    ``control`` maps an array of times to coefficient rows, so the
    propagator can sample step midpoints.  ``target_x`` is the element with
    expected holonomy ``exp(-target_x)``.
    """

    basis: GeneratorBasis
    duration: float
    steps: int
    control: Callable = field(repr=False)
    omega: float | None = None
    target_x: AlgebraElement | None = None
    labels: tuple[str, ...] | None = None
    solution: SynthesisSolution | None = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.steps) < 1:
            raise ValueError("steps must be positive")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")

    @classmethod
    def from_solution(cls, sol: SynthesisSolution, steps: int) -> "PulseSchedule":
        d = sol.problem.subalgebra.decomposition
        return cls(
            basis=d.basis,
            duration=sol.time,
            steps=int(steps),
            control=lambda t: hamiltonian_batch(sol, t),
            omega=sol.omega,
            target_x=sol.problem.target_x,
            labels=tuple(d.basis.labels[i] for i in d.p_indices),
            solution=sol,
        )

    @classmethod
    def constant(cls, h: AlgebraElement, duration: float, steps: int) -> "PulseSchedule":
        """Time-independent control ``h``; its holonomy is ``exp(h * duration)``."""
        coeffs = h.coeffs
        return cls(
            basis=h.basis,
            duration=float(duration),
            steps=int(steps),
            control=lambda t: np.tile(coeffs, (np.size(t), 1)),
            omega=h.norm(),
            target_x=h * (-duration),
        )

    def with_steps(self, steps: int) -> "PulseSchedule":
        return PulseSchedule(
            self.basis, self.duration, int(steps), self.control, self.omega,
            self.target_x, self.labels, self.solution,
        )

    @property
    def dt(self) -> float:
        return self.duration / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, self.steps + 1)

    def samples(self) -> tuple[np.ndarray, np.ndarray]:
        t = self.times
        return t, np.atleast_2d(self.control(t))

    def midpoint_controls(self) -> np.ndarray:
        t = (np.arange(self.steps) + 0.5) * self.dt
        return np.atleast_2d(self.control(t))

    def to_csv(self, stream=None) -> str:
        """Header ``t,<labels>``; values at 17 significant digits."""
        labels = self.labels or self.basis.labels
        idx = [self.basis.index(s) for s in labels]
        t, coeffs = self.samples()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *labels])
        for tj, row in zip(t, coeffs):
            w.writerow([f"{tj:.17g}", *(f"{row[i]:.17g}" for i in idx)])
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text


@dataclass(frozen=True, eq=False)
class PropagationReport:
    final_unitary: GroupElement
    target_unitary: GroupElement
    target_distance: float
    step_count: int
    invariant_residuals: dict
    converged: bool
    tolerance: float

    def to_json(self) -> dict:
        from .presets import complex_matrix_to_json

        return {
            "final_unitary": complex_matrix_to_json(self.final_unitary.matrix),
            "target_unitary": complex_matrix_to_json(self.target_unitary.matrix),
            "target_distance": float(self.target_distance),
            "step_count": int(self.step_count),
            "invariant_residuals": {k: float(v) for k, v in self.invariant_residuals.items()},
            "converged": bool(self.converged),
            "tolerance": float(self.tolerance),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _as_matrix(u) -> np.ndarray:
    return np.asarray(u.matrix if isinstance(u, GroupElement) else u, dtype=complex)


def phase_aligned_distance(u, v) -> float:
    """``min_w |u - w v|_F`` over the ``n``-th roots of unity ``w``."""
    a, b = _as_matrix(u), _as_matrix(v)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    n = a.shape[0]
    roots = np.exp(2j * np.pi * np.arange(n) / n)
    return float(min(np.linalg.norm(a - w * b) for w in roots))


def step_unitaries(basis: GeneratorBasis, coeffs: np.ndarray, dt: float) -> np.ndarray:
    """``exp(dt * h_j)`` for each coefficient row, via one batched eigensolve."""
    mats = np.tensordot(coeffs, basis.matrices, axes=1) * dt
    w, v = np.linalg.eigh(1j * mats)
    return (v * np.exp(-1j * w)[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def propagate(
    schedule: PulseSchedule,
    u0: GroupElement,
    target: GroupElement | None = None,
    tol: float = 1e-5,
    backend: str | None = None,
) -> PropagationReport:
    """Integrate ``dU/dt = h(t) U`` with exact exponentials at step midpoints.

    The target defaults to ``exp(-target_x) u0``.  Convergence means a
    phase-aligned distance below ``tol * max(1, T)``.

    Raises:
        NonUnitaryDrift: accumulated ``|U^dagger U - I|`` above ``1e-8``.
    """
    basis = schedule.basis
    chain = kernels.chain_product if backend is None else kernels.backends()[backend]
    if schedule.duration == 0:
        u, drift = np.array(u0.matrix), 0.0
    else:
        steps = step_unitaries(basis, schedule.midpoint_controls(), schedule.dt)
        u, drift = chain(np.ascontiguousarray(steps), np.ascontiguousarray(u0.matrix))
    if drift > DRIFT_TOL:
        raise NonUnitaryDrift(f"unitarity defect {drift:.3e} exceeds {DRIFT_TOL}")
    if target is None:
        x = schedule.target_x if schedule.target_x is not None else basis.zero()
        target = GroupElement(basis, _exp_anti_hermitian(-x.matrix) @ u0.matrix)
    final = GroupElement(basis, u)
    dist = phase_aligned_distance(final, target)
    limit = tol * max(1.0, schedule.duration)
    return PropagationReport(
        final_unitary=final,
        target_unitary=target,
        target_distance=dist,
        step_count=schedule.steps,
        invariant_residuals={"unitarity": drift},
        converged=bool(dist < limit),
        tolerance=limit,
    )


def _solution_residuals(sol: SynthesisSolution, schedule: PulseSchedule) -> dict:
    d = sol.problem.subalgebra.decomposition
    res = {
        "constraint": sol.constraint_residual,
        "commutant": sol.commutant_residual,
        "holonomy": sol.holonomy_residual,
        "omega_time_identity": abs(sol.omega_time - sol.p_generator.norm()),
        "turning_rate_identity": (sol.lambda_rate * sol.time - sol.cos_part).norm(),
    }
    if sol.time == 0:
        return res
    t, coeffs = schedule.samples()
    k_idx = list(d.k_indices)
    metric = d.basis.metric
    k_proj = coeffs[:, k_idx]
    norms = np.sqrt(np.einsum("ij,jk,ik->i", coeffs, metric, coeffs))
    res["horizontality"] = float(np.max(np.abs(k_proj)))
    res["energy"] = float(np.max(np.abs(norms - sol.omega)))
    mids = schedule.midpoint_controls()
    mid_norms = np.sqrt(np.einsum("ij,jk,ik->i", mids, metric, mids))
    res["arc_length"] = abs(float(np.sum(mid_norms) * schedule.dt) - sol.omega_time)
    return res


def verify_solution(
    sol: SynthesisSolution,
    steps: int = 4096,
    tol: float = 1e-5,
    u0: GroupElement | None = None,
    backend: str | None = None,
) -> PropagationReport:
    """Propagate the synthesized control and compare with the holonomy target.

    Starts from ``exp(-Theta*)`` unless ``u0`` is given; the target is
    ``exp(-X) u0`` in either case.
    """
    schedule = PulseSchedule.from_solution(sol, steps)
    start = sol.initial_unitary() if u0 is None else u0
    report = propagate(schedule, start, tol=tol, backend=backend)
    residuals = dict(report.invariant_residuals)
    residuals.update(_solution_residuals(sol, schedule))
    d = sol.problem.subalgebra.decomposition
    try:
        from .lie import group_log

        hol = group_log(GroupElement(d.basis, report.final_unitary.matrix @ start.matrix.conj().T))
        residuals["holonomy_p_component"] = d.p_part(hol).norm()
    except (LogBranchAmbiguous, NotInSpan):
        residuals["holonomy_p_component"] = float("nan")
    return PropagationReport(
        report.final_unitary,
        report.target_unitary,
        report.target_distance,
        report.step_count,
        residuals,
        report.converged,
        report.tolerance,
    )


def convergence_order(
    sol, step_doublings: int = 4, base_steps: int = 32, floor: float = 1e-13
) -> float:
    """Slope of ``log(distance)`` against ``log(dt)`` over repeated doublings.

    ``sol`` is a solution or a :class:`PulseSchedule`.  Returns ``nan`` when
    the distances already sit at round-off, where no order can be read off.
    """
    if step_doublings < 3:
        raise ValueError("at least three doublings are needed")
    if isinstance(sol, PulseSchedule):
        schedule, u0 = sol, sol.basis.identity()
    else:
        schedule, u0 = PulseSchedule.from_solution(sol, base_steps), sol.initial_unitary()
    dts, dists = [], []
    for k in range(step_doublings + 1):
        sch = schedule.with_steps(base_steps * 2**k)
        rep = propagate(sch, u0)
        dts.append(sch.dt)
        dists.append(rep.target_distance)
    dists = np.array(dists)
    if np.any(dists < floor) or not np.all(np.isfinite(dists)) or schedule.duration == 0:
        return float("nan")
    slope, _ = np.polyfit(np.log(dts), np.log(dists), 1)
    return float(slope)
