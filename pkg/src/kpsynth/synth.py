"""Constant-theta synthesis of time-optimal controls for KP problems.

A target ``X`` in ``k`` is reached as the holonomy ``U(T) U(0)^-1 = exp(-X)``
of a control ``h(t) = Ad_{exp(Lambda t)}(P) / T`` confined to ``p``.  The
parameters come from a rank-one Cartan subalgebra: ``Theta = theta * A`` and a
commutant element ``Phi`` with ``X = Phi - cos_part(Phi)`` and
``P = sin_part(Phi)``, both parts taken with respect to ``Theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cartan import (
    CartanDecomposition,
    CartanSubalgebraChoice,
    RestrictedRootSystem,
    commutant_condition,
    commutant_period,
    compute_roots,
)
from .errors import (
    NoConsistentTheta,
    RankUnsupported,
    TargetNotInK,
    TimeOutOfRange,
    UnreachableTarget,
)
from .lie import (
    AlgebraElement,
    GroupElement,
    _exp_anti_hermitian,
    adjoint_matrix,
    euler_conjugate,
    group_exp,
    killing_form,
    principal_log_matrix,
)

P_TOL = 1e-10
THETA_TOL = 1e-9
HOLONOMY_TOL = 1e-9
ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SynthesisProblem:
    """Target ``x`` in ``k`` plus the data needed to reach it.

    ``phi_m`` optionally fixes the free commutant part of ``Phi``;
    ``root_sign`` flips the orientation of the Cartan generator.
    """

    subalgebra: CartanSubalgebraChoice
    target_x: AlgebraElement
    omega: float = 1.0
    n_max: int = 8
    roots: RestrictedRootSystem | None = None
    phi_m: AlgebraElement | None = None
    root_sign: int = 1

    def __post_init__(self):
        if self.subalgebra.rank != 1:
            raise RankUnsupported("only rank-one Cartan subalgebras are supported")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if int(self.n_max) < 1:
            raise ValueError("n_max must be a positive integer")
        if self.root_sign not in (1, -1):
            raise ValueError("root_sign must be +1 or -1")
        d = self.subalgebra.decomposition
        if d.p_part(self.target_x).norm() > P_TOL:
            raise TargetNotInK("target has a component in p")
        if self.roots is None:
            object.__setattr__(self, "roots", compute_roots(self.subalgebra))

    @property
    def a_unit(self) -> AlgebraElement:
        return self.subalgebra.a_generators[0] * self.root_sign


@dataclass(frozen=True, eq=False)
class SynthesisSolution:
    problem: SynthesisProblem
    theta_star: float
    n_star: int
    phi_star: AlgebraElement
    time: float
    lambda_rate: AlgebraElement
    p_generator: AlgebraElement
    cos_part: AlgebraElement
    constraint_residual: float
    commutant_residual: float
    holonomy_residual: float

    @property
    def omega(self) -> float:
        return self.problem.omega

    @property
    def omega_time(self) -> float:
        return self.problem.omega * self.time

    @property
    def theta_element(self) -> AlgebraElement:
        return self.problem.a_unit * self.theta_star

    def initial_unitary(self) -> GroupElement:
        """``exp(-Theta*)``: the start point whose Cartan coordinate is ``theta*``."""
        return group_exp(-self.theta_element)

    def gauge_frame(self, t: float) -> AlgebraElement:
        """Frame angles ``psi(t) = -Lambda t`` of the rotating gauge."""
        return self.lambda_rate * (-t)

    def to_json(self) -> dict:
        return {
            "theta_star": float(self.theta_star),
            "n_star": int(self.n_star),
            "phi_star_coeffs": self.phi_star.as_dict(),
            "time": float(self.time),
            "omega_time": float(self.omega_time),
            "lambda_coeffs": self.lambda_rate.as_dict(),
            "p_generator_coeffs": self.p_generator.as_dict(),
            "constraint_residual": float(self.constraint_residual),
        }


@dataclass
class _Family:
    alpha: float
    target: AlgebraElement
    direction: AlgebraElement | None = None
    period: float = 0.0


def _split_target(problem: SynthesisProblem) -> list[_Family]:
    sub = problem.subalgebra
    x = problem.target_x
    scale = max(1.0, x.norm())
    m_part = sub.m_part(x)
    if m_part.norm() > 1e-10 * scale:
        raise UnreachableTarget(
            "target has a component in the commutant m; controls of this form never "
            f"generate it (|x_m| = {m_part.norm():.3e})"
        )
    families = []
    rest = x - m_part
    for alpha, members in problem.roots.families():
        part = x.basis.zero()
        for r in members:
            part = part + r.f_vector * _kform(r.f_vector, x)
        rest = rest - part
        fam = _Family(float(alpha[0]), part)
        if part.norm() > ZERO_TOL * scale:
            fam.direction = part / part.norm()
            fam.period = commutant_period(sub, fam.direction)
        families.append(fam)
    if rest.norm() > 1e-9 * scale:
        raise ArithmeticError("root vectors and m do not span k")
    return families


def _kform(f: AlgebraElement, x: AlgebraElement) -> float:
    return killing_form(f, x) / killing_form(f, f)


def _theta_candidates(alpha: float, ratio: float) -> list[float]:
    """``theta`` in ``(0, pi]`` with ``cos(alpha theta) = 1 - ratio``."""
    c = 1.0 - ratio
    if c < -1.0 - THETA_TOL or c > 1.0 + THETA_TOL:
        return []
    base = math.acos(min(1.0, max(-1.0, c)))
    out = []
    kmax = int(math.ceil(alpha * math.pi / (2 * math.pi))) + 1
    for k in range(kmax + 1):
        for s in (base, -base):
            th = (s + 2 * math.pi * k) / alpha
            if THETA_TOL < th <= math.pi + THETA_TOL:
                th = min(th, math.pi)
                if all(abs(th - o) > THETA_TOL for o in out):
                    out.append(th)
    return sorted(out)


def _common_thetas(per_family: list[list[float]]) -> list[float]:
    common = per_family[0]
    for cands in per_family[1:]:
        common = [t for t in common if any(abs(t - u) <= THETA_TOL for u in cands)]
    return common


def _holonomy(cos_part: AlgebraElement, sin_part: AlgebraElement) -> np.ndarray:
    return _exp_anti_hermitian(cos_part.matrix) @ _exp_anti_hermitian(
        sin_part.matrix - cos_part.matrix
    )


def _trivial(problem: SynthesisProblem) -> SynthesisSolution:
    zero = problem.target_x.basis.zero()
    return SynthesisSolution(problem, 0.0, 0, zero, 0.0, zero, zero, zero, 0.0, 0.0, 0.0)


def solve(problem: SynthesisProblem) -> SynthesisSolution:
    """Minimal-time constant-theta solution for ``problem``.

    Each root family touched by the target fixes ``cos(alpha theta)`` once
    the winding ``n`` is chosen; all families must agree on ``theta``.
    Candidates whose holonomy misses ``exp(-X)`` are discarded.

    Raises:
        UnreachableTarget: the target has a component in ``m``.
        NoConsistentTheta: no winding admits a common, consistent ``theta``.
    """
    x = problem.target_x
    if x.norm() <= ZERO_TOL:
        return _trivial(problem)
    families = _split_target(problem)
    active = [f for f in families if f.direction is not None]
    sub = problem.subalgebra
    phi_m = problem.phi_m if problem.phi_m is not None else x.basis.zero()
    target = _exp_anti_hermitian(-x.matrix)

    best = None
    for n in range(1, int(problem.n_max) + 1):
        per_family = [
            _theta_candidates(f.alpha, f.target.norm() / (n * f.period)) for f in active
        ]
        if any(not c for c in per_family):
            continue
        for theta in _common_thetas(per_family):
            phi = phi_m
            for f in active:
                phi = phi + f.direction * (n * f.period)
            theta_el = problem.a_unit * theta
            cos_part, sin_part = euler_conjugate(theta_el, phi)
            residual = (phi - cos_part - x).norm()
            if residual > THETA_TOL * max(1.0, x.norm()):
                continue
            hol = float(np.linalg.norm(_holonomy(cos_part, sin_part) - target))
            if hol > HOLONOMY_TOL * max(1.0, x.norm()):
                continue
            omega_time = sin_part.norm()
            if best is None or omega_time < best[0] - 1e-12:
                best = (omega_time, n, theta, phi, cos_part, sin_part, residual, hol)

    if best is None:
        raise NoConsistentTheta(
            f"no winding n <= {problem.n_max} gives a consistent theta in (0, pi]"
        )
    omega_time, n, theta, phi, cos_part, sin_part, residual, hol = best
    time = omega_time / problem.omega
    _, comm = commutant_condition(sub, phi)
    return SynthesisSolution(
        problem=problem,
        theta_star=theta,
        n_star=n,
        phi_star=phi,
        time=time,
        lambda_rate=cos_part / time,
        p_generator=sin_part,
        cos_part=cos_part,
        constraint_residual=residual,
        commutant_residual=comm,
        holonomy_residual=hol,
    )


def turning_rate(sol: SynthesisSolution) -> AlgebraElement:
    """``Lambda``: the constant rotation rate of the control frame."""
    return sol.lambda_rate


def hamiltonian_at(sol: SynthesisSolution, t: float) -> AlgebraElement:
    """Control element ``-iH(t)`` at time ``t``; lies in ``p`` with norm ``omega``.

    Raises:
        TimeOutOfRange: ``t`` outside ``[0, T]``.
    """
    if not (-1e-12 <= t <= sol.time * (1 + 1e-12) + 1e-12):
        raise TimeOutOfRange(f"t = {t} outside [0, {sol.time}]")
    if sol.time == 0:
        return sol.p_generator
    cos_part, sin_part = euler_conjugate(sol.lambda_rate * t, sol.p_generator)
    return (cos_part + sin_part) / sol.time


def hamiltonian_batch(sol: SynthesisSolution, times) -> np.ndarray:
    """Coefficient vectors of the control at many times, shape ``(m, dim)``."""
    times = np.asarray(times, dtype=float)
    if sol.time == 0:
        return np.zeros((times.size, sol.p_generator.basis.dim))
    basis = sol.p_generator.basis
    chol, chol_inv = basis.orthonormal_frame
    ad_on = chol.T @ adjoint_matrix(sol.lambda_rate) @ chol_inv.T
    w, v = np.linalg.eigh(1j * 0.5 * (ad_on - ad_on.T))
    p_on = v.conj().T @ (chol.T @ sol.p_generator.coeffs)
    # exp(t ad) = V exp(-i t w) V^dagger in orthonormal coordinates
    rot = np.exp(-1j * np.outer(times, w)) * p_on
    on = (rot @ v.T).real
    return on @ chol_inv / sol.time


def target_from_unitary(
    d: CartanDecomposition, u_target: GroupElement, u0: GroupElement | None = None
) -> AlgebraElement:
    """``X`` with ``u_target u0^-1 = exp(-X)``, from the principal logarithm.

    Raises:
        TargetNotInK: the logarithm has a ``p`` component above ``1e-8``.
        LogBranchAmbiguous: an eigenvalue sits at -1.
    """
    basis = d.basis
    m = u_target.matrix if u0 is None else u_target.matrix @ u0.matrix.conj().T
    log_m = principal_log_matrix(m)
    # drop a global phase so the logarithm can be traceless
    log_m = log_m - np.trace(log_m) / basis.dim_group * np.eye(basis.dim_group)
    coeffs = basis.expand_matrix(log_m, tol=1e-8)
    x = AlgebraElement(basis, -coeffs)
    if d.p_part(x).norm() > 1e-8:
        raise TargetNotInK("target unitary is not in K")
    return d.k_part(x)


def sweep_su2(eta_grid, omega: float = 1.0, n_max: int = 8, oracle: bool = False):
    """Rows ``eta, omega_time_analytic, omega_time_boozer, lambda, grid_oracle_omega_time``.

    The Boozer column uses ``nu = 1 - eta_B / (2 pi)`` where ``eta_B = 2 eta``
    is the rotation angle of ``exp(2 i eta Jz)``, and doubles the time since
    the reference bounds the Rabi amplitude rather than the Killing norm.
    """
    from .presets import decomposition_preset

    sub = decomposition_preset("su2-aiii")
    roots = compute_roots(sub)
    basis = sub.basis
    rows = []
    for eta in eta_grid:
        row = {"eta": float(eta)}
        try:
            if not 0 < eta < 2 * math.pi:
                raise ValueError("eta must lie in (0, 2 pi)")
            x = basis.element(Jz=2 * eta)
            problem = SynthesisProblem(sub, x, omega=omega, n_max=n_max, roots=roots)
            sol = solve(problem)
            nu = 1 - 2 * eta / (2 * math.pi)
            row["omega_time_analytic"] = sol.omega_time
            row["omega_time_boozer"] = 2 * math.pi * math.sqrt(1 - nu * nu)
            row["lambda"] = float(sol.lambda_rate.coeffs[basis.index("Jz")])
            row["grid_oracle_omega_time"] = (
                grid_oracle(problem).omega_time if oracle else float("nan")
            )
            row["error"] = ""
        except Exception as exc:  # recorded per row
            for key in ("omega_time_analytic", "omega_time_boozer", "lambda",
                        "grid_oracle_omega_time"):
                row.setdefault(key, float("nan"))
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


@dataclass
class OracleResult:
    omega_time: float
    theta: float
    phi_scale: float
    feasible_count: int
    candidates: list = field(default_factory=list, repr=False)


def grid_oracle(
    problem: SynthesisProblem,
    theta_step: float = 1e-4,
    phi_step: float = math.pi / 4,
    phi_limit: int = 512,
) -> OracleResult:
    """Brute-force search over ``(theta, Phi)`` with matrix-level constraints.

    ``Phi`` runs over multiples of ``phi_step`` along the target direction,
    kept only when ``exp(Phi)`` fixes the Cartan generator as a matrix; the
    first ``n_max`` admissible multiples are used.  For every ``theta`` on the
    grid the holonomy constraint is evaluated by explicit conjugation and
    accepted within roughly half a grid cell.  Applies to targets along one
    direction.
    """
    basis = problem.target_x.basis
    x = problem.target_x.matrix
    kappa = basis.trace_norm_factor()

    def knorm(m):
        # Killing norm via the trace form, batched over leading axes
        return np.sqrt(np.maximum(-kappa * np.einsum("...ij,...ji->...", m, m).real, 0.0))

    x_norm = float(knorm(x))
    if x_norm == 0:
        return OracleResult(0.0, 0.0, 0.0, 1)
    u_hat = x / x_norm
    a = problem.a_unit.matrix

    scales = []
    k = 1
    while len(scales) < problem.n_max and k <= phi_limit:
        phi = k * phi_step * u_hat
        g = _exp_anti_hermitian(phi)
        if np.linalg.norm(g @ a @ g.conj().T - a) < 1e-9:
            scales.append(k * phi_step)
        k += 1

    thetas = np.arange(1, int(round(math.pi / theta_step)) + 1) * theta_step
    thetas[-1] = min(thetas[-1], math.pi)
    w, v = np.linalg.eigh(1j * a)
    phases = np.exp(-1j * np.outer(thetas, w))  # exp(theta a) eigenvalues
    best = (math.inf, float("nan"), float("nan"))
    count = 0
    records = []
    for s in scales:
        phi = s * u_hat
        phi_e = v.conj().T @ phi @ v
        # Ad_{exp(theta a)} phi in the eigenbasis of a
        plus = phases[:, :, None] * phi_e[None] * phases.conj()[:, None, :]
        minus = phases.conj()[:, :, None] * phi_e[None] * phases[:, None, :]
        x_cand = phi_e[None] - 0.5 * (plus + minus)
        p_cand = 0.5 * (plus - minus)
        x_e = v.conj().T @ x @ v
        miss = knorm(x_cand - x_e[None])
        step = knorm(np.diff(x_cand, axis=0))
        tol = 0.55 * np.maximum(np.concatenate([step, step[-1:]]),
                                np.concatenate([step[:1], step])) + 1e-12
        ok = miss <= tol
        omega_t = knorm(p_cand)
        for i in np.nonzero(ok)[0]:
            count += 1
            records.append((float(thetas[i]), s, float(omega_t[i])))
            if omega_t[i] < best[0]:
                best = (float(omega_t[i]), float(thetas[i]), s)
    return OracleResult(best[0], best[1], best[2], count, records)
