"""Cartan decompositions, restricted roots and the commutant of a Cartan subalgebra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateProbe,
    MissingConjugator,
    NotInK,
    RankUnsupported,
)
from .lie import (
    AlgebraElement,
    GeneratorBasis,
    GroupElement,
    adjoint_matrix,
    conjugate,
    group_exp,
    killing_form,
)

RELATION_TOL = 1e-10
KERNEL_TOL = 1e-9
CLUSTER_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class CartanDecomposition:
    """Split of a basis into a compact part ``k`` and a complement ``p``.

    ``conjugator`` is a matrix ``W`` realizing the group involution as
    ``U -> W U^dagger W^-1``; optional.
    """

    basis: GeneratorBasis
    k_indices: tuple[int, ...]
    p_indices: tuple[int, ...]
    conjugator: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        k, p = tuple(self.k_indices), tuple(self.p_indices)
        if set(k) & set(p):
            raise ValueError("k and p index sets overlap")
        if sorted(k + p) != list(range(self.basis.dim)):
            raise ValueError("k and p must partition the basis")
        object.__setattr__(self, "k_indices", k)
        object.__setattr__(self, "p_indices", p)
        if self.conjugator is not None:
            w = np.array(self.conjugator, dtype=complex)
            n = self.basis.dim_group
            if w.shape != (n, n) or np.linalg.norm(w.conj().T @ w - np.eye(n)) > 1e-10:
                raise ValueError("conjugator must be an n x n unitary matrix")
            object.__setattr__(self, "conjugator", w)

    @classmethod
    def from_labels(cls, basis, k_labels, p_labels, conjugator=None):
        return cls(
            basis,
            tuple(basis.index(s) for s in k_labels),
            tuple(basis.index(s) for s in p_labels),
            conjugator,
        )

    @property
    def involution_sign(self) -> np.ndarray:
        sign = np.ones(self.basis.dim)
        sign[list(self.p_indices)] = -1.0
        return sign

    def k_part(self, x: AlgebraElement) -> AlgebraElement:
        mask = np.zeros(self.basis.dim)
        mask[list(self.k_indices)] = 1.0
        return AlgebraElement(x.basis, x.coeffs * mask)

    def p_part(self, x: AlgebraElement) -> AlgebraElement:
        mask = np.zeros(self.basis.dim)
        mask[list(self.p_indices)] = 1.0
        return AlgebraElement(x.basis, x.coeffs * mask)


@dataclass
class Violation:
    relation: str
    first: str
    second: str
    residual: float


@dataclass
class VerificationReport:
    passed: bool
    max_residual: dict[str, float]
    violations: list[Violation]

    def summary(self) -> str:
        lines = [f"decomposition {'passes' if self.passed else 'FAILS'}"]
        for v in self.violations:
            lines.append(f"  {v.relation}: ({v.first}, {v.second}) residual {v.residual:.3e}")
        return "\n".join(lines)


def _component_norm(basis: GeneratorBasis, coeffs, indices) -> float:
    idx = list(indices)
    sub = coeffs[idx]
    return float(np.sqrt(abs(sub @ basis.metric[np.ix_(idx, idx)] @ sub)))


def verify_decomposition(d: CartanDecomposition, tol: float = RELATION_TOL) -> VerificationReport:
    """Check ``[k,k] < k``, ``[p,p] < k``, ``[p,k] < p`` and Killing orthogonality.

    Violations are collected, never raised.
    """
    basis = d.basis
    c = basis.structure_constants
    labels = basis.labels
    kset = set(d.k_indices)
    relations = {"[k,k]<k": 0.0, "[p,p]<k": 0.0, "[p,k]<p": 0.0, "killing(k,p)=0": 0.0}
    violations = []

    for i in range(basis.dim):
        for j in range(i + 1, basis.dim):
            bracket = c[:, i, j]
            ik, jk = i in kset, j in kset
            if ik and jk:
                name, wrong = "[k,k]<k", d.p_indices
            elif not ik and not jk:
                name, wrong = "[p,p]<k", d.p_indices
            else:
                name, wrong = "[p,k]<p", d.k_indices
            r = _component_norm(basis, bracket, wrong)
            relations[name] = max(relations[name], r)
            if r > tol:
                violations.append(Violation(name, labels[i], labels[j], r))

    for i in d.k_indices:
        for j in d.p_indices:
            r = abs(basis.metric[i, j])
            relations["killing(k,p)=0"] = max(relations["killing(k,p)=0"], r)
            if r > tol:
                violations.append(Violation("killing(k,p)=0", labels[i], labels[j], r))

    return VerificationReport(not violations, relations, violations)


def _gram_schmidt(vectors, metric, tol=1e-9):
    out = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for u in out:
            w = w - (u @ metric @ w) * u
        n = math.sqrt(max(w @ metric @ w, 0.0))
        if n > tol:
            out.append(w / n)
    return out


@dataclass(frozen=True, eq=False)
class CartanSubalgebraChoice:
    """Abelian ``a`` inside ``p`` together with its commutant ``m`` inside ``k``.

    ``m_elements`` is a Killing-orthonormal basis of ``m``; it is computed,
    not read from the basis, since ``m`` need not be spanned by generators.
    """

    decomposition: CartanDecomposition
    a_indices: tuple[int, ...]
    m_elements: tuple[AlgebraElement, ...]

    @property
    def basis(self) -> GeneratorBasis:
        return self.decomposition.basis

    @property
    def rank(self) -> int:
        return len(self.a_indices)

    @property
    def a_generators(self) -> list[AlgebraElement]:
        """Unit-norm generators of ``a`` in basis order."""
        gens = []
        for i in self.a_indices:
            g = self.basis.generator(self.basis.labels[i])
            gens.append(g / g.norm())
        return gens

    def theta_element(self, theta: float) -> AlgebraElement:
        """``theta`` times the unit generator of a rank-one ``a``."""
        if self.rank != 1:
            raise RankUnsupported("theta_element needs a rank-one Cartan subalgebra")
        return self.a_generators[0] * theta

    def m_part(self, x: AlgebraElement) -> AlgebraElement:
        out = self.basis.zero()
        for m in self.m_elements:
            out = out + m * killing_form(m, x)
        return out


def make_subalgebra(d: CartanDecomposition, a_labels: Sequence[str]) -> CartanSubalgebraChoice:
    """Build the Cartan subalgebra choice and compute its commutant in ``k``."""
    basis = d.basis
    a_idx = tuple(basis.index(s) for s in a_labels)
    if not a_idx:
        raise ValueError("a must contain at least one generator")
    if not set(a_idx) <= set(d.p_indices):
        raise ValueError("a must lie inside p")
    c = basis.structure_constants
    for i in a_idx:
        for j in a_idx:
            if np.max(np.abs(c[:, i, j])) > RELATION_TOL:
                raise ValueError("a is not abelian")

    k_idx = list(d.k_indices)
    stacked = np.vstack([basis.ad_matrices[i][:, k_idx] for i in a_idx])
    _, s, vt = np.linalg.svd(stacked)
    scale = max(s.max(), 1.0) if s.size else 1.0
    null = [vt[r] for r in range(vt.shape[0]) if r >= s.size or s[r] < KERNEL_TOL * scale]
    full = []
    for v in null:
        w = np.zeros(basis.dim)
        w[k_idx] = v
        full.append(w)
    m_vecs = _gram_schmidt(full, basis.metric)
    m_vecs = [v if v[np.argmax(np.abs(v))] > 0 else -v for v in m_vecs]
    m = tuple(AlgebraElement(basis, v) for v in m_vecs)
    return CartanSubalgebraChoice(d, a_idx, m)


@dataclass(frozen=True, eq=False)
class RestrictedRoot:
    """One root direction: ``[T, E] = alpha(T) F`` and ``[T, F] = -alpha(T) E``.

    ``alpha_coeffs`` are per unit-norm generator of ``a``.
    """

    alpha_coeffs: np.ndarray
    e_vector: AlgebraElement
    f_vector: AlgebraElement
    g_alpha: float

    def alpha(self, theta_coeffs) -> float:
        return float(np.dot(self.alpha_coeffs, np.atleast_1d(theta_coeffs)))


@dataclass(frozen=True, eq=False)
class RestrictedRootSystem:
    subalgebra: CartanSubalgebraChoice
    roots: tuple[RestrictedRoot, ...]
    probe: np.ndarray

    def families(self, tol: float = 1e-8) -> list[tuple[np.ndarray, list[RestrictedRoot]]]:
        """Roots grouped by equal ``alpha``, ordered by increasing ``alpha``."""
        groups: list[tuple[np.ndarray, list[RestrictedRoot]]] = []
        for r in self.roots:
            for alpha, members in groups:
                if np.allclose(alpha, r.alpha_coeffs, atol=tol, rtol=0):
                    members.append(r)
                    break
            else:
                groups.append((r.alpha_coeffs, [r]))
        return groups

    def multiplicities(self) -> list[tuple[float, int]]:
        return [(float(alpha[0]), len(members)) for alpha, members in self.families()]


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    order = np.argsort(values)
    scale = max(float(np.max(np.abs(values))), 1e-300)
    clusters: list[list[int]] = []
    prev = None
    for idx in order:
        v = values[idx]
        if prev is not None:
            gap = (v - prev) / scale
            if gap <= tol:
                clusters[-1].append(int(idx))
                prev = v
                continue
            if gap < 1e3 * tol:
                raise DegenerateProbe(
                    f"eigenvalue gap {gap:.2e} is too close to the clustering tolerance"
                )
        clusters.append([int(idx)])
        prev = v
    return clusters


def default_probe(rank: int) -> np.ndarray:
    pattern = np.sqrt(np.arange(1, rank + 1, dtype=float))
    return pattern / np.linalg.norm(pattern)


def compute_roots(
    c: CartanSubalgebraChoice, probe=None, cluster_tol: float = CLUSTER_TOL
) -> RestrictedRootSystem:
    """Restricted roots from the spectrum of ``ad^2`` of a probe on ``p`` minus ``a``.

    ``probe`` gives the probe's coordinates along the unit generators of
    ``a`` (must be positive for rank one).  Within a degenerate cluster the
    root vectors are aligned with basis generators where possible.

    Raises:
        RankUnsupported: ``a`` has dimension above one.
        DegenerateProbe: clusters cannot be separated at tolerance.
    """
    if c.rank != 1:
        raise RankUnsupported(f"rank {c.rank} Cartan subalgebras are not supported")
    basis = c.basis
    metric = basis.metric
    probe = default_probe(c.rank) if probe is None else np.atleast_1d(np.asarray(probe, float))
    if probe.shape != (c.rank,) or probe[0] <= 0:
        raise ValueError("rank-one probe must be a single positive number")
    a_gens = c.a_generators
    theta0 = a_gens[0] * probe[0]
    ad = adjoint_matrix(theta0)

    # Killing-orthonormal frame of p with a projected out
    a_vecs = [g.coeffs for g in a_gens]
    p_vecs = []
    for i in c.decomposition.p_indices:
        e = np.zeros(basis.dim)
        e[i] = 1.0
        p_vecs.append(e)
    frame = _gram_schmidt(a_vecs + p_vecs, metric)[len(a_vecs):]
    q = np.array(frame).T
    neg_ad2 = -(q.T @ metric @ ad @ ad @ q)
    neg_ad2 = 0.5 * (neg_ad2 + neg_ad2.T)
    w, v = np.linalg.eigh(neg_ad2)
    if np.any(w < -1e-9 * max(1.0, np.max(np.abs(w)))):
        raise ValueError("ad^2 is not negative semidefinite: algebra is not compact")
    if np.any(np.abs(w) <= cluster_tol * max(1.0, np.max(np.abs(w)))):
        raise ValueError("a is not maximal abelian in p (zero restricted root)")

    roots = []
    for cluster in _cluster(w, cluster_tol):
        alpha0 = float(np.sqrt(np.mean(w[cluster])))
        span = q @ v[:, cluster]
        # metric-orthogonal projector onto the cluster span
        proj = span @ span.T @ metric
        cands = []
        for i in c.decomposition.p_indices:
            e = np.zeros(basis.dim)
            e[i] = 1.0
            pe = proj @ e
            cands.append((-round(math.sqrt(max(pe @ metric @ pe, 0.0)), 9), i, pe))
        cands.sort(key=lambda t: (t[0], t[1]))
        e_vecs = _gram_schmidt([t[2] for t in cands], metric)[: len(cluster)]
        for e in e_vecs:
            if e[np.argmax(np.abs(e))] < 0:
                e = -e
            e_el = AlgebraElement(basis, e)
            f_el = AlgebraElement(basis, ad @ e / alpha0)
            roots.append(
                RestrictedRoot(
                    alpha_coeffs=np.array([alpha0 / probe[0]]),
                    e_vector=e_el,
                    f_vector=f_el,
                    g_alpha=killing_form(e_el, e_el),
                )
            )
    return RestrictedRootSystem(c, tuple(roots), probe)


def _require_conjugator(d: CartanDecomposition) -> np.ndarray:
    if d.conjugator is None:
        raise MissingConjugator("decomposition carries no conjugator matrix")
    return d.conjugator


def cartan_involution(d: CartanDecomposition, u: GroupElement) -> GroupElement:
    """``U -> W U^dagger W^-1``; inverts ``K`` and fixes ``exp(a)``."""
    w = _require_conjugator(d)
    return GroupElement(u.basis, w @ u.matrix.conj().T @ w.conj().T)


def cartan_project(d: CartanDecomposition, u: GroupElement) -> GroupElement:
    """``pi(U) = U^chi U``; trivial on ``K``."""
    return cartan_involution(d, u) @ u


def commutant_condition(
    c: CartanSubalgebraChoice, phi: AlgebraElement, tol: float = 1e-9
) -> tuple[bool, float]:
    """Whether ``exp(phi)`` fixes every generator of ``a`` under conjugation.

    Returns the flag and the largest Killing-norm residual.

    Raises:
        NotInK: ``phi`` has a component in ``p`` above ``1e-10``.
    """
    d = c.decomposition
    if d.p_part(phi).norm() > 1e-10:
        raise NotInK("phi must lie in k")
    g = group_exp(phi)
    residual = 0.0
    for a in c.a_generators:
        residual = max(residual, (conjugate(g, a) - a).norm())
    return residual < tol, residual


def commutant_period(
    c: CartanSubalgebraChoice, direction: AlgebraElement, max_denominator: int = 64
) -> float:
    """Smallest ``tau > 0`` with ``exp(tau * direction)`` in the commutant.

    ``direction`` is normalized first.  The frequencies of ``ad_direction``
    seen by the generators of ``a`` must be rationally related.
    """
    u = direction / direction.norm()
    chol, chol_inv = c.basis.orthonormal_frame
    ad_on = chol.T @ adjoint_matrix(u) @ chol_inv.T
    w, v = np.linalg.eigh(1j * 0.5 * (ad_on - ad_on.T))
    freqs = []
    for a in c.a_generators:
        weights = np.abs(v.conj().T @ (chol.T @ a.coeffs))
        freqs.extend(abs(float(f)) for f, wt in zip(w, weights) if wt > 1e-9 and abs(f) > 1e-9)
    if not freqs:
        raise ValueError("direction commutes with a: every tau is admissible")
    base = min(freqs)
    ratios = []
    for f in freqs:
        r = Fraction(f / base).limit_denominator(max_denominator)
        if abs(float(r) - f / base) > 1e-9:
            raise ValueError("incommensurate frequencies: no finite commutant period")
        ratios.append(r)
    num = 0
    den = 1
    for r in ratios:
        num = math.gcd(num, r.numerator)
        den = den * r.denominator // math.gcd(den, r.denominator)
    tau = 2 * math.pi / (base * num / den)
    ok, residual = commutant_condition(c, u * tau)
    if not ok:
        raise ArithmeticError(f"commutant period check failed (residual {residual:.2e})")
    return tau
