"""Numerical kernel for compact matrix Lie algebras.

Elements are stored as real coefficient vectors over an ordered basis of
anti-Hermitian, traceless generators.  A Hermitian operator ``G`` enters the
algebra as ``-iG``; the presets label such a generator by ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import schur

from .errors import (
    BasisMismatch,
    ExpansionResidualExceeded,
    LogBranchAmbiguous,
    NotInSpan,
)

GENERATOR_TOL = 1e-12
EXPANSION_TOL = 1e-10
BRANCH_TOL = 1e-9
SPAN_TOL = 1e-8


class GeneratorBasis:
    """Ordered basis of a real matrix Lie algebra.

    Structure constants, the adjoint representation and the Killing metric
    are derived from the matrices once, at construction.

    Args:
        name: Identifier of the basis.
        labels: One label per generator.
        matrices: Array of shape ``(d, n, n)``; each entry anti-Hermitian and
            traceless.
        killing_scale: Raw Killing value ``0.5 * Re Tr(ad_g ad_g)`` assigned
            to a unit-norm element.  Defaults to the value of the first
            generator, so that generator has unit norm.
    """

    def __init__(
        self,
        name: str,
        labels: Sequence[str],
        matrices,
        killing_scale: float | None = None,
    ):
        mats = np.asarray(matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError("matrices must have shape (d, n, n)")
        if len(labels) != mats.shape[0]:
            raise ValueError("one label per generator is required")
        if len(set(labels)) != len(labels):
            raise ValueError("generator labels must be unique")
        for label, g in zip(labels, mats):
            if np.max(np.abs(g + g.conj().T)) > GENERATOR_TOL:
                raise ValueError(f"generator {label!r} is not anti-Hermitian")
            if abs(np.trace(g)) > GENERATOR_TOL:
                raise ValueError(f"generator {label!r} is not traceless")

        self.name = name
        self.labels = tuple(labels)
        self.matrices = mats
        self.matrices.setflags(write=False)
        self.dim = mats.shape[0]
        self.dim_group = mats.shape[1]

        n2 = self.dim_group**2
        flat = mats.reshape(self.dim, n2).T
        self._real_frame = np.vstack([flat.real, flat.imag])
        if np.linalg.matrix_rank(self._real_frame, tol=1e-10) < self.dim:
            raise ValueError("generators are linearly dependent")
        self._pinv = np.linalg.pinv(self._real_frame)

        self.structure_constants = self._compute_structure_constants()
        # ad_matrices[i] is the adjoint matrix of generator i
        self.ad_matrices = np.transpose(self.structure_constants, (1, 0, 2)).copy()
        self.killing_raw_metric = 0.5 * np.einsum(
            "akj,bjk->ab", self.ad_matrices, self.ad_matrices
        )
        if killing_scale is None:
            killing_scale = self.killing_raw_metric[0, 0]
        if killing_scale == 0:
            raise ValueError("Killing form vanishes on the reference generator")
        self.killing_scale = float(killing_scale)
        self.metric = self.killing_raw_metric / self.killing_scale
        self._orthonormal = None

    def __repr__(self):
        return f"GeneratorBasis({self.name!r}, dim={self.dim}, n={self.dim_group})"

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"basis {self.name!r} has no generator {label!r}") from None

    def expand_matrix(self, m, tol: float = EXPANSION_TOL) -> np.ndarray:
        """Real coefficients of ``m`` in this basis.

        Raises:
            ExpansionResidualExceeded: ``m`` is not in the real span.
        """
        m = np.asarray(m, dtype=complex)
        v = m.reshape(-1)
        rhs = np.concatenate([v.real, v.imag])
        coeffs = self._pinv @ rhs
        residual = np.linalg.norm(self._real_frame @ coeffs - rhs)
        if residual > tol * max(1.0, np.linalg.norm(rhs)):
            raise ExpansionResidualExceeded(
                f"matrix not in span of basis {self.name!r} (residual {residual:.3e})"
            )
        return coeffs

    def matrix_of(self, coeffs) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs, dtype=float), self.matrices, axes=1)

    def _compute_structure_constants(self) -> np.ndarray:
        d = self.dim
        c = np.zeros((d, d, d))
        for i in range(d):
            for j in range(i + 1, d):
                gi, gj = self.matrices[i], self.matrices[j]
                coeffs = self.expand_matrix(gi @ gj - gj @ gi)
                c[:, i, j] = coeffs
                c[:, j, i] = -coeffs
        return c

    @property
    def orthonormal_frame(self):
        """``(L, Linv)`` with ``metric = L @ L.T``; ``L.T @ x`` gives
        Killing-orthonormal coordinates."""
        if self._orthonormal is None:
            try:
                chol = np.linalg.cholesky(self.metric)
            except np.linalg.LinAlgError:
                raise ValueError(
                    f"Killing form of basis {self.name!r} is not definite"
                ) from None
            self._orthonormal = (chol, np.linalg.inv(chol))
        return self._orthonormal

    def element(self, coeffs=None, **by_label) -> "AlgebraElement":
        """Build an element from a coefficient vector or label keywords."""
        vec = np.zeros(self.dim) if coeffs is None else np.array(coeffs, dtype=float)
        for label, value in by_label.items():
            vec[self.index(label)] += value
        return AlgebraElement(self, vec)

    def generator(self, label: str) -> "AlgebraElement":
        vec = np.zeros(self.dim)
        vec[self.index(label)] = 1.0
        return AlgebraElement(self, vec)

    def from_matrix(self, m) -> "AlgebraElement":
        return AlgebraElement(self, self.expand_matrix(m))

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, np.zeros(self.dim))

    def identity(self) -> "GroupElement":
        return GroupElement(self, np.eye(self.dim_group, dtype=complex))

    def trace_norm_factor(self) -> float:
        """Factor ``kappa`` with ``|X|^2 = -kappa * Tr(X X)`` on simple algebras."""
        g = self.matrices[0]
        return float(self.metric[0, 0] / -np.trace(g @ g).real)


def _check_same(a: GeneratorBasis, b: GeneratorBasis):
    if a is not b:
        raise BasisMismatch(f"elements live in different bases: {a.name!r} vs {b.name!r}")


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    basis: GeneratorBasis
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float).reshape(-1)
        if coeffs.shape[0] != self.basis.dim:
            raise ValueError(
                f"expected {self.basis.dim} coefficients, got {coeffs.shape[0]}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def matrix(self) -> np.ndarray:
        return self.basis.matrix_of(self.coeffs)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _check_same(self.basis, other.basis)
        return AlgebraElement(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        _check_same(self.basis, other.basis)
        return AlgebraElement(self.basis, self.coeffs - other.coeffs)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.basis, -self.coeffs)

    def __mul__(self, scalar: float) -> "AlgebraElement":
        return AlgebraElement(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "AlgebraElement":
        return AlgebraElement(self.basis, self.coeffs / float(scalar))

    def norm(self) -> float:
        return float(np.sqrt(max(killing_form(self, self), 0.0)))

    def allclose(self, other: "AlgebraElement", atol: float = 1e-10) -> bool:
        _check_same(self.basis, other.basis)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol))

    def as_dict(self) -> dict[str, float]:
        return {label: float(c) for label, c in zip(self.basis.labels, self.coeffs)}


@dataclass(frozen=True, eq=False)
class GroupElement:
    basis: GeneratorBasis
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        n = self.basis.dim_group
        if m.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got shape {m.shape}")
        if np.linalg.norm(m.conj().T @ m - np.eye(n)) > 1e-10:
            raise ValueError("group element is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        _check_same(self.basis, other.basis)
        return GroupElement(self.basis, self.matrix @ other.matrix)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.basis, self.matrix.conj().T)

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))


def commutator(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    """``[x, y]`` computed from matrices and re-expanded in the basis."""
    _check_same(x.basis, y.basis)
    mx, my = x.matrix, y.matrix
    return AlgebraElement(x.basis, x.basis.expand_matrix(mx @ my - my @ mx))


def adjoint_matrix(x: AlgebraElement) -> np.ndarray:
    """Real matrix of ``ad_x`` acting on coefficient vectors."""
    return np.tensordot(x.coeffs, x.basis.ad_matrices, axes=1)


def killing_raw(x: AlgebraElement, y: AlgebraElement) -> float:
    """``0.5 * Re Tr(ad_x ad_y)`` without normalization."""
    _check_same(x.basis, y.basis)
    return float(x.coeffs @ x.basis.killing_raw_metric @ y.coeffs)


def killing_form(x: AlgebraElement, y: AlgebraElement) -> float:
    """Killing form rescaled so the basis reference generator has unit norm.

    Positive definite on compact algebras.
    """
    _check_same(x.basis, y.basis)
    return float(x.coeffs @ x.basis.metric @ y.coeffs)


def _exp_anti_hermitian(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(1j * m)
    return (v * np.exp(-1j * w)) @ v.conj().T


def group_exp(x: AlgebraElement) -> GroupElement:
    return GroupElement(x.basis, _exp_anti_hermitian(x.matrix))


def principal_log_matrix(u: np.ndarray) -> np.ndarray:
    """Principal logarithm of a unitary matrix, phases in ``(-pi, pi)``."""
    t, z = schur(np.asarray(u, dtype=complex), output="complex")
    phases = np.angle(np.diag(t))
    if np.any(np.pi - np.abs(phases) < BRANCH_TOL):
        raise LogBranchAmbiguous("eigenvalue at -1: principal logarithm is not unique")
    return (z * (1j * phases)) @ z.conj().T


def group_log(u: GroupElement) -> AlgebraElement:
    """Principal logarithm as an algebra element.

    Raises:
        LogBranchAmbiguous: an eigenvalue lies within ``1e-9`` of -1.
        NotInSpan: the logarithm leaves the span of the basis.
    """
    log_m = principal_log_matrix(u.matrix)
    try:
        coeffs = u.basis.expand_matrix(log_m, tol=SPAN_TOL)
    except ExpansionResidualExceeded as exc:
        raise NotInSpan(str(exc)) from None
    return AlgebraElement(u.basis, coeffs)


def adjoint_functions(theta: AlgebraElement) -> tuple[np.ndarray, np.ndarray]:
    """Matrices of ``cos ad`` and ``i sin ad`` for ``theta``.

    On a compact algebra ``ad_theta`` is antisymmetric in Killing-orthonormal
    coordinates, so both functions follow from one Hermitian eigensolve.
    Returned matrices act on coefficient vectors; their sum is the matrix of
    conjugation by ``exp(theta)``.
    """
    chol, chol_inv = theta.basis.orthonormal_frame
    ad = adjoint_matrix(theta)
    ad_on = chol.T @ ad @ chol_inv.T
    ad_on = 0.5 * (ad_on - ad_on.T)
    w, v = np.linalg.eigh(1j * ad_on)
    vh = v.conj().T
    cos_on = ((v * np.cos(w)) @ vh).real
    sin_on = ((v * (-1j * np.sin(w))) @ vh).real
    back = chol_inv.T
    return back @ cos_on @ chol.T, back @ sin_on @ chol.T


def euler_conjugate(
    theta: AlgebraElement, x: AlgebraElement
) -> tuple[AlgebraElement, AlgebraElement]:
    """Split ``exp(theta) x exp(-theta)`` into its even and odd parts.

    Returns ``(cos_part, sin_part)``: the even and odd series in ``ad_theta``
    applied to ``x``.  ``cos_part + sin_part`` equals the conjugated element.
    """
    _check_same(theta.basis, x.basis)
    cos_m, sin_m = adjoint_functions(theta)
    return (
        AlgebraElement(x.basis, cos_m @ x.coeffs),
        AlgebraElement(x.basis, sin_m @ x.coeffs),
    )


def conjugate(g: GroupElement, x: AlgebraElement) -> AlgebraElement:
    """``Ad_g(x) = g x g^-1`` re-expanded in the basis."""
    _check_same(g.basis, x.basis)
    m = g.matrix @ x.matrix @ g.matrix.conj().T
    return AlgebraElement(x.basis, x.basis.expand_matrix(m))
