"""Named generator bases and Cartan decompositions, plus JSON loaders."""

from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path

import numpy as np

from .lie import GeneratorBasis

SQ3 = np.sqrt(3.0)

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def gell_mann() -> dict[str, np.ndarray]:
    """Hermitian Gell-Mann matrices keyed ``l1`` .. ``l8``."""
    lam = {f"l{k}": np.zeros((3, 3), dtype=complex) for k in range(1, 9)}
    for k, (i, j) in zip((1, 4, 6), ((0, 1), (0, 2), (1, 2))):
        lam[f"l{k}"][i, j] = lam[f"l{k}"][j, i] = 1
        lam[f"l{k + 1}"][i, j] = -1j
        lam[f"l{k + 1}"][j, i] = 1j
    lam["l3"][0, 0], lam["l3"][1, 1] = 1, -1
    lam["l8"][:] = np.diag([1, 1, -2]) / SQ3
    return lam


def h_iii_generators() -> dict[str, np.ndarray]:
    """Rotated diagonal pair adapted to the (1,2)-level split."""
    lam = gell_mann()
    return {
        "H_III": -SQ3 / 2 * lam["l3"] + 0.5 * lam["l8"],
        "H_III_perp": 0.5 * lam["l3"] + SQ3 / 2 * lam["l8"],
    }


def _anti(hermitian: dict[str, np.ndarray], labels, scale=1.0):
    return [-1j * scale * hermitian[label] for label in labels]


@lru_cache(maxsize=None)
def _su3_gellmann_scale() -> float:
    return basis_preset("su3-gellmann").killing_scale


@lru_cache(maxsize=None)
def basis_preset(name: str) -> GeneratorBasis:
    if name == "su2":
        labels = ["Jx", "Jy", "Jz"]
        mats = [-0.5j * PAULI[c] for c in "xyz"]
        return GeneratorBasis(name, labels, mats)
    if name == "su3-gellmann":
        lam = gell_mann()
        labels = [f"l{k}" for k in range(1, 9)]
        return GeneratorBasis(name, labels, _anti(lam, labels))
    if name == "su3-hIII":
        gens = {**gell_mann(), **h_iii_generators()}
        labels = ["l1", "l2", "H_III", "H_III_perp", "l4", "l5", "l6", "l7"]
        return GeneratorBasis(name, labels, _anti(gens, labels))
    if name == "su3-dalessandro":
        # generators -i*l_k/sqrt(2); norms keep the Gell-Mann scale so that
        # -i*l_k itself has unit length
        lam = gell_mann()
        labels = [f"l{k}" for k in range(1, 9)]
        return GeneratorBasis(
            name,
            labels,
            _anti(lam, labels, scale=1 / np.sqrt(2)),
            killing_scale=_su3_gellmann_scale(),
        )
    raise KeyError(f"unknown basis preset {name!r}")


BASIS_PRESETS = ("su2", "su3-gellmann", "su3-hIII", "su3-dalessandro")

# name -> (basis, k labels, p labels, a labels, conjugator)
_DECOMPOSITIONS = {
    "su2-aiii": (
        "su2",
        ["Jz"],
        ["Jx", "Jy"],
        ["Jy"],
        np.diag([np.exp(-0.5j * np.pi), np.exp(0.5j * np.pi)]),
    ),
    "su3-aiii31": (
        "su3-hIII",
        ["l1", "l2", "H_III", "H_III_perp"],
        ["l4", "l5", "l6", "l7"],
        ["l5"],
        np.diag([1.0, 1.0, -1.0]).astype(complex),
    ),
    "su3-dalessandro": (
        "su3-dalessandro",
        ["l3", "l6", "l7", "l8"],
        ["l1", "l2", "l4", "l5"],
        ["l5"],
        np.diag([-1.0, 1.0, 1.0]).astype(complex),
    ),
}

DECOMPOSITION_PRESETS = tuple(_DECOMPOSITIONS)


def decomposition_preset(name: str):
    """Return the :class:`~kpsynth.cartan.CartanSubalgebraChoice` preset."""
    from .cartan import CartanDecomposition, make_subalgebra

    try:
        basis_name, k, p, a, conj = _DECOMPOSITIONS[name]
    except KeyError:
        raise KeyError(f"unknown decomposition preset {name!r}") from None
    basis = basis_preset(basis_name)
    d = CartanDecomposition.from_labels(basis, k, p, conjugator=conj)
    return make_subalgebra(d, a)


def _complex_matrix(raw, what: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ValueError(f"{what}: expected nested [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[-1] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{what}: expected an n x n array of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def complex_matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def basis_from_dict(doc: dict) -> GeneratorBasis:
    """Custom basis: ``{"name", "dim_group", "generators": [{"label", "matrix"}]}``."""
    for key in ("name", "dim_group", "generators"):
        if key not in doc:
            raise ValueError(f"basis document is missing field {key!r}")
    labels, mats = [], []
    for i, gen in enumerate(doc["generators"]):
        if "label" not in gen or "matrix" not in gen:
            raise ValueError(f"generators[{i}] needs 'label' and 'matrix'")
        m = _complex_matrix(gen["matrix"], f"generators[{i}].matrix")
        if m.shape[0] != doc["dim_group"]:
            raise ValueError(f"generators[{i}].matrix does not match dim_group")
        labels.append(gen["label"])
        mats.append(m)
    return GeneratorBasis(doc["name"], labels, mats, killing_scale=doc.get("killing_scale"))


def basis_to_dict(basis: GeneratorBasis) -> dict:
    return {
        "name": basis.name,
        "dim_group": basis.dim_group,
        "killing_scale": basis.killing_scale,
        "generators": [
            {"label": label, "matrix": complex_matrix_to_json(m)}
            for label, m in zip(basis.labels, basis.matrices)
        ],
    }


def load_basis(source) -> GeneratorBasis:
    """Resolve a preset name, a JSON path or an already-parsed document."""
    if isinstance(source, GeneratorBasis):
        return source
    if isinstance(source, dict):
        return basis_from_dict(source)
    if source in BASIS_PRESETS:
        return basis_preset(source)
    return basis_from_dict(json.loads(Path(source).read_text()))


def decomposition_from_dict(doc: dict):
    """Custom decomposition document.

    ``{"basis", "k_labels", "p_labels", "a_labels", "conjugator_matrix"?}``
    where ``basis`` is a preset name or an inline basis document.
    """
    from .cartan import CartanDecomposition, make_subalgebra

    for key in ("basis", "k_labels", "p_labels", "a_labels"):
        if key not in doc:
            raise ValueError(f"decomposition document is missing field {key!r}")
    basis = load_basis(doc["basis"])
    conj = doc.get("conjugator_matrix")
    if conj is not None:
        conj = _complex_matrix(conj, "conjugator_matrix")
    d = CartanDecomposition.from_labels(basis, doc["k_labels"], doc["p_labels"], conjugator=conj)
    return make_subalgebra(d, doc["a_labels"])


def load_decomposition(source):
    if isinstance(source, dict):
        return decomposition_from_dict(source)
    if source in DECOMPOSITION_PRESETS:
        return decomposition_preset(source)
    return decomposition_from_dict(json.loads(Path(source).read_text()))


def hadamard_target() -> np.ndarray:
    """Hadamard-type gate on levels (1, 2), level 0 untouched."""
    s = 1 / np.sqrt(2)
    return np.array([[1, 0, 0], [0, s, 1j * s], [0, 1j * s, s]], dtype=complex)
