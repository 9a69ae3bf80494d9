"""States, POVMs and channels for one and two qubits.

Conventions used throughout the package:

* density matrices are vectorized by column stacking, so that
  ``vec(A @ B @ C) == kron(C.T, A) @ vec(B)``;
* a channel's natural representation (``SuperOp``) acts on these vectors,
  composition is the matrix product and a unitary ``U`` maps to
  ``kron(U.conj(), U)``;
* the Pauli basis is ``{I, X, Y, Z}`` per qubit, ordered lexicographically with
  qubit 0 as the left tensor factor, normalized so that it is orthonormal
  under the Hilbert-Schmidt inner product.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)

ATOL = 1e-12


class PhysicalityError(ValueError):
    """Model probabilities fell outside [0, 1] beyond tolerance."""


def _check_dim(dim: int) -> None:
    if dim not in (2, 4):
        raise ValueError(f"only 1- and 2-qubit objects are supported, got dim={dim}")


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-major vectorization of a square matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    _check_dim(rho.shape[0])
    return rho.reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v).reshape(-1)
    dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    _check_dim(dim)
    return v.reshape(dim, dim, order="F")


def check_density(rho: np.ndarray, tol: float = ATOL) -> np.ndarray:
    """Validate a density matrix and return it as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    _check_dim(rho.shape[0])
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real:.3g}")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def is_unitary(u: np.ndarray, tol: float = ATOL) -> bool:
    u = np.asarray(u)
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol)


def unitary_superop(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise ValueError("matrix is not unitary")
    return np.kron(u.conj(), u)


def kraus_to_superop(kraus: Sequence[np.ndarray], tol: float = 1e-9) -> np.ndarray:
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    dim = kraus[0].shape[0]
    completeness = sum(k.conj().T @ k for k in kraus)
    if not np.allclose(completeness, np.eye(dim), atol=tol):
        raise ValueError("Kraus operators are not complete (sum K^dag K != 1)")
    return sum(np.kron(k.conj(), k) for k in kraus)


@lru_cache(maxsize=None)
def pauli_basis(n_qubits: int) -> np.ndarray:
    """Normalized Pauli strings, shape (4**n, 2**n, 2**n)."""
    dim = 2 ** n_qubits
    mats = []
    for idx in product(range(4), repeat=n_qubits):
        m = np.array([[1.0]], dtype=complex)
        for i in idx:
            m = np.kron(m, PAULIS[i])
        mats.append(m / np.sqrt(dim))
    out = np.array(mats)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _pauli_change(dim: int) -> np.ndarray:
    # columns are vec(P_i); unitary because the basis is orthonormal
    basis = pauli_basis(int(np.log2(dim)))
    b = np.stack([p.reshape(-1, order="F") for p in basis], axis=1)
    b.setflags(write=False)
    return b


def _superop_dim(s: np.ndarray) -> int:
    s = np.asarray(s)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] not in (4, 16):
        raise ValueError(f"expected a 4x4 or 16x16 superoperator, got {s.shape}")
    return int(round(np.sqrt(s.shape[0])))


def superop_to_ptm(s: np.ndarray) -> np.ndarray:
    """Pauli transfer matrix ``R_ij = tr(P_i S(P_j))``; real for Hermiticity-preserving maps."""
    b = _pauli_change(_superop_dim(s))
    r = b.conj().T @ s @ b
    if np.abs(r.imag).max() < 1e-10:
        return np.ascontiguousarray(r.real)
    return r


def ptm_to_superop(r: np.ndarray) -> np.ndarray:
    b = _pauli_change(_superop_dim(r))
    return b @ r @ b.conj().T


def state_to_pauli(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    basis = pauli_basis(int(np.log2(rho.shape[0])))
    return np.einsum("kij,ji->k", basis, rho).real


def pauli_to_state(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r)
    basis = pauli_basis(int(round(np.log(r.size) / np.log(4))))
    return np.einsum("k,kij->ij", r, basis)


_EYE4 = np.eye(4)


def embed_ptm(r1: np.ndarray, qubit: int) -> np.ndarray:
    """Lift a single-qubit PTM to act on ``qubit`` of a two-qubit register."""
    if qubit == 0:
        return (r1[:, None, :, None] * _EYE4[None, :, None, :]).reshape(16, 16)
    if qubit == 1:
        return (_EYE4[:, None, :, None] * r1[None, :, None, :]).reshape(16, 16)
    raise ValueError(f"qubit must be 0 or 1, got {qubit}")


def apply(s: np.ndarray, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if s.shape[0] != rho.size:
        raise ValueError("superoperator and state dimensions disagree")
    return unvec(s @ vec(rho))


def choi(s: np.ndarray) -> np.ndarray:
    """Normalized Choi matrix ``(S x 1)|Phi><Phi|`` with the output as the left factor."""
    dim = _superop_dim(s)
    j = np.zeros((dim * dim, dim * dim), dtype=complex)
    for a in range(dim):
        for b in range(dim):
            e_ab = np.zeros((dim, dim), dtype=complex)
            e_ab[a, b] = 1.0
            j += np.kron(unvec(s @ vec(e_ab)), e_ab)
    return j / dim


def is_trace_preserving(s: np.ndarray, tol: float = ATOL) -> bool:
    r = superop_to_ptm(s)
    first = np.zeros(r.shape[0])
    first[0] = 1.0
    return np.allclose(r[0], first, atol=tol)


def is_cp(s: np.ndarray, tol: float = 1e-10) -> bool:
    return np.linalg.eigvalsh(choi(s)).min() >= -tol


@dataclass(frozen=True)
class Povm:
    effects: tuple
    labels: tuple = field(default=())

    def __post_init__(self):
        effects = tuple(np.asarray(e, dtype=complex) for e in self.effects)
        dim = effects[0].shape[0]
        _check_dim(dim)
        if not np.allclose(sum(effects), np.eye(dim), atol=ATOL):
            raise ValueError("POVM effects do not sum to the identity")
        for e in effects:
            if not np.allclose(e, e.conj().T, atol=ATOL):
                raise ValueError("POVM effect is not Hermitian")
            if np.linalg.eigvalsh(e).min() < -1e-10:
                raise ValueError("POVM effect is not positive")
        labels = self.labels or tuple(str(i) for i in range(len(effects)))
        if len(labels) != len(effects):
            raise ValueError("number of labels does not match number of effects")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def pauli_vectors(self) -> np.ndarray:
        """Rows are Pauli coordinates of the effects, so ``p = E @ r``."""
        return np.array([state_to_pauli(e) for e in self.effects])


def computational_povm(n_qubits: int = 2) -> Povm:
    dim = 2 ** n_qubits
    effects = [np.diag(np.eye(dim)[i]).astype(complex) for i in range(dim)]
    labels = [format(i, f"0{n_qubits}b") for i in range(dim)]
    return Povm(tuple(effects), tuple(labels))


def probabilities(povm: Povm, rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape[0] != povm.dim:
        raise ValueError("POVM and state dimensions disagree")
    p = np.array([np.trace(e @ rho).real for e in povm.effects])
    if p.min() < -tol:
        raise PhysicalityError(f"negative outcome probability {p.min():.3g}")
    if abs(p.sum() - 1) > tol:
        raise PhysicalityError(f"outcome probabilities sum to {p.sum():.12g}")
    return p


def ket(label: str) -> np.ndarray:
    """State vector for a product label over {0, 1, +, -}."""
    single = {
        "0": np.array([1, 0], dtype=complex),
        "1": np.array([0, 1], dtype=complex),
        "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
        "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
    }
    v = np.array([1.0], dtype=complex)
    for ch in label:
        v = np.kron(v, single[ch])
    return v


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())
