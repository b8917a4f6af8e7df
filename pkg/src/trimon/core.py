"""Dense linear algebra on the 8-dimensional trimon computational space.

Basis states are labelled ``|n_A n_B n_C>`` and indexed by
``j = 4*n_A + 2*n_B + n_C`` (qubit A is the most significant bit).
States are plain complex numpy arrays: a length-8 vector for pure states and
an 8x8 matrix for density matrices. A channel is a sequence of Kraus matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

DIM = 8
QUBITS = ("A", "B", "C")

# bit weight of each qubit inside a basis index
_WEIGHT = {"A": 4, "B": 2, "C": 1}


@dataclass(frozen=True)
class Tolerances:
    unitary: float = 1e-10
    hermitian: float = 1e-12
    trace: float = 1e-12
    psd: float = 1e-10
    kraus: float = 1e-10
    normalization: float = 1e-12
    sqrt_clamp: float = 1e-10


TOL = Tolerances()

Kraus = Sequence[np.ndarray]
Channel = Union[np.ndarray, Kraus]


class StateError(ValueError):
    """Raised when a state or operator violates its invariants."""


def basis_index(n_a: int, n_b: int, n_c: int) -> int:
    for n in (n_a, n_b, n_c):
        if n not in (0, 1):
            raise ValueError(f"occupation must be a bit, got {n!r}")
    return 4 * n_a + 2 * n_b + n_c


def basis_bits(j: int) -> tuple[int, int, int]:
    """Inverse of :func:`basis_index`."""
    if not 0 <= j < DIM:
        raise ValueError(f"basis index out of range: {j}")
    return (j >> 2) & 1, (j >> 1) & 1, j & 1


def bit(j: int, qubit: str) -> int:
    return (j // _WEIGHT[qubit]) & 1


def weight(qubit: str) -> int:
    return _WEIGHT[qubit]


def basis_label(j: int) -> str:
    return "".join(str(b) for b in basis_bits(j))


def ket(j: int) -> np.ndarray:
    v = np.zeros(DIM, dtype=complex)
    v[j] = 1.0
    return v


def pure_state(amplitudes, normalize: bool = False) -> np.ndarray:
    psi = np.asarray(amplitudes, dtype=complex).reshape(DIM)
    norm = np.vdot(psi, psi).real
    if normalize:
        return psi / np.sqrt(norm)
    if abs(norm - 1.0) > TOL.normalization:
        raise StateError(f"state is not normalized (norm^2 = {norm:.3e})")
    return psi


def density_matrix(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(DIM)
    return np.outer(psi, psi.conj())


def ground_state() -> np.ndarray:
    return density_matrix(ket(0))


def maximally_mixed() -> np.ndarray:
    return np.eye(DIM, dtype=complex) / DIM


def check_density(rho: np.ndarray, tol: Tolerances = TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (DIM, DIM):
        raise StateError(f"density matrix must be {DIM}x{DIM}, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol.hermitian:
        raise StateError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol.trace:
        raise StateError(f"trace is {np.trace(rho).real!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -tol.psd:
        raise StateError("density matrix has negative eigenvalues")
    return rho


def is_unitary(op: np.ndarray, tol: float = TOL.unitary) -> bool:
    op = np.asarray(op)
    return bool(np.allclose(op.conj().T @ op, np.eye(op.shape[0]), atol=tol, rtol=0))


def kraus_completeness_error(kraus: Kraus) -> float:
    total = sum(k.conj().T @ k for k in kraus)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))


def evolve(rho: np.ndarray, op: Channel, tol: Tolerances = TOL) -> np.ndarray:
    """Apply a unitary (2-D array) or a Kraus set (sequence of arrays) to ``rho``.

    Raises:
        StateError: on dimension mismatch, a non-unitary matrix, or an
            incomplete Kraus set.
    """
    rho = np.asarray(rho, dtype=complex)
    if isinstance(op, np.ndarray) and op.ndim == 2:
        if op.shape != rho.shape:
            raise StateError(f"operator shape {op.shape} does not match state {rho.shape}")
        if not is_unitary(op, tol.unitary):
            raise StateError("operator is not unitary")
        return op @ rho @ op.conj().T
    kraus = [np.asarray(k, dtype=complex) for k in op]
    if not kraus:
        raise StateError("empty Kraus set")
    if any(k.shape != rho.shape for k in kraus):
        raise StateError("Kraus operator dimension does not match state")
    if kraus_completeness_error(kraus) > tol.kraus:
        raise StateError("Kraus set is not trace preserving")
    return sum(k @ rho @ k.conj().T for k in kraus)


def populations(rho: np.ndarray) -> np.ndarray:
    return np.clip(np.real(np.diag(rho)), 0.0, None)


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def sqrtm_psd(rho: np.ndarray, clamp: float = TOL.sqrt_clamp) -> np.ndarray:
    """Square root of a Hermitian PSD matrix through its eigendecomposition.

    Eigenvalues in ``[-clamp, 0)`` are set to zero; anything more negative is
    rejected.
    """
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    if w.min() < -clamp:
        raise StateError(f"matrix has eigenvalue {w.min():.3e} below -{clamp:g}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def uhlmann_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Root fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))``, clipped to [0, 1]."""
    s = sqrtm_psd(rho)
    m = s @ sigma @ s
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    if w.min() < -TOL.sqrt_clamp:
        raise StateError("argument has negative eigenvalues")
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    return min(max(f, 0.0), 1.0)


def state_fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """Root fidelity against a pure target; insensitive to global phase."""
    psi = np.asarray(psi, dtype=complex).reshape(DIM)
    return float(np.sqrt(max(np.real(np.vdot(psi, rho @ psi)), 0.0)))


def embed_single(op2: np.ndarray, qubit: str) -> np.ndarray:
    """Lift a 2x2 operator acting on one qubit to the full 8x8 space."""
    eye = np.eye(2, dtype=complex)
    factors = [op2 if q == qubit else eye for q in QUBITS]
    return np.kron(np.kron(factors[0], factors[1]), factors[2])


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Matrix sending basis state ``j`` to ``perm[j]``."""
    p = np.zeros((DIM, DIM), dtype=complex)
    for j, k in enumerate(perm):
        p[k, j] = 1.0
    return p


def bit_reversal(j: int) -> int:
    """Swap the roles of qubits A and C in a basis index."""
    a, b, c = basis_bits(j)
    return basis_index(c, b, a)
