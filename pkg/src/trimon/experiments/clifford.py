"""The 24-element single-qubit Clifford group on a transition's subspace.

Elements are identified by their action on the Bloch sphere (a signed
permutation of the axes). Each one is realised by at most two CCR pulses with
``theta`` in ``{pi/2, pi}`` and ``phi`` a multiple of ``pi/4``. The shortest
realisation is found once by exhaustive search.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from trimon.device import DeviceParams, Transition
from trimon.gates import PulseSchedule, ccr_pulse, rotation_block

PAULIS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# the six cardinal Bloch states as unit vectors
CARDINAL = tuple(tuple(s * e) for e in np.eye(3) for s in (1, -1))


def bloch_rotation(u: np.ndarray) -> np.ndarray:
    """SO(3) matrix of the 2x2 unitary ``u``."""
    return np.array([[0.5 * np.trace(a @ u @ b @ u.conj().T).real for b in PAULIS] for a in PAULIS])


def _key(u: np.ndarray) -> tuple:
    return tuple(np.rint(bloch_rotation(u)).astype(int).ravel())


def _is_clifford(u: np.ndarray) -> bool:
    r = bloch_rotation(u)
    return np.allclose(r, np.rint(r), atol=1e-9)


@dataclass(frozen=True)
class CliffordElement:
    index: int
    pulses: tuple[tuple[float, float], ...]  # (phi, theta), applied left to right

    @property
    def matrix(self) -> np.ndarray:
        u = np.eye(2, dtype=complex)
        for phi, theta in self.pulses:
            u = rotation_block(phi, theta) @ u
        return u

    def schedule(self, t: Transition, device: DeviceParams | None = None) -> PulseSchedule:
        return PulseSchedule(tuple(ccr_pulse(t, phi, theta, device) for phi, theta in self.pulses), f"C{self.index}")


@lru_cache(maxsize=None)
def _table() -> tuple[tuple[CliffordElement, ...], np.ndarray, np.ndarray]:
    phis = [k * np.pi / 4 for k in range(8)]
    singles = [(phi, theta) for theta in (np.pi / 2, np.pi) for phi in phis]
    candidates = [()] + [(p,) for p in singles] + [(p, q) for p, q in product(singles, singles)]

    def cost(seq):
        # fewest pulses, then least rotation, then axes along x/y
        off_axis = sum(abs(np.sin(2 * phi)) > 1e-9 for phi, _ in seq)
        return (len(seq), round(sum(t for _, t in seq), 9), off_axis)

    best: dict[tuple, tuple] = {}
    for seq in sorted(candidates, key=cost):
        u = np.eye(2, dtype=complex)
        for phi, theta in seq:
            u = rotation_block(phi, theta) @ u
        if not _is_clifford(u):
            continue
        best.setdefault(_key(u), seq)
    if len(best) != 24:
        raise RuntimeError(f"Clifford search found {len(best)} elements")
    ordered = sorted(best.items(), key=lambda kv: (cost(kv[1]), kv[0]))
    elements = tuple(CliffordElement(i, seq) for i, (_, seq) in enumerate(ordered))
    lookup = {k: i for i, (k, _) in enumerate(ordered)}
    mats = [e.matrix for e in elements]
    mul = np.array([[lookup[_key(a @ b)] for b in mats] for a in mats])
    inv = np.array([int(np.where(row == 0)[0][0]) for row in mul])
    return elements, mul, inv


def clifford_group(t: Transition | None = None) -> tuple[CliffordElement, ...]:
    """The 24 Clifford elements; the realisation is the same for every transition."""
    return _table()[0]


def compose(a: int, b: int) -> int:
    """Index of ``U_a @ U_b`` (``b`` applied first)."""
    return int(_table()[1][a, b])


def inverse(a: int) -> int:
    return int(_table()[2][a])


def identify(u: np.ndarray) -> int:
    """Index of the Clifford equal to ``u`` up to global phase."""
    if not _is_clifford(u):
        raise ValueError("not a Clifford operation")
    elements = _table()[0]
    key = _key(u)
    for e in elements:
        if _key(e.matrix) == key:
            return e.index
    raise ValueError("not a Clifford operation")
