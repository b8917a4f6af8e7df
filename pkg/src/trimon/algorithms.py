"""Three-qubit Deutsch-Jozsa, Bernstein-Vazirani, Grover and QFT circuits.

All circuits are ancilla-free. Single-qubit rotations cost four CCR pulses
each, CNOTs two CCNOTs, and every diagonal oracle or controlled phase is a
zero-duration virtual phase.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from trimon.channels import NoiseModel, ReadoutModel, evolve_schedule, measure_populations
from trimon.core import DIM, QUBITS, basis_bits, bit, bit_reversal, ground_state, populations
from trimon.device import DeviceParams, default_device
from trimon.gates import PulseSchedule, VirtualPhase, compile_cnot, concat, phase_on, schedule, x_rotation, y_rotation

DJ_BALANCED = ("A", "B", "C", "A^B", "B^C", "C^A", "A^BC", "B^CA", "C^AB", "AB^BC^CA")
DJ_ORACLES = ("constant0", "constant1") + DJ_BALANCED
QFT_PERIODS = (1, 2, 4, 8)
PHASE_SWEEP = tuple(2 * np.pi * k / 16 for k in range(16))

CLASSICAL_BOUNDS = {"dj": 0.5, "bv": 0.25, "grover": 0.25}


def classical_bound(algorithm: str) -> float:
    """Best single-query classical success rate."""
    try:
        return CLASSICAL_BOUNDS[algorithm.lower()]
    except KeyError:
        raise ValueError(f"no classical bound for {algorithm!r}") from None


# ----------------------------------------------------------------------------
# oracle descriptions


def _normalize_function(name: str) -> str:
    return name.upper().replace("⊕", "^").replace("XOR", "^").replace(" ", "")


@dataclass(frozen=True)
class DJ:
    function: str  # "constant0", "constant1" or a balanced expression such as "A^BC"

    def __post_init__(self):
        f = self.function.lower()
        if f in ("constant0", "constant1", "0", "1"):
            object.__setattr__(self, "function", "constant" + f[-1])
            return
        norm = _normalize_function(self.function)
        if norm not in DJ_BALANCED:
            raise ValueError(f"unknown Deutsch-Jozsa oracle {self.function!r}")
        object.__setattr__(self, "function", norm)

    @property
    def constant(self) -> bool:
        return self.function.startswith("constant")

    @property
    def label(self) -> str:
        return self.function

    def evaluate(self, j: int) -> int:
        if self.constant:
            return int(self.function[-1])
        value = 0
        for term in self.function.split("^"):
            value ^= int(all(bit(j, q) for q in term))
        return value


@dataclass(frozen=True)
class BV:
    c: tuple[int, int, int]

    def __post_init__(self):
        c = self.c
        if isinstance(c, str):
            c = tuple(int(x) for x in c)
        c = tuple(int(x) for x in c)
        if len(c) != 3 or any(x not in (0, 1) for x in c):
            raise ValueError(f"BV string must be three bits, got {self.c!r}")
        object.__setattr__(self, "c", c)

    @property
    def label(self) -> str:
        return "".join(map(str, self.c))

    @property
    def index(self) -> int:
        return 4 * self.c[0] + 2 * self.c[1] + self.c[2]


@dataclass(frozen=True)
class Grover:
    marked: int

    def __post_init__(self):
        if not 0 <= self.marked < DIM:
            raise ValueError("marked state must be a basis index 0..7")

    @property
    def label(self) -> str:
        return "".join(map(str, basis_bits(self.marked)))


@dataclass(frozen=True)
class Comb:
    period: int

    def __post_init__(self):
        if self.period not in QFT_PERIODS:
            raise ValueError(f"comb period must be one of {QFT_PERIODS}")

    @property
    def label(self) -> str:
        return f"comb{self.period}"

    def amplitudes(self) -> np.ndarray:
        a = np.array([1.0 if j % self.period == 0 else 0.0 for j in range(DIM)], dtype=complex)
        return a / np.linalg.norm(a)


@dataclass(frozen=True)
class Phase:
    phi: float

    @property
    def label(self) -> str:
        return f"phase{self.phi:.6f}"

    def amplitudes(self) -> np.ndarray:
        # qubit of weight 2^k carries exp(-i 2^k phi) on |1>
        return np.exp(-1j * self.phi * np.arange(DIM)) / np.sqrt(DIM)


@dataclass(frozen=True)
class QFT:
    input: Union[Comb, Phase]

    @property
    def label(self) -> str:
        return self.input.label


OracleSpec = Union[DJ, BV, Grover, QFT]


def algorithm_name(oracle: OracleSpec) -> str:
    return {DJ: "dj", BV: "bv", Grover: "grover", QFT: "qft"}[type(oracle)]


# ----------------------------------------------------------------------------
# circuits


def _layer(angle: float, qubits: Sequence[str], device, signs: Sequence[int] | None = None) -> PulseSchedule:
    signs = signs or [1] * len(qubits)
    return concat(y_rotation(q, s * angle, device) for q, s in zip(qubits, signs))


def dj_phase_oracle(function: str) -> VirtualPhase:
    """``(-1)^f(x)`` as one virtual phase: a Z for every linear term, a CZ for
    every product term."""
    oracle = DJ(function)
    if oracle.constant:
        raise ValueError("constant oracles are not phase oracles")
    phases = [0.0] * DIM
    for term in oracle.function.split("^"):
        for j in range(DIM):
            if all(bit(j, q) for q in term):
                phases[j] += np.pi
    return VirtualPhase(tuple(float(np.mod(p, 2 * np.pi)) for p in phases))


def _dj_bv_prep(device) -> PulseSchedule:
    return _layer(np.pi / 2, QUBITS, device, (1, 1, -1))


def _dj_bv_unprep(device) -> PulseSchedule:
    return _layer(np.pi / 2, QUBITS, device, (-1, -1, 1))


def build_dj(oracle: DJ | str, device: DeviceParams | None = None) -> PulseSchedule:
    oracle = oracle if isinstance(oracle, DJ) else DJ(oracle)
    if oracle.function == "constant0":
        body = PulseSchedule()
    elif oracle.function == "constant1":
        body = x_rotation("C", np.pi, device)
    else:
        body = schedule([dj_phase_oracle(oracle.function)])
    return concat([_dj_bv_prep(device), body, _dj_bv_unprep(device)], f"dj:{oracle.label}")


def build_bv(c, device: DeviceParams | None = None) -> PulseSchedule:
    oracle = c if isinstance(c, BV) else BV(c)
    parts = [_dj_bv_prep(device)]
    if oracle.c[0]:
        parts.append(compile_cnot("A", "C", device))
    if oracle.c[1]:
        parts.append(compile_cnot("B", "C", device))
    if oracle.c[2]:
        parts.append(y_rotation("C", np.pi, device))
    parts.append(_dj_bv_unprep(device))
    return concat(parts, f"bv:{oracle.label}")


def build_grover(marked: int, device: DeviceParams | None = None) -> PulseSchedule:
    """Single Grover iteration with a CCZ oracle and a CCZ_000 diffusion."""
    oracle = marked if isinstance(marked, Grover) else Grover(int(marked))
    parts = [
        _layer(np.pi / 2, QUBITS, device),
        schedule([phase_on([oracle.marked], np.pi)]),
        _layer(-np.pi / 2, QUBITS, device),
        schedule([phase_on([0], np.pi)]),
        _layer(np.pi / 2, QUBITS, device),
    ]
    return concat(parts, f"grover:{oracle.label}")


def _states_with(*qubits: str) -> list[int]:
    return [j for j in range(DIM) if all(bit(j, q) for q in qubits)]


def build_qft(device: DeviceParams | None = None) -> PulseSchedule:
    """QFT with -Y(pi/2) in place of Hadamards and a software A<->C swap.

    Since ``-Y(pi/2) = Z H`` and the trailing Z commutes with every later
    gate, the schedule equals the textbook QFT up to a ``(-1)^popcount``
    phase on each output state, invisible to measurement.
    """
    parts = [
        y_rotation("A", -np.pi / 2, device),
        schedule([phase_on(_states_with("A", "B"), np.pi / 2), phase_on(_states_with("A", "C"), np.pi / 4)]),
        y_rotation("B", -np.pi / 2, device),
        schedule([phase_on(_states_with("B", "C"), np.pi / 2)]),
        y_rotation("C", -np.pi / 2, device),
    ]
    s = concat(parts, "qft")
    return PulseSchedule(s.gates, "qft", tuple(bit_reversal(j) for j in range(DIM)))


def qft_input_state(spec: Comb | Phase, device: DeviceParams | None = None) -> PulseSchedule:
    """Product-state preparation for the period-finding and phase-estimation inputs."""
    if isinstance(spec, Comb):
        # period p keeps the top log2(8/p) bits free
        free = {1: "ABC", 2: "AB", 4: "A", 8: ""}[spec.period]
        return concat((y_rotation(q, np.pi / 2, device) for q in free), spec.label)
    if isinstance(spec, Phase):
        z = VirtualPhase(tuple(float(-spec.phi * j) for j in range(DIM)))
        return concat([_layer(np.pi / 2, QUBITS, device), schedule([z])], spec.label)
    raise TypeError(f"unsupported QFT input {spec!r}")


def build_algorithm(oracle: OracleSpec, device: DeviceParams | None = None) -> PulseSchedule:
    if isinstance(oracle, DJ):
        return build_dj(oracle, device)
    if isinstance(oracle, BV):
        return build_bv(oracle, device)
    if isinstance(oracle, Grover):
        return build_grover(oracle, device)
    if isinstance(oracle, QFT):
        qft = build_qft(device)
        return concat([qft_input_state(oracle.input, device), qft], f"qft:{oracle.label}")
    raise TypeError(f"unsupported oracle {oracle!r}")


# ----------------------------------------------------------------------------
# analytic references (independent of the pulse compiler)


def dft_matrix() -> np.ndarray:
    k = np.arange(DIM)
    return np.exp(2j * np.pi * np.outer(k, k) / DIM) / np.sqrt(DIM)


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _kron3(a, b, c) -> np.ndarray:
    return np.kron(np.kron(a, b), c)


def target_distribution(oracle: OracleSpec) -> np.ndarray:
    """Ideal outcome distribution from textbook linear algebra."""
    if isinstance(oracle, DJ):
        prep = _kron3(_ry(np.pi / 2), _ry(np.pi / 2), _ry(-np.pi / 2))
        if oracle.function == "constant1":
            x = np.array([[0, 1], [1, 0]], dtype=complex)
            body = _kron3(np.eye(2), np.eye(2), x)
        else:
            body = np.diag([(-1.0) ** oracle.evaluate(j) for j in range(DIM)]).astype(complex)
        psi = prep.conj().T @ body @ prep[:, 0]
        return np.abs(psi) ** 2
    if isinstance(oracle, BV):
        t = np.zeros(DIM)
        t[oracle.index] = 1.0
        return t
    if isinstance(oracle, Grover):
        t = np.full(DIM, 1 / 32)
        t[oracle.marked] = 25 / 32
        return t
    if isinstance(oracle, QFT):
        return np.abs(dft_matrix() @ oracle.input.amplitudes()) ** 2
    raise TypeError(f"unsupported oracle {oracle!r}")


def success_probability(oracle: OracleSpec, distribution: np.ndarray) -> float:
    d = np.asarray(distribution, dtype=float)
    if isinstance(oracle, DJ):
        return float(d[0]) if oracle.constant else float(1 - d[0])
    if isinstance(oracle, BV):
        return float(d[oracle.index])
    if isinstance(oracle, Grover):
        return float(d[oracle.marked])
    if isinstance(oracle, QFT):
        t = target_distribution(oracle)
        best = np.isclose(t, t.max(), atol=1e-9)
        return float(d[best].sum())
    raise TypeError(f"unsupported oracle {oracle!r}")


def sso(t, e, tol: float = 1e-6) -> float:
    """Squared statistical overlap ``(sum_j sqrt(t_j e_j))^2``."""
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    for name, v in (("t", t), ("e", e)):
        if v.shape != (DIM,) or np.any(v < -tol) or abs(v.sum() - 1) > tol:
            raise ValueError(f"{name} is not a normalized 8-outcome distribution")
    return float(min(np.sum(np.sqrt(np.clip(t, 0, None) * np.clip(e, 0, None))) ** 2, 1.0))


# ----------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class AlgorithmResult:
    algorithm: str
    oracle: str
    distribution: np.ndarray
    success_probability: float
    sso: float | None
    shots: int | None
    discarded_fraction: float
    classical_bound: float | None = None
    exact_distribution: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "oracle": self.oracle,
            "shots": self.shots,
            "distribution": [float(x) for x in self.distribution],
            "success_probability": self.success_probability,
            "sso": self.sso,
            "classical_bound": self.classical_bound,
            "discarded_fraction": self.discarded_fraction,
        }


def run_algorithm(
    sched: PulseSchedule,
    oracle: OracleSpec,
    device: DeviceParams | None = None,
    noise: NoiseModel | None = None,
    readout: ReadoutModel | None = None,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> AlgorithmResult:
    """Execute ``sched`` from ``|000>`` and score it against ``oracle``.

    With ``readout=None`` populations are read perfectly: exactly when
    ``shots`` is ``None``, otherwise by multinomial sampling. A readout model
    runs the four-round discard protocol (``shots`` per round, default 20000),
    whose swap pulses see ``noise`` too.
    """
    device = device or default_device()
    rho = evolve_schedule(ground_state(), sched, noise)
    exact = populations(rho)
    exact = exact / exact.sum()
    discarded = 0.0
    if readout is not None:
        shots = shots or 20_000
        rng = rng if rng is not None else np.random.default_rng()
        est = measure_populations(rho, shots, readout, noise, rng, device)
        dist = est.p
        discarded = float(np.mean(est.discarded_fraction))
    elif shots is not None:
        if shots < 1:
            raise ValueError("shots must be at least 1")
        rng = rng if rng is not None else np.random.default_rng()
        dist = rng.multinomial(shots, exact) / shots
    else:
        dist = exact
    if sched.output_permutation is not None:
        perm = sched.output_permutation
        dist = np.array([dist[perm.index(k)] for k in range(DIM)])
        exact = np.array([exact[perm.index(k)] for k in range(DIM)])
    name = algorithm_name(oracle)
    return AlgorithmResult(
        algorithm=name,
        oracle=oracle.label,
        distribution=dist,
        success_probability=success_probability(oracle, dist),
        sso=sso(target_distribution(oracle), dist),
        shots=shots,
        discarded_fraction=discarded,
        classical_bound=CLASSICAL_BOUNDS.get(name),
        exact_distribution=exact,
    )


def suite(algorithm: str) -> list[OracleSpec]:
    """Every oracle instance of one algorithm, in reporting order."""
    algorithm = algorithm.lower()
    if algorithm == "dj":
        return [DJ(f) for f in DJ_ORACLES]
    if algorithm == "bv":
        return [BV(tuple(basis_bits(j))) for j in range(DIM)]
    if algorithm == "grover":
        return [Grover(j) for j in range(DIM)]
    if algorithm == "qft":
        return [QFT(Comb(p)) for p in QFT_PERIODS] + [QFT(Phase(phi)) for phi in PHASE_SWEEP]
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_suite(
    oracles: Sequence[OracleSpec],
    device: DeviceParams | None = None,
    noise: NoiseModel | None = None,
    readout: ReadoutModel | None = None,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
    workers: int = 1,
) -> list[AlgorithmResult]:
    """Run oracles as independent jobs, one random stream each, in input order."""
    device = device or default_device()
    rng = rng if rng is not None else np.random.default_rng()
    streams = rng.spawn(len(oracles))

    def job(args):
        oracle, stream = args
        return run_algorithm(build_algorithm(oracle, device), oracle, device, noise, readout, shots, stream)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(job, zip(oracles, streams)))
    return [job(a) for a in zip(oracles, streams)]
