"""Native gate set and the schedule compiler.

Every physical operation is a CCR(phi, theta) pulse on one of the twelve
transitions: a rotation by ``theta`` about the equatorial axis
``-sin(phi) x + cos(phi) y`` of the two-level subspace the transition connects,
identity elsewhere. ``phi = 0`` is a y rotation and ``CCR(-pi/2, pi)`` is the
x-axis pi-pulse.

Diagonal phases are free. On hardware they are realised by advancing the frame
of every later pulse touching the affected basis states; here they are applied
directly as zero-duration diagonal unitaries, which is equivalent for any
schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from trimon.core import DIM, QUBITS, StateError, density_matrix, purity
from trimon.device import DeviceParams, Transition, default_device, transition_between

PRUNE_EPS = 1e-12


@dataclass(frozen=True)
class CCRPulse:
    transition: Transition
    phi: float
    theta: float
    duration: float

    def unitary(self) -> np.ndarray:
        return ccr_unitary(self.transition, self.phi, self.theta)


@dataclass(frozen=True)
class VirtualPhase:
    phases: tuple[float, ...]
    duration: float = field(default=0.0, init=False)

    def __post_init__(self):
        if len(self.phases) != DIM:
            raise ValueError(f"a virtual phase needs {DIM} phases")

    def unitary(self) -> np.ndarray:
        return virtual_phase(self.phases)

    def __add__(self, other: "VirtualPhase") -> "VirtualPhase":
        return VirtualPhase(tuple(a + b for a, b in zip(self.phases, other.phases)))


NativeGate = Union[CCRPulse, VirtualPhase]


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered native gates.

    ``output_permutation`` relabels measured outcomes in software
    (``outcome -> output_permutation[outcome]``), e.g. the A<->C bit reversal
    after a QFT.
    """

    gates: tuple[NativeGate, ...] = ()
    label: str = ""
    output_permutation: tuple[int, ...] | None = None

    @property
    def pulses(self) -> list[CCRPulse]:
        return [g for g in self.gates if isinstance(g, CCRPulse)]

    @property
    def pulse_count(self) -> int:
        return len(self.pulses)

    @property
    def virtual_count(self) -> int:
        return sum(isinstance(g, VirtualPhase) for g in self.gates)

    @property
    def total_duration(self) -> float:
        return float(sum(p.duration for p in self.pulses))

    def __add__(self, other: "PulseSchedule") -> "PulseSchedule":
        label = "+".join(x for x in (self.label, other.label) if x)
        return PulseSchedule(self.gates + other.gates, label, other.output_permutation or self.output_permutation)

    def __len__(self) -> int:
        return len(self.gates)

    def relabel(self, label: str) -> "PulseSchedule":
        return PulseSchedule(self.gates, label, self.output_permutation)

    def unitary(self) -> np.ndarray:
        u = np.eye(DIM, dtype=complex)
        for g in self.gates:
            u = g.unitary() @ u
        return u


def schedule(gates: Iterable[NativeGate], label: str = "") -> PulseSchedule:
    return PulseSchedule(tuple(gates), label)


def concat(schedules: Iterable[PulseSchedule], label: str = "") -> PulseSchedule:
    gates: list[NativeGate] = []
    perm = None
    for s in schedules:
        gates.extend(s.gates)
        perm = s.output_permutation or perm
    return PulseSchedule(tuple(gates), label, perm)


def rotation_block(phi: float, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, -np.exp(-1j * phi) * s], [np.exp(1j * phi) * s, c]],
        dtype=complex,
    )


def ccr_unitary(t: Transition, phi: float, theta: float) -> np.ndarray:
    u = np.eye(DIM, dtype=complex)
    idx = [t.lower, t.upper]
    u[np.ix_(idx, idx)] = rotation_block(phi, theta)
    return u


def virtual_phase(phases: Sequence[float]) -> np.ndarray:
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (DIM,):
        raise ValueError(f"a virtual phase needs {DIM} phases")
    return np.diag(np.exp(1j * phases))


def phase_on(indices: Iterable[int], angle: float) -> VirtualPhase:
    """CC-theta style gate: ``angle`` on each listed basis state."""
    phases = [0.0] * DIM
    for j in indices:
        phases[j] += angle
    return VirtualPhase(tuple(phases))


def ccr_pulse(t: Transition, phi: float, theta: float, device: DeviceParams | None = None) -> CCRPulse:
    device = device or default_device()
    return CCRPulse(t, float(phi), float(theta), device.pulse_length(t, theta))


def qubit_transitions(qubit: str) -> list[Transition]:
    return [Transition(qubit, n1, n2) for n1 in (0, 1) for n2 in (0, 1)]


def compile_rotation(qubit: str, phi: float, theta: float, device: DeviceParams | None = None) -> PulseSchedule:
    """Single-qubit rotation as four CCR pulses, one per partner configuration."""
    device = device or default_device()
    gates = tuple(ccr_pulse(t, phi, theta, device) for t in qubit_transitions(qubit))
    return PulseSchedule(gates, f"R{qubit}({phi:.4g},{theta:.4g})")


def y_rotation(qubit: str, theta: float, device: DeviceParams | None = None) -> PulseSchedule:
    return compile_rotation(qubit, 0.0, theta, device)


def x_rotation(qubit: str, theta: float, device: DeviceParams | None = None) -> PulseSchedule:
    return compile_rotation(qubit, -np.pi / 2, theta, device)


def compile_ccnot(t: Transition, device: DeviceParams | None = None) -> PulseSchedule:
    """x-axis pi-pulse plus a pi/2 subspace phase: an exact 2-cycle permutation."""
    pulse = ccr_pulse(t, -np.pi / 2, np.pi, device)
    return PulseSchedule((pulse, phase_on((t.lower, t.upper), np.pi / 2)), f"CCNOT[{t.name}]")


def compile_cnot(control: str, target: str, device: DeviceParams | None = None) -> PulseSchedule:
    if control == target:
        raise ValueError("control and target must differ")
    if control not in QUBITS or target not in QUBITS:
        raise ValueError("unknown qubit")
    spectator = next(q for q in QUBITS if q not in (control, target))
    parts = [
        compile_ccnot(transition_between(target, {control: 1, spectator: s}), device)
        for s in (0, 1)
    ]
    return concat(parts, f"CNOT[{control}->{target}]")


def compile_state_aware(sched: PulseSchedule, known_input, eps: float = PRUNE_EPS) -> PulseSchedule:
    """Drop pulses that act on an empty subspace for a known pure input.

    The state is tracked gate by gate; a CCR pulse whose two levels carry total
    population below ``eps`` at that point is omitted.

    Raises:
        StateError: if ``known_input`` is not a pure state.
    """
    psi = np.asarray(known_input, dtype=complex)
    if psi.shape == (DIM, DIM):
        if abs(purity(psi) - 1.0) > 1e-10:
            raise StateError("state-aware compilation needs a pure input")
        w, v = np.linalg.eigh(psi)
        psi = v[:, -1]
    psi = psi.reshape(DIM)
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise StateError("input state is not normalized")
    kept: list[NativeGate] = []
    for g in sched.gates:
        if isinstance(g, CCRPulse):
            t = g.transition
            if abs(psi[t.lower]) ** 2 + abs(psi[t.upper]) ** 2 < eps:
                continue
        psi = g.unitary() @ psi
        kept.append(g)
    return PulseSchedule(tuple(kept), sched.label, sched.output_permutation)


def ideal_output(sched: PulseSchedule, psi0=None) -> np.ndarray:
    psi = np.zeros(DIM, dtype=complex)
    if psi0 is None:
        psi[0] = 1.0
    else:
        psi = np.asarray(psi0, dtype=complex).reshape(DIM)
    return sched.unitary() @ psi


def ideal_density(sched: PulseSchedule, psi0=None) -> np.ndarray:
    return density_matrix(ideal_output(sched, psi0))


# ----------------------------------------------------------------------------
# text dump


def dump_schedule(sched: PulseSchedule) -> str:
    lines = []
    for g in sched.gates:
        if isinstance(g, CCRPulse):
            lines.append(f"CCR {g.transition.name} {g.phi:.12g} {g.theta:.12g} {g.duration * 1e9:.12g}")
        else:
            lines.append("VPHASE " + " ".join(f"{p:.12g}" for p in g.phases))
    return "\n".join(lines) + ("\n" if lines else "")


def load_schedule(text: str, label: str = "") -> PulseSchedule:
    gates: list[NativeGate] = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, *rest = line.split()
        try:
            if head == "CCR" and len(rest) == 4:
                gates.append(CCRPulse(Transition.parse(rest[0]), float(rest[1]), float(rest[2]), float(rest[3]) * 1e-9))
            elif head == "VPHASE" and len(rest) == DIM:
                gates.append(VirtualPhase(tuple(float(x) for x in rest)))
            else:
                raise ValueError("unrecognised gate")
        except ValueError as exc:
            raise ValueError(f"line {n}: {exc}: {raw!r}") from None
    return PulseSchedule(tuple(gates), label)
