"""Preparation schedules for the benchmark entangled and product states."""

from __future__ import annotations

import numpy as np

from trimon.core import DIM, ket
from trimon.device import DeviceParams, Transition
from trimon.gates import PulseSchedule, ccr_pulse, compile_ccnot, compile_state_aware, concat, phase_on, schedule, y_rotation

# first pulse of the W preparation leaves 1/3 of the population in |100>
W_THETA = 2 * np.arcsin(1 / np.sqrt(3))

REFERENCE_STATES = {
    "bell": np.array([1, 0, 0, 0, 0, 0, 1, 0], dtype=complex) / np.sqrt(2),
    "ghz": np.array([1, 0, 0, 0, 0, 0, 0, 1j], dtype=complex) / np.sqrt(2),
    "w": np.array([0, 1, 1, 0, 1, 0, 0, 0], dtype=complex) / np.sqrt(3),
    "eqsup": np.ones(DIM, dtype=complex) / np.sqrt(DIM),
}

# simulated fidelities these preparations are benchmarked against
REFERENCE_SIM_FIDELITY = {"bell": 0.967, "ghz": 0.951, "w": 0.965, "eqsup": 0.959}

_ALIASES = {"equalsuperposition": "eqsup", "equal_superposition": "eqsup", "werner": "w"}


def _key(name: str) -> str:
    key = name.lower().replace(" ", "")
    key = _ALIASES.get(key, key)
    if key not in REFERENCE_STATES:
        raise ValueError(f"unknown reference state {name!r}")
    return key


def target_state(name: str) -> np.ndarray:
    return REFERENCE_STATES[_key(name)].copy()


def prepare_reference(name: str, device: DeviceParams | None = None) -> PulseSchedule:
    """Pulse schedule preparing a reference state from ``|000>``.

    Bell uses 2 pulses, GHZ 3, W 3 and the equal superposition 7, the last
    via state-aware pruning of three y rotations. The ``i`` on ``|111>`` of the
    GHZ state is a free diagonal phase.
    """
    key = _key(name)
    t = Transition.parse
    if key in ("bell", "ghz"):
        s = schedule([ccr_pulse(t("AB0C0"), 0.0, np.pi / 2, device)]) + compile_ccnot(t("BC0A1"), device)
        if key == "ghz":
            s = s + compile_ccnot(t("CA1B1"), device) + schedule([phase_on([DIM - 1], np.pi / 2)])
    elif key == "w":
        s = schedule([
            ccr_pulse(t("AB0C0"), 0.0, W_THETA, device),
            ccr_pulse(t("BC0A0"), 0.0, np.pi / 2, device),
        ]) + compile_ccnot(t("CA0B0"), device)
    else:
        blind = concat(y_rotation(q, np.pi / 2, device) for q in "ABC")
        s = compile_state_aware(blind, ket(0))
    return s.relabel(key)
