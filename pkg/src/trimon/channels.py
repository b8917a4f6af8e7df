"""Decoherence during pulses and the joint dispersive readout.

Gate noise is modelled as the ideal pulse unitary followed by idling for the
pulse duration: amplitude damping with ``p = 1 - exp(-t/T1)`` and phase flips
with ``lambda = 1 - exp(-t/Tphi)``, ``1/Tphi = 1/T2 - 1/(2 T1)``, on each of
the three qubits.

Readout returns one scalar voltage per shot. Mean voltages follow the summed
dispersive shifts of the excited qubits, scaled so ``|000>`` sits at 0 and
``|111>`` at 1. Two demarcation lines isolate the two extreme states and every
shot in between is discarded. The other six populations are reached in three
more rounds, each preceded by a pair of CCNOT swaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from trimon.core import DIM, QUBITS, basis_bits, bit, embed_single, evolve, populations, weight
from trimon.device import DeviceParams, Transition, default_device
from trimon.gates import CCRPulse, PulseSchedule, compile_ccnot, concat

DISCARD = -1


class NoiseError(ValueError):
    pass


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    t1: Mapping[str, float]
    t2: Mapping[str, float]
    enabled: bool = True

    def __post_init__(self):
        if self.enabled:
            for q in QUBITS:
                if self.t1[q] <= 0 or self.t2[q] <= 0:
                    raise NoiseError(f"T1/T2 of qubit {q} must be positive")
                if 1 / self.t2[q] - 1 / (2 * self.t1[q]) <= 0:
                    raise NoiseError(f"qubit {q}: pure-dephasing time is not positive (T2 >= 2 T1)")

    @classmethod
    def from_device(cls, device: DeviceParams, enabled: bool = True) -> "NoiseModel":
        return cls(dict(device.t1), dict(device.t2), enabled)

    @classmethod
    def disabled(cls) -> "NoiseModel":
        return cls({q: 1.0 for q in QUBITS}, {q: 1.0 for q in QUBITS}, enabled=False)

    def tphi(self, qubit: str) -> float:
        rate = 1 / self.t2[qubit] - 1 / (2 * self.t1[qubit])
        if rate <= 0:
            raise NoiseError(f"qubit {qubit}: pure-dephasing time is not positive")
        return 1 / rate

    def scaled(self, factor: float) -> "NoiseModel":
        """Coherence times divided by ``factor`` (``factor > 1`` is noisier)."""
        return NoiseModel(
            {q: v / factor for q, v in self.t1.items()},
            {q: v / factor for q, v in self.t2.items()},
            self.enabled,
        )


def _single_qubit_kraus(p: float, lam: float) -> list[np.ndarray]:
    damp = [
        np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex),
        np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex),
    ]
    z = np.diag([1.0, -1.0]).astype(complex)
    dephase = [np.sqrt(1 - lam / 2) * np.eye(2, dtype=complex), np.sqrt(lam / 2) * z]
    return [d @ a for d in dephase for a in damp]


def decoherence_kraus(qubit: str, duration: float, noise: NoiseModel) -> list[np.ndarray]:
    """Kraus set for one qubit idling ``duration`` seconds (identity elsewhere)."""
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if not noise.enabled:
        raise NoiseError("noise model is disabled")
    if np.isinf(duration):
        p = lam = 1.0
    else:
        p = -np.expm1(-duration / noise.t1[qubit])
        lam = -np.expm1(-duration / noise.tphi(qubit))
    return [embed_single(k, qubit) for k in _single_qubit_kraus(p, lam)]


def decohere(rho: np.ndarray, duration: float, noise: NoiseModel | None) -> np.ndarray:
    if noise is None or not noise.enabled or duration == 0:
        return rho
    for q in QUBITS:
        rho = evolve(rho, decoherence_kraus(q, duration, noise))
    return rho


def evolve_schedule(rho: np.ndarray, sched: PulseSchedule, noise: NoiseModel | None = None) -> np.ndarray:
    for g in sched.gates:
        rho = evolve(rho, g.unitary())
        if isinstance(g, CCRPulse):
            rho = decohere(rho, g.duration, noise)
    return rho


# ----------------------------------------------------------------------------
# readout


@dataclass(frozen=True)
class ReadoutModel:
    mean_voltage: tuple[float, ...]
    sigma: float
    readout_decay: float
    t1: Mapping[str, float]
    demarcation: tuple[float, float]
    cavity_freq: float = 7.2742e9
    cavity_kappa: float = 3.3e6

    def __post_init__(self):
        v_low, v_high = self.demarcation
        if not v_low < v_high:
            raise ValueError("demarcation lines must satisfy v_low < v_high")
        if self.sigma < 0 or self.readout_decay < 0:
            raise ValueError("sigma and readout_decay must be non-negative")

    def decay_probability(self, qubit: str) -> float:
        return float(-np.expm1(-self.readout_decay / self.t1[qubit]))

    def classify(self, voltage):
        v = np.asarray(voltage, dtype=float)
        v_low, v_high = self.demarcation
        out = np.full(v.shape, DISCARD, dtype=int)
        out[v < v_low] = 0
        out[v > v_high] = DIM - 1
        return out if out.ndim else int(out)


def mean_voltages(chi: Mapping[str, float]) -> tuple[float, ...]:
    total = sum(chi[q] for q in QUBITS)
    if total == 0:
        raise ValueError("dispersive shifts sum to zero; voltage scale undefined")
    return tuple(
        float(sum(chi[q] * bit(j, q) for q in QUBITS) / total) for j in range(DIM)
    )


def demarcation_lines(means: Sequence[float]) -> tuple[float, float]:
    """Equal-likelihood crossings between each extreme and its nearest middle state.

    All states share one Gaussian width, so each crossing is the midpoint.
    """
    middle = means[1:DIM - 1]
    lo, hi = means[0], means[DIM - 1]
    if not all(lo < m < hi for m in middle):
        raise ValueError("|000> and |111> must be the extreme voltages")
    return (lo + min(middle)) / 2, (hi + max(middle)) / 2


def readout_model(device: DeviceParams, sigma: float, readout_decay: float) -> ReadoutModel:
    means = mean_voltages(device.chi)
    return ReadoutModel(
        mean_voltage=means,
        sigma=float(sigma),
        readout_decay=float(readout_decay),
        t1=dict(device.t1),
        demarcation=demarcation_lines(means),
        cavity_freq=device.cavity_freq or 7.2742e9,
        cavity_kappa=device.cavity_kappa or 3.3e6,
    )


def decay_distribution(j: int, model: ReadoutModel) -> dict[int, float]:
    """Distribution of the basis state present when the voltage is recorded."""
    excited = [q for q in QUBITS if bit(j, q)]
    out: dict[int, float] = {}
    for pattern in product((0, 1), repeat=len(excited)):
        prob, k = 1.0, j
        for q, decayed in zip(excited, pattern):
            pd = model.decay_probability(q)
            prob *= pd if decayed else 1 - pd
            if decayed:
                k -= weight(q)
        out[k] = out.get(k, 0.0) + prob
    return out


def outcome_probabilities(j: int, model: ReadoutModel) -> tuple[float, float, float]:
    """Exact ``(P[000], P[111], P[discard])`` for prepared basis state ``j``."""
    v_low, v_high = model.demarcation
    p0 = p7 = 0.0
    for k, w in decay_distribution(j, model).items():
        mu = model.mean_voltage[k]
        if model.sigma == 0:
            p0 += w * (mu < v_low)
            p7 += w * (mu > v_high)
        else:
            p0 += w * norm.cdf((v_low - mu) / model.sigma)
            p7 += w * norm.sf((v_high - mu) / model.sigma)
    return p0, p7, 1 - p0 - p7


def assignment_fidelities(model: ReadoutModel) -> tuple[float, float]:
    return outcome_probabilities(0, model)[0], outcome_probabilities(DIM - 1, model)[1]


def _decay_states(states: np.ndarray, model: ReadoutModel, rng: np.random.Generator) -> np.ndarray:
    states = states.copy()
    if model.readout_decay == 0:
        return states
    for q in QUBITS:
        w = weight(q)
        excited = (states & w) > 0
        decays = rng.random(states.shape) < model.decay_probability(q)
        states[excited & decays] -= w
    return states


def sample_voltages(states, model: ReadoutModel, rng: np.random.Generator) -> np.ndarray:
    states = _decay_states(np.asarray(states, dtype=int), model, rng)
    means = np.asarray(model.mean_voltage)[states]
    if model.sigma == 0:
        return means.astype(float)
    return rng.normal(means, model.sigma)


def sample_voltage(basis: int, model: ReadoutModel, rng: np.random.Generator) -> float:
    return float(sample_voltages(np.array([basis]), model, rng)[0])


# ----------------------------------------------------------------------------
# four-round population measurement

# swap pairs prepended in rounds 2-4; round 1 reads |000> and |111> directly
SWAP_ROUNDS: tuple[tuple[str, ...], ...] = (
    (),
    ("CA0B0", "CA1B1"),
    ("BC0A0", "BC1A1"),
    ("AB0C0", "AB1C1"),
)


def swap_schedule(round_index: int, device: DeviceParams | None = None) -> PulseSchedule:
    names = SWAP_ROUNDS[round_index]
    return concat((compile_ccnot(Transition.parse(n), device) for n in names), f"round{round_index + 1}")


def round_targets(round_index: int) -> tuple[int, int]:
    """Basis states read out as ``000`` and ``111`` in the given round."""
    perm = list(range(DIM))
    for name in SWAP_ROUNDS[round_index]:
        t = Transition.parse(name)
        perm[t.lower], perm[t.upper] = perm[t.upper], perm[t.lower]
    return perm[0], perm[DIM - 1]


@dataclass(frozen=True)
class PopulationEstimate:
    p: np.ndarray
    raw: np.ndarray  # classified count / shots, before renormalization
    discarded_fraction: tuple[float, ...]
    shots: int
    counts: np.ndarray = field(repr=False, default=None)


def classify_shots(probs: np.ndarray, shots: int, model: ReadoutModel | None, rng: np.random.Generator) -> tuple[int, int, int]:
    """Sample ``shots`` readouts of a state with the given populations.

    Returns counts of shots classified ``000``, ``111`` and discarded. With
    ``model=None`` the readout is perfect.
    """
    probs = np.clip(np.asarray(probs, dtype=float), 0, None)
    probs = probs / probs.sum()
    if model is None:
        counts = rng.multinomial(shots, probs)
        return int(counts[0]), int(counts[DIM - 1]), int(shots - counts[0] - counts[DIM - 1])
    states = rng.choice(DIM, size=shots, p=probs)
    labels = model.classify(sample_voltages(states, model, rng))
    n0 = int(np.count_nonzero(labels == 0))
    n7 = int(np.count_nonzero(labels == DIM - 1))
    return n0, n7, shots - n0 - n7


def measure_populations(
    rho: np.ndarray,
    shots: int,
    model: ReadoutModel | None = None,
    noise: NoiseModel | None = None,
    rng: np.random.Generator | None = None,
    device: DeviceParams | None = None,
) -> PopulationEstimate:
    """Estimate all eight z populations with the four-round discard protocol.

    Each round runs on a fresh copy of ``rho`` with ``shots`` repetitions.
    ``p[j]`` is the fraction of shots classified into the extreme state that
    ``j`` was swapped onto; the eight fractions are then normalized together.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    rng = rng if rng is not None else np.random.default_rng()
    device = device or default_device()
    streams = rng.spawn(len(SWAP_ROUNDS))
    counts = np.zeros(DIM, dtype=np.int64)
    discarded = []
    for r, stream in enumerate(streams):
        state = evolve_schedule(rho, swap_schedule(r, device), noise)
        n0, n7, nd = classify_shots(populations(state), shots, model, stream)
        lo, hi = round_targets(r)
        counts[lo] += n0
        counts[hi] += n7
        discarded.append(nd / shots)
    raw = counts / shots
    total = raw.sum()
    p = raw / total if total > 0 else np.full(DIM, 1 / DIM)
    return PopulationEstimate(p=p, raw=raw, discarded_fraction=tuple(discarded), shots=shots, counts=counts)


def expected_populations(
    rho: np.ndarray,
    model: ReadoutModel | None = None,
    noise: NoiseModel | None = None,
    device: DeviceParams | None = None,
) -> np.ndarray:
    """Infinite-shot limit of :func:`measure_populations` (normalized ``p``)."""
    device = device or default_device()
    classified = None
    if model is not None:
        classified = np.array([outcome_probabilities(k, model)[:2] for k in range(DIM)])
    raw = np.zeros(DIM)
    for r in range(len(SWAP_ROUNDS)):
        pops = populations(evolve_schedule(rho, swap_schedule(r, device), noise))
        lo, hi = round_targets(r)
        if classified is None:
            raw[lo] += pops[0]
            raw[hi] += pops[DIM - 1]
        else:
            raw[lo] += pops @ classified[:, 0]
            raw[hi] += pops @ classified[:, 1]
    return raw / raw.sum()


def ground_fraction(
    rho: np.ndarray,
    shots: int,
    model: ReadoutModel | None,
    rng: np.random.Generator,
) -> float:
    """Fraction of shots classified ``000`` in a single readout round."""
    n0, _, _ = classify_shots(populations(rho), shots, model, rng)
    return n0 / shots


# ----------------------------------------------------------------------------
# calibration


def calibrate_readout(
    targets: tuple[float, float] = (0.951, 0.852),
    params: DeviceParams | None = None,
    tol: float = 0.005,
) -> ReadoutModel:
    """Fit ``sigma`` and ``readout_decay`` so the exact ``|000>``/``|111>``
    assignment fidelities hit ``targets``.

    Raises:
        CalibrationError: if the simplex cannot reach ``tol``.
    """
    f000, f111 = targets
    if not (0 < f000 <= 1 and 0 < f111 <= 1):
        raise ValueError("target fidelities must lie in (0, 1]")
    params = params or default_device()
    decay_scale = 1e-6

    def build(x):
        return readout_model(params, abs(x[0]), abs(x[1]) * decay_scale)

    def cost(x):
        a, b = assignment_fidelities(build(x))
        return (a - f000) ** 2 + (b - f111) ** 2

    res = minimize(cost, np.array([0.1, 1.0]), method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-14, "maxiter": 4000})
    model = build(res.x)
    a, b = assignment_fidelities(model)
    if abs(a - f000) > tol or abs(b - f111) > tol:
        raise CalibrationError(f"readout calibration reached ({a:.4f}, {b:.4f}), targets {targets}")
    return model


def ideal_readout(device: DeviceParams | None = None) -> ReadoutModel:
    return readout_model(device or default_device(), 0.0, 0.0)


def histogram_rows(
    model: ReadoutModel,
    shots: int,
    rng: np.random.Generator,
    bins: int = 100,
    states: Sequence[int] = tuple(range(DIM)),
) -> list[dict]:
    """Voltage histograms of prepared basis states on a shared bin grid."""
    samples = {j: sample_voltages(np.full(shots, j), model, s) for j, s in zip(states, rng.spawn(len(states)))}
    pad = 4 * model.sigma + 1e-9
    edges = np.linspace(min(model.mean_voltage) - pad, max(model.mean_voltage) + pad, bins + 1)
    centers = (edges[:-1] + edges[1:]) / 2
    rows = []
    for j in states:
        counts, _ = np.histogram(samples[j], bins=edges)
        label = "".join(map(str, basis_bits(j)))
        rows.extend({"voltage_bin_center": c, "count": int(n), "prepared_state": label} for c, n in zip(centers, counts))
    return rows
