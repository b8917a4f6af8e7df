"""Transition-selective standard and interleaved randomized benchmarking.

The system is first moved from ``|000>`` to the lower level of the benchmarked
transition with CCNOT pulses. Random Clifford sequences, each closed by its
recovery Clifford, then act on the two-level subspace, and the initialization
is undone in reverse order. The sequence fidelity is the ``|000>`` population
and is fitted to ``A p^N + B``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from trimon.channels import NoiseModel, ReadoutModel, evolve_schedule, ground_fraction
from trimon.core import DIM, bit, evolve, ground_state, populations
from trimon.device import DeviceParams, Transition, default_device, transition_between
from trimon.experiments.clifford import clifford_group, compose, identify, inverse
from trimon.gates import CCRPulse, PulseSchedule, compile_ccnot, concat


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class RBConfig:
    """Randomized-benchmarking run settings.

    ``depolarizing`` injects a depolarizing channel of that strength on the
    transition subspace after every Clifford. ``interleaved_error`` injects a
    depolarizing channel after the interleaved gate, scaled so that gate's
    average infidelity equals the given value.
    """

    transition: Transition
    lengths: tuple[int, ...] = tuple(range(1, 41))
    sequences_per_length: int = 10
    shots: int | None = 30_000
    interleaved_gate: CCRPulse | None = None
    depolarizing: float = 0.0
    interleaved_error: float = 0.0
    reference_p: float | None = None

    def __post_init__(self):
        if not self.lengths or min(self.lengths) < 1:
            raise ValueError("sequence lengths must be positive")
        if self.sequences_per_length < 1:
            raise ValueError("need at least one sequence per length")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be at least 1")
        if not 0 <= self.depolarizing <= 1 or not 0 <= self.interleaved_error <= 0.5:
            raise ValueError("injected error out of range")
        g = self.interleaved_gate
        if g is not None and (not isinstance(g, CCRPulse) or g.transition != self.transition):
            raise ValueError("the interleaved gate must be a CCR pulse on the benchmarked transition")


@dataclass(frozen=True)
class DecayFit:
    A: float
    p: float
    B: float
    identifiable: bool = True

    @property
    def f_avg(self) -> float:
        return (1 + self.p) / 2


@dataclass(frozen=True)
class RBResult:
    points: tuple[tuple[int, float, float], ...]  # (N, mean fidelity, standard error)
    fit: DecayFit
    f_avg: float
    f_gate: float | None = None
    p_ref: float | None = None
    reference: "RBResult | None" = field(default=None, repr=False)
    sequence_fidelities: np.ndarray | None = field(default=None, repr=False)


def interleaved_gate_fidelity(p_ref: float, p_gate: float) -> float:
    return 1 - (1 - p_gate / p_ref) / 2


def fit_decay(points: Sequence[tuple[float, float]]) -> DecayFit:
    """Bounded least-squares fit of ``F = A p^N + B``.

    Constraints ``A >= 0``, ``0 < p <= 1``, ``0 <= B <= 1``. Constant data
    cannot fix ``p``; it is reported with ``p = 1`` and ``identifiable=False``.

    Raises:
        ValueError: with fewer than four distinct lengths.
        FitError: if no start point converges.
    """
    data = np.array(sorted((float(n), float(f)) for n, f in points))
    if len(np.unique(data[:, 0])) < 4:
        raise ValueError("at least four distinct sequence lengths are required")
    n, f = data[:, 0], data[:, 1]
    if np.ptp(f) < 1e-12:
        return DecayFit(A=0.0, p=1.0, B=float(np.clip(f.mean(), 0, 1)), identifiable=False)

    def resid(x):
        return x[0] * x[1] ** n + x[2] - f

    best = None
    b0 = float(np.clip(f.min() - 0.05, 0, 1))
    for p0 in (0.999, 0.99, 0.95, 0.8, 0.5):
        a0 = max((f[0] - b0) / p0 ** n[0], 1e-3)
        res = least_squares(resid, [a0, p0, b0], bounds=([0, 1e-9, 0], [np.inf, 1, 1]),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20_000)
        if best is None or res.cost < best.cost - 1e-18:
            best = res
    if best is None or not np.all(np.isfinite(best.x)):
        raise FitError("decay fit failed")
    a, p, b = best.x
    return DecayFit(A=float(a), p=float(p), B=float(b))


def subspace_depolarizing(t: Transition, strength: float) -> list[np.ndarray]:
    """Depolarizing Kraus set on ``t``'s two levels, identity on the rest."""
    idx = [t.lower, t.upper]
    ops = []
    from trimon.experiments.clifford import PAULIS

    for k, pauli in enumerate((np.eye(2, dtype=complex),) + PAULIS):
        u = np.eye(DIM, dtype=complex)
        u[np.ix_(idx, idx)] = pauli
        w = 1 - 3 * strength / 4 if k == 0 else strength / 4
        ops.append(np.sqrt(w) * u)
    return ops


def initialization(t: Transition, device: DeviceParams | None = None) -> PulseSchedule:
    """CCNOTs moving ``|000>`` to the lower level of ``t`` (zero to two pulses)."""
    target = t.lower
    bits = {"A": 0, "B": 0, "C": 0}
    parts = []
    for q in "ABC":
        if bit(target, q):
            parts.append(compile_ccnot(transition_between(q, bits), device))
            bits[q] = 1
    return concat(parts, f"init[{t.name}]")


def _reverse(s: PulseSchedule) -> PulseSchedule:
    # each CCNOT block is self-inverse, so reversing block order undoes it
    blocks = [s.gates[i:i + 2] for i in range(0, len(s.gates), 2)]
    return PulseSchedule(tuple(g for b in reversed(blocks) for g in b), s.label + "^-1")


def _sequence_fidelity(
    indices: Sequence[int],
    config: RBConfig,
    device: DeviceParams,
    noise: NoiseModel | None,
    readout: ReadoutModel | None,
    rng: np.random.Generator,
    interleave: bool,
) -> float:
    t = config.transition
    group = clifford_group(t)
    init = initialization(t, device)
    dep = subspace_depolarizing(t, config.depolarizing) if config.depolarizing else None
    gate = config.interleaved_gate if interleave else None
    gate_dep = subspace_depolarizing(t, 2 * config.interleaved_error) if gate is not None and config.interleaved_error else None
    gate_index = identify(gate.unitary()[np.ix_([t.lower, t.upper], [t.lower, t.upper])]) if gate is not None else 0

    rho = evolve_schedule(ground_state(), init, noise)
    net = 0
    for c in indices:
        rho = evolve_schedule(rho, group[c].schedule(t, device), noise)
        if dep is not None:
            rho = evolve(rho, dep)
        net = compose(c, net)
        if gate is not None:
            rho = evolve_schedule(rho, PulseSchedule((gate,)), noise)
            if gate_dep is not None:
                rho = evolve(rho, gate_dep)
            net = compose(gate_index, net)
    recovery = inverse(net)
    rho = evolve_schedule(rho, group[recovery].schedule(t, device), noise)
    if dep is not None:
        rho = evolve(rho, dep)
    rho = evolve_schedule(rho, _reverse(init), noise)

    if readout is not None:
        return ground_fraction(rho, config.shots or 1, readout, rng)
    p0 = float(np.clip(populations(rho)[0], 0, 1))
    if config.shots is None:
        return p0
    return rng.binomial(config.shots, p0) / config.shots


def _run_curve(config, device, noise, readout, rng, interleave, workers):
    rng_sel, rng_shots = rng.spawn(2)
    jobs = []
    for n in config.lengths:
        for _ in range(config.sequences_per_length):
            jobs.append((n, rng_sel.integers(0, 24, size=n)))
    streams = rng_shots.spawn(len(jobs))

    def work(args):
        (n, idx), stream = args
        return _sequence_fidelity(idx, config, device, noise, readout, stream, interleave)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(work, zip(jobs, streams)))
    else:
        values = [work(a) for a in zip(jobs, streams)]
    values = np.array(values).reshape(len(config.lengths), config.sequences_per_length)
    points = tuple(
        (int(n), float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0)
        for n, v in zip(config.lengths, values)
    )
    fit = fit_decay([(n, m) for n, m, _ in points])
    return RBResult(points=points, fit=fit, f_avg=fit.f_avg, sequence_fidelities=values)


def run_rb(
    config: RBConfig,
    device: DeviceParams | None = None,
    noise: NoiseModel | None = None,
    readout: ReadoutModel | None = None,
    rng: np.random.Generator | None = None,
    workers: int = 1,
) -> RBResult:
    """Run standard RB, or interleaved RB when ``config.interleaved_gate`` is set.

    For interleaved runs a reference curve is measured first (unless
    ``config.reference_p`` is given) and ``f_gate`` is derived from the ratio
    of decay constants. Random streams are split per sequence, so results do
    not depend on ``workers``.
    """
    device = device or default_device()
    rng = rng if rng is not None else np.random.default_rng()
    rng_ref, rng_int = rng.spawn(2)
    if config.interleaved_gate is None:
        return _run_curve(config, device, noise, readout, rng_ref, False, workers)
    reference = None
    p_ref = config.reference_p
    if p_ref is None:
        reference = _run_curve(replace(config, interleaved_gate=None), device, noise, readout, rng_ref, False, workers)
        p_ref = reference.fit.p
    result = _run_curve(config, device, noise, readout, rng_int, True, workers)
    return replace(result, f_gate=interleaved_gate_fidelity(p_ref, result.fit.p), p_ref=p_ref, reference=reference)


def toffoli_pulse(t: Transition, device: DeviceParams | None = None) -> CCRPulse:
    """The transition's x-axis pi-pulse, i.e. the generalized Toffoli."""
    from trimon.gates import ccr_pulse

    return ccr_pulse(t, -np.pi / 2, np.pi, device)
