"""27-setting three-qubit state tomography with maximum-likelihood reconstruction.

Each qubit is measured along z, x or y. The x and y settings prepend a
rotation that maps the chosen axis onto z: ``-pi/2`` about y for x and
``+pi/2`` about x for y. Rotations are compiled to four CCR pulses each and
applied in the order A, B, C.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.optimize import minimize

from trimon.channels import NoiseModel, ReadoutModel, evolve_schedule, expected_populations, measure_populations
from trimon.core import DIM, QUBITS, ground_state, state_fidelity, uhlmann_fidelity
from trimon.device import DeviceParams, default_device
from trimon.gates import PulseSchedule, concat, x_rotation, y_rotation

AXES = ("z", "x", "y")
SETTINGS: tuple[tuple[str, str, str], ...] = tuple(product(AXES, repeat=3))


def pre_rotation(setting, device: DeviceParams | None = None) -> PulseSchedule:
    parts = []
    for qubit, axis in zip(QUBITS, setting):
        if axis == "x":
            parts.append(y_rotation(qubit, -np.pi / 2, device))
        elif axis == "y":
            parts.append(x_rotation(qubit, np.pi / 2, device))
        elif axis != "z":
            raise ValueError(f"unknown measurement axis {axis!r}")
    return concat(parts, "".join(setting))


@dataclass(frozen=True)
class TomographyRecord:
    settings: tuple[tuple[str, str, str], ...]
    probabilities: np.ndarray  # (27, 8), rows sum to one
    shots: int | None = None  # None: exact expectation values

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float)
        if probs.shape != (len(self.settings), DIM):
            raise ValueError("one 8-outcome distribution per setting is required")
        if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-6):
            raise ValueError("setting populations must sum to one")

    @property
    def counts(self) -> np.ndarray:
        return np.asarray(self.probabilities) * (self.shots or 1)

    def to_dict(self) -> dict:
        return {
            "shots": self.shots,
            "settings": [
                {"setting": "".join(s), "populations": list(map(float, p))}
                for s, p in zip(self.settings, self.probabilities)
            ],
        }


def acquire_tomography(
    prep: PulseSchedule,
    device: DeviceParams | None = None,
    noise: NoiseModel | None = None,
    readout: ReadoutModel | None = None,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
    *,
    readout_noise: bool = True,
    rho0: np.ndarray | None = None,
) -> TomographyRecord:
    """Simulate the tomography experiment for the state prepared by ``prep``.

    Args:
        prep: state preparation acting on ``rho0`` (default ``|000>``).
        noise: decoherence applied to every pulse, including pre-rotations.
        readout: voltage readout model; ``None`` means perfect discrimination.
        shots: shots per readout round; ``None`` gives exact expectations.
        readout_noise: whether the swap pulses of the readout rounds decohere.
    """
    device = device or default_device()
    rho = evolve_schedule(ground_state() if rho0 is None else rho0, prep, noise)
    swap_noise = noise if readout_noise else None
    streams = (rng if rng is not None else np.random.default_rng()).spawn(len(SETTINGS)) if shots else [None] * len(SETTINGS)
    probs = []
    for setting, stream in zip(SETTINGS, streams):
        state = evolve_schedule(rho, pre_rotation(setting, device), noise)
        if shots is None:
            probs.append(expected_populations(state, readout, swap_noise, device))
        else:
            probs.append(measure_populations(state, shots, readout, swap_noise, stream, device).p)
    return TomographyRecord(SETTINGS, np.array(probs), shots)


def measurement_operators(settings=SETTINGS) -> np.ndarray:
    """Rows ``vec(E^T)`` so that ``p = ops @ rho.ravel()`` for each outcome."""
    rows = []
    for setting in settings:
        u = pre_rotation(setting).unitary()
        for j in range(DIM):
            e = np.outer(u[j].conj(), u[j])  # U^dag |j><j| U
            rows.append(e.T.ravel())
    return np.array(rows)


def linear_inversion(record: TomographyRecord) -> np.ndarray:
    """Least-squares estimate projected onto the density matrices."""
    ops = measurement_operators(record.settings)
    x, *_ = np.linalg.lstsq(ops, np.asarray(record.probabilities).ravel(), rcond=None)
    rho = x.reshape(DIM, DIM)
    rho = (rho + rho.conj().T) / 2
    w, v = np.linalg.eigh(rho)
    rho = (v * np.clip(w, 0, None)) @ v.conj().T
    return rho / np.trace(rho).real


_TRIL = np.tril_indices(DIM)


def _unpack(x: np.ndarray) -> np.ndarray:
    n = len(_TRIL[0])
    t = np.zeros((DIM, DIM), dtype=complex)
    t[_TRIL] = x[:n] + 1j * x[n:]
    return t


def _pack(t: np.ndarray) -> np.ndarray:
    v = t[_TRIL]
    return np.concatenate([v.real, v.imag])


def _start_point(rho: np.ndarray) -> np.ndarray:
    """Lower-triangular ``T`` with ``T^dag T = rho`` (slightly regularized)."""
    rho = rho + 1e-3 * np.eye(DIM)
    flip = np.eye(DIM)[::-1]
    low = np.linalg.cholesky(flip @ rho @ flip)
    return (flip @ low @ flip).conj().T


def neg_log_likelihood(x: np.ndarray, ops: np.ndarray, freqs: np.ndarray, floor: float = 1e-12):
    """Multinomial negative log-likelihood per shot and its gradient in the
    64 real parameters of ``T``."""
    t = _unpack(x)
    a = t.conj().T @ t
    tr = np.trace(a).real
    rho = a / tr
    p = np.maximum(np.real(ops @ rho.ravel()), floor)
    nll = -float(freqs @ np.log(p))
    g = (ops.T @ (-freqs / p)).reshape(DIM, DIM).T  # d nll / d rho
    m = (g - np.trace(g @ rho).real * np.eye(DIM)) / tr
    grad = (2 * (t @ m))[_TRIL]
    return nll, np.concatenate([grad.real, grad.imag])


@dataclass(frozen=True)
class Reconstruction:
    rho: np.ndarray
    converged: bool
    iterations: int
    neg_log_likelihood: float

    def fidelity(self, target: np.ndarray) -> float:
        """Root fidelity against a state vector or density matrix."""
        target = np.asarray(target)
        if target.ndim == 1:
            return state_fidelity(self.rho, target)
        return uhlmann_fidelity(target, self.rho)


def mle_reconstruct(record: TomographyRecord, max_iter: int = 5000, tol: float = 1e-12) -> Reconstruction:
    """Maximum-likelihood density matrix for a complete tomography record.

    ``rho = T^dag T / Tr(T^dag T)`` with lower-triangular complex ``T``
    (64 real parameters), so every iterate is a valid state. The multinomial
    log-likelihood of the counts is maximized with L-BFGS and an analytic
    gradient. Hitting ``max_iter`` returns the best iterate with
    ``converged=False``.
    """
    if len(record.settings) != len(SETTINGS):
        raise ValueError("a complete 27-setting record is required")
    ops = measurement_operators(record.settings)
    counts = np.asarray(record.counts, dtype=float).ravel()
    freqs = counts / counts.sum()

    x0 = _pack(_start_point(linear_inversion(record)))
    res = minimize(neg_log_likelihood, x0, args=(ops, freqs), jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-10})
    t = _unpack(res.x)
    rho = t.conj().T @ t
    rho = rho / np.trace(rho).real
    rho = (rho + rho.conj().T) / 2
    return Reconstruction(rho=rho, converged=bool(res.success), iterations=int(res.nit), neg_log_likelihood=float(res.fun))
