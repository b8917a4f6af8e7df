"""Trimon device model: transitions, calibrated parameters and spectrum fitting.

Each qubit has four transition frequencies, one per joint state of its two
partners, for twelve transitions in total. In the longitudinal-coupling model
exciting partner ``nu`` lowers every transition of qubit ``mu`` by the pair
shift ``J_pair[mu, nu]`` (the tabulated ``J_munu / pi`` in Hz)::

    f(mu | n1, n2) = f00[mu] - J_pair[mu, nu1] * n1 - J_pair[mu, nu2] * n2

The three doubly-conditioned lines of the real device sit roughly 10 MHz
below this additive prediction, so operating frequencies default to the
measured values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
import yaml
from scipy.optimize import minimize

from trimon.core import QUBITS, basis_index

PARTNERS = {"A": ("B", "C"), "B": ("C", "A"), "C": ("A", "B")}
PAIRS = ("AB", "BC", "CA")

GHz = 1e9
MHz = 1e6
us = 1e-6
ns = 1e-9


class DeviceError(ValueError):
    """Invalid device parameters or parameter file."""


class UnderdeterminedError(ValueError):
    """The supplied measurements do not fix every free fit parameter."""


def partners(qubit: str) -> tuple[str, str]:
    return PARTNERS[qubit]


def pair_key(mu: str, nu: str) -> str:
    if mu == nu:
        raise ValueError("a pair needs two distinct qubits")
    for key in PAIRS:
        if set(key) == {mu, nu}:
            return key
    raise ValueError(f"unknown qubits {mu!r}, {nu!r}")


@dataclass(frozen=True, order=True)
class Transition:
    """Drive of ``qubit`` with its partners fixed in ``partner1_state`` and
    ``partner2_state`` (partner order from :data:`PARTNERS`)."""

    qubit: str
    partner1_state: int
    partner2_state: int

    def __post_init__(self):
        if self.qubit not in PARTNERS:
            raise ValueError(f"unknown qubit {self.qubit!r}")
        if self.partner1_state not in (0, 1) or self.partner2_state not in (0, 1):
            raise ValueError("partner states must be bits")

    @property
    def partners(self) -> tuple[str, str]:
        return PARTNERS[self.qubit]

    @property
    def name(self) -> str:
        p1, p2 = self.partners
        return f"{self.qubit}{p1}{self.partner1_state}{p2}{self.partner2_state}"

    def occupations(self, target: int) -> dict[str, int]:
        p1, p2 = self.partners
        return {self.qubit: target, p1: self.partner1_state, p2: self.partner2_state}

    @property
    def lower(self) -> int:
        occ = self.occupations(0)
        return basis_index(occ["A"], occ["B"], occ["C"])

    @property
    def upper(self) -> int:
        occ = self.occupations(1)
        return basis_index(occ["A"], occ["B"], occ["C"])

    @classmethod
    def parse(cls, name: str) -> "Transition":
        """Parse a label such as ``"CA1B1"``."""
        name = name.strip().upper()
        if len(name) != 5 or name[0] not in PARTNERS:
            raise ValueError(f"bad transition label {name!r}")
        q = name[0]
        p1, p2 = PARTNERS[q]
        if name[1] != p1 or name[3] != p2 or name[2] not in "01" or name[4] not in "01":
            raise ValueError(f"bad transition label {name!r}")
        return cls(q, int(name[2]), int(name[4]))

    def __str__(self) -> str:
        return self.name


def all_transitions() -> list[Transition]:
    return [Transition(q, n1, n2) for q in QUBITS for n1 in (0, 1) for n2 in (0, 1)]


def enumerate_transitions() -> list[tuple[Transition, int, int]]:
    return [(t, t.lower, t.upper) for t in all_transitions()]


def transition_between(qubit: str, other_bits: Mapping[str, int]) -> Transition:
    p1, p2 = PARTNERS[qubit]
    return Transition(qubit, other_bits[p1], other_bits[p2])


@dataclass(frozen=True)
class SecondExcited:
    """The ``|1> -> |2>`` line of one mode with both partners in ground:
    ``f00 + anharmonicity``."""

    qubit: str

    @property
    def name(self) -> str:
        return f"{self.qubit}12"


@dataclass(frozen=True)
class TwoPhoton:
    """Two-photon ``|0> -> |2>`` line of one mode, quoted per photon:
    ``f00 + anharmonicity / 2``."""

    qubit: str

    @property
    def name(self) -> str:
        return f"{self.qubit}02/2"


Line = Union[Transition, SecondExcited, TwoPhoton]


def parse_line(name: str) -> Line:
    """Inverse of the ``name`` property of every line type."""
    name = name.strip()
    if len(name) == 3 and name[0] in QUBITS and name[1:] == "12":
        return SecondExcited(name[0])
    if len(name) == 5 and name[0] in QUBITS and name[1:] == "02/2":
        return TwoPhoton(name[0])
    return Transition.parse(name)


class FrequencyMode(enum.Enum):
    ADDITIVE = "additive"
    MEASURED = "measured"


@dataclass(frozen=True)
class DeviceParams:
    """Calibrated trimon parameters in SI units (Hz, seconds).

    ``j_self`` holds the tabulated ``-J_mu/pi``, i.e. the anharmonicity
    ``alpha_mu / 2pi``. ``j_pair`` is keyed by unordered pair (``"AB"``,
    ``"BC"``, ``"CA"``) and holds ``J_munu / pi``.
    """

    f00: Mapping[str, float]
    j_self: Mapping[str, float]
    j_pair: Mapping[str, float]
    chi: Mapping[str, float]
    t1: Mapping[str, float]
    t2: Mapping[str, float]
    pi_pulse: Mapping[Transition, float]
    measured_freq: Mapping[Transition, float] = field(default_factory=dict)
    cavity_freq: float | None = None
    cavity_kappa: float | None = None

    def __post_init__(self):
        for q in QUBITS:
            for name in ("f00", "j_self", "chi", "t1", "t2"):
                if q not in getattr(self, name):
                    raise DeviceError(f"missing {name} for qubit {q}")
            if self.t1[q] <= 0 or self.t2[q] <= 0:
                raise DeviceError(f"T1 and T2 must be positive for qubit {q}")
            if self.t2[q] > 2 * self.t1[q] * (1 + 1e-12):
                raise DeviceError(f"T2 exceeds 2*T1 for qubit {q}")
        for key in PAIRS:
            if key not in self.j_pair:
                raise DeviceError(f"missing coupling {key}")
        for t in all_transitions():
            if self.pi_pulse.get(t, 0.0) <= 0:
                raise DeviceError(f"pi-pulse length for {t} must be positive")

    def coupling(self, mu: str, nu: str) -> float:
        return self.j_pair[pair_key(mu, nu)]

    def pulse_length(self, t: Transition, theta: float = np.pi) -> float:
        """Linear Rabi scaling from the calibrated pi-pulse length."""
        return abs(theta) / np.pi * self.pi_pulse[t]

    def with_values(self, **changes) -> "DeviceParams":
        return replace(self, **changes)


def transition_frequency(params: DeviceParams, t: Transition, mode: FrequencyMode | None = None) -> float:
    if mode is None:
        mode = FrequencyMode.MEASURED if t in params.measured_freq else FrequencyMode.ADDITIVE
    if mode is FrequencyMode.MEASURED:
        try:
            return params.measured_freq[t]
        except KeyError:
            raise DeviceError(f"no measured frequency for {t}") from None
    p1, p2 = t.partners
    return (
        params.f00[t.qubit]
        - params.coupling(t.qubit, p1) * t.partner1_state
        - params.coupling(t.qubit, p2) * t.partner2_state
    )


def line_frequency(params: DeviceParams, line: Line) -> float:
    if isinstance(line, Transition):
        return transition_frequency(params, line, FrequencyMode.ADDITIVE)
    if isinstance(line, SecondExcited):
        return params.f00[line.qubit] + params.j_self[line.qubit]
    if isinstance(line, TwoPhoton):
        return params.f00[line.qubit] + params.j_self[line.qubit] / 2
    raise TypeError(f"unsupported line {line!r}")


# ----------------------------------------------------------------------------
# parameter file


def _get(section: Mapping, key: str, where: str):
    try:
        return section[key]
    except (KeyError, TypeError):
        raise DeviceError(f"missing '{key}' in {where}") from None


def device_from_mapping(data: Mapping) -> DeviceParams:
    qubits = _get(data, "qubits", "device file")
    f00, j_self, chi, t1, t2 = {}, {}, {}, {}, {}
    for q in QUBITS:
        entry = _get(qubits, q, "qubits")
        f00[q] = float(_get(entry, "f00_GHz", f"qubit {q}")) * GHz
        j_self[q] = float(_get(entry, "anharmonicity_MHz", f"qubit {q}")) * MHz
        chi[q] = float(_get(entry, "chi_MHz", f"qubit {q}")) * MHz
        t1[q] = float(_get(entry, "T1_us", f"qubit {q}")) * us
        t2[q] = float(_get(entry, "T2_us", f"qubit {q}")) * us
    couplings = _get(data, "couplings_MHz", "device file")
    j_pair = {}
    for key, value in couplings.items():
        key = str(key).upper()
        if len(key) != 2:
            raise DeviceError(f"bad coupling label {key!r}")
        j_pair[pair_key(key[0], key[1])] = float(value) * MHz
    pi_pulse, measured = {}, {}
    for name, entry in _get(data, "transitions", "device file").items():
        t = Transition.parse(str(name))
        pi_pulse[t] = float(_get(entry, "pi_pulse_ns", f"transition {name}")) * ns
        if "freq_GHz" in entry:
            measured[t] = float(entry["freq_GHz"]) * GHz
    cavity = data.get("cavity") or {}
    return DeviceParams(
        f00=f00,
        j_self=j_self,
        j_pair=j_pair,
        chi=chi,
        t1=t1,
        t2=t2,
        pi_pulse=pi_pulse,
        measured_freq=measured,
        cavity_freq=float(cavity["freq_GHz"]) * GHz if "freq_GHz" in cavity else None,
        cavity_kappa=float(cavity["kappa_MHz"]) * MHz if "kappa_MHz" in cavity else None,
    )


def load_device(path: str | Path | None = None) -> DeviceParams:
    """Load a device file; ``None`` loads the bundled calibration."""
    if path is None:
        text = resources.files("trimon").joinpath("data/trimon.yaml").read_text()
    else:
        text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise DeviceError(f"cannot parse device file: {exc}") from exc
    if not isinstance(data, Mapping):
        raise DeviceError("device file must contain a mapping")
    return device_from_mapping(data)


def default_device() -> DeviceParams:
    return load_device(None)


# ----------------------------------------------------------------------------
# spectrum fitting


@dataclass(frozen=True)
class FitReport:
    params: DeviceParams
    lines: tuple
    residuals: np.ndarray  # measured - fitted model, Hz
    iterations: int
    converged: bool

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


def _design_row(line: Line, names: Sequence[str]) -> np.ndarray:
    """Linear coefficients of ``line`` w.r.t. the parameter vector ``names``."""
    row = np.zeros(len(names))
    idx = {n: i for i, n in enumerate(names)}

    def add(name, coeff):
        if name in idx:
            row[idx[name]] += coeff

    if isinstance(line, Transition):
        add(f"f00:{line.qubit}", 1.0)
        for partner, n in zip(line.partners, (line.partner1_state, line.partner2_state)):
            add(f"pair:{pair_key(line.qubit, partner)}", -float(n))
    elif isinstance(line, SecondExcited):
        add(f"f00:{line.qubit}", 1.0)
        add(f"self:{line.qubit}", 1.0)
    elif isinstance(line, TwoPhoton):
        add(f"f00:{line.qubit}", 1.0)
        add(f"self:{line.qubit}", 0.5)
    else:
        raise TypeError(f"unsupported line {line!r}")
    return row


def _initial_guess(lines, values, names, initial: DeviceParams | None) -> np.ndarray:
    x0 = np.zeros(len(names))
    for i, name in enumerate(names):
        kind, key = name.split(":")
        if initial is not None:
            x0[i] = {"f00": initial.f00, "self": initial.j_self, "pair": initial.j_pair}[kind][key]
        elif kind == "f00":
            own = [v for ln, v in zip(lines, values) if isinstance(ln, Transition) and ln.qubit == key]
            x0[i] = max(own) if own else float(np.mean(values))
        elif kind == "pair":
            x0[i] = 200 * MHz
        else:
            x0[i] = -100 * MHz
    return x0


def fit_params(
    measured: Iterable[tuple[Line, float]],
    initial: DeviceParams | None = None,
    *,
    xatol: float = 1e3,
    max_iter: int = 10_000,
) -> FitReport:
    """Least-squares fit of ``f00``, the pair shifts and (when second-excited or
    two-photon lines are given) the anharmonicities, by downhill simplex.

    The model is linear, so identifiability is checked up front from the rank
    of the design matrix. Anharmonicities without supporting lines keep their
    ``initial`` value (zero when no initial device is given).

    Args:
        measured: ``(line, frequency_hz)`` pairs.
        initial: optional starting point and source of the non-fitted fields.
        xatol: simplex spread in Hz at which the search stops.
        max_iter: iteration cap; hitting it is reported, not raised.

    Raises:
        UnderdeterminedError: if the lines cannot fix every free parameter.
    """
    measured = list(measured)
    lines = tuple(ln for ln, _ in measured)
    values = np.array([float(v) for _, v in measured])
    with_self = sorted({ln.qubit for ln in lines if isinstance(ln, (SecondExcited, TwoPhoton))})
    names = [f"f00:{q}" for q in QUBITS] + [f"pair:{k}" for k in PAIRS] + [f"self:{q}" for q in with_self]
    design = np.array([_design_row(ln, names) for ln in lines]).reshape(len(lines), len(names))
    if len(lines) < len(names) or np.linalg.matrix_rank(design) < len(names):
        raise UnderdeterminedError(
            f"{len(lines)} lines cannot determine {len(names)} parameters ({', '.join(names)})"
        )

    # work in MHz offsets from the start point so the simplex is well scaled
    x0 = _initial_guess(lines, values, names, initial)
    scale = MHz

    def cost(u):
        r = values - design @ (x0 + u * scale)
        return float(r @ r) / scale**2

    u = np.zeros(len(names))
    iterations = 0
    converged = False
    best = cost(u)
    # restart from the best vertex until the simplex stops improving
    while iterations < max_iter:
        res = minimize(
            cost,
            u,
            method="Nelder-Mead",
            options={
                "xatol": xatol / scale,
                "fatol": 1e-14,
                "maxiter": max_iter - iterations,
                "adaptive": True,
                "initial_simplex": u + np.vstack([np.zeros(len(u)), 5.0 * np.eye(len(u))]),
            },
        )
        iterations += int(res.nit)
        u = res.x
        improved = best - res.fun
        best = min(best, res.fun)
        if res.success and improved <= 1e-12 * max(best, 1e-12):
            converged = True
            break
        if not res.success:
            break

    x = x0 + u * scale
    fitted = dict(zip(names, x))
    base = initial
    f00 = {q: fitted[f"f00:{q}"] for q in QUBITS}
    j_pair = {k: fitted[f"pair:{k}"] for k in PAIRS}
    j_self = {q: (base.j_self[q] if base is not None else 0.0) for q in QUBITS}
    j_self.update({q: fitted[f"self:{q}"] for q in with_self})
    if base is None:
        base = default_device()
    params = replace(base, f00=f00, j_pair=j_pair, j_self=j_self)
    return FitReport(
        params=params,
        lines=lines,
        residuals=values - design @ x,
        iterations=iterations,
        converged=converged,
    )


def model_spectrum(params: DeviceParams) -> list[tuple[Transition, float]]:
    return [(t, transition_frequency(params, t, FrequencyMode.ADDITIVE)) for t in all_transitions()]
