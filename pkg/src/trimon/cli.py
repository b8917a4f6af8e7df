"""Command-line front end.

Usage examples::

    trimon algo grover --oracle 101 --ideal --seed 7
    trimon algo dj --seed 1
    trimon rb --transition CA1B1 --interleave toffoli
    trimon tomo --state ghz
    trimon device fit --input lines.csv
    trimon readout calibrate

Exit codes: 0 success, 2 configuration error, 3 numerical or I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from trimon import algorithms as alg
from trimon.channels import (
    CalibrationError,
    NoiseModel,
    assignment_fidelities,
    calibrate_readout,
    histogram_rows,
)
from trimon.device import DeviceError, GHz, UnderdeterminedError, Transition, fit_params, load_device, parse_line
from trimon.experiments.rb import FitError, RBConfig, run_rb, toffoli_pulse
from trimon.experiments.states import prepare_reference, target_state
from trimon.experiments.tomography import acquire_tomography, mle_reconstruct
from trimon.io import ResultsError, emit_results

OUTPUT_ENV = "TRIMON_OUTPUT_DIR"
DEFAULT_OUTPUT = "results"
ALGO_SHOTS = 20_000
RB_SHOTS = 30_000
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--device", type=Path, default=None, help="device YAML file (default: bundled calibration)")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed for every stochastic step")
    p.add_argument("--shots", type=int, default=None, help="repetitions per readout round")
    p.add_argument("--out", type=Path, default=None, help=f"output directory (else ${OUTPUT_ENV}, else ./{DEFAULT_OUTPUT})")
    p.add_argument("--workers", type=int, default=1, help="parallel jobs; output does not depend on it")
    p.add_argument("--no-noise", action="store_true", help="disable gate decoherence")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="trimon", description="Trimon processor simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("algo", parents=[common], help="run an algorithm or its full oracle suite")
    p.add_argument("algorithm", choices=["dj", "bv", "grover", "qft"])
    p.add_argument("--oracle", default=None,
                   help="dj: constant0|constant1|A|A^BC|...; bv: 3 bits; grover: 3 bits; qft: comb<p>|phase<rad>")
    p.add_argument("--ideal", action="store_true", help="no gate noise and perfect readout")
    p.add_argument("--exact", action="store_true", help="exact populations instead of sampled shots")
    p.set_defaults(func=cmd_algo)

    p = sub.add_parser("rb", parents=[common], help="standard or interleaved randomized benchmarking")
    p.add_argument("--transition", required=True, help="transition label, e.g. CA1B1")
    p.add_argument("--interleave", choices=["toffoli"], default=None)
    p.add_argument("--max-length", type=int, default=40)
    p.add_argument("--sequences", type=int, default=10, help="random sequences per length")
    p.add_argument("--depolarizing", type=float, default=0.0, help="injected per-Clifford depolarizing strength")
    p.add_argument("--interleaved-error", type=float, default=0.0, help="injected error of the interleaved gate")
    p.add_argument("--ideal", action="store_true", help="no gate noise and perfect readout")
    p.set_defaults(func=cmd_rb)

    p = sub.add_parser("tomo", parents=[common], help="state tomography of a reference state")
    p.add_argument("--state", required=True, choices=["bell", "ghz", "w", "eqsup"])
    p.add_argument("--ideal", action="store_true", help="no gate noise and perfect readout")
    p.add_argument("--exact", action="store_true", help="exact populations instead of sampled shots")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("device", help="device parameter tools")
    dsub = p.add_subparsers(dest="action", required=True)
    f = dsub.add_parser("fit", parents=[common], help="fit model parameters to measured lines")
    f.add_argument("--input", required=True, type=Path, help="CSV with columns line,freq_GHz")
    f.set_defaults(func=cmd_device_fit)

    p = sub.add_parser("readout", help="readout model tools")
    rsub = p.add_subparsers(dest="action", required=True)
    c = rsub.add_parser("calibrate", parents=[common], help="fit sigma and readout decay to assignment fidelities")
    c.add_argument("--f000", type=float, default=0.951)
    c.add_argument("--f111", type=float, default=0.852)
    c.add_argument("--bins", type=int, default=100, help="histogram bins")
    c.set_defaults(func=cmd_readout_calibrate)
    return parser


# ----------------------------------------------------------------------------
# helpers


def output_dir(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _device(args):
    return load_device(args.device)


def _rng(args) -> np.random.Generator:
    if not 0 <= args.seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return np.random.default_rng(args.seed)


def _check_shots(shots):
    if shots is not None and shots < 1:
        raise ConfigError("--shots must be positive")


def _check_workers(args):
    if args.workers < 1:
        raise ConfigError("--workers must be positive")


def parse_oracle(algorithm: str, text: str) -> alg.OracleSpec:
    text = text.strip()
    if algorithm == "dj":
        return alg.DJ(text)
    if algorithm == "bv":
        return alg.BV(text)
    if algorithm == "grover":
        if len(text) == 3 and set(text) <= {"0", "1"}:
            return alg.Grover(int(text, 2))
        return alg.Grover(int(text))
    if algorithm == "qft":
        low = text.lower()
        if low.startswith("comb"):
            return alg.QFT(alg.Comb(int(low[4:])))
        if low.startswith("phase"):
            return alg.QFT(alg.Phase(float(low[5:])))
    raise ConfigError(f"cannot parse oracle {text!r} for {algorithm}")


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in text)


def _noise(args, device, ideal: bool):
    return None if ideal or args.no_noise else NoiseModel.from_device(device)


def _readout(device, ideal: bool):
    return None if ideal else calibrate_readout(params=device)


def _report(paths):
    for p in paths:
        print(p)


# ----------------------------------------------------------------------------
# subcommands


def cmd_algo(args) -> int:
    _check_shots(args.shots)
    _check_workers(args)
    device = _device(args)
    rng = _rng(args)
    shots = None if args.exact else (args.shots or ALGO_SHOTS)
    noise = _noise(args, device, args.ideal)
    readout = _readout(device, args.ideal)
    if readout is not None and shots is None:
        raise ConfigError("--exact needs --ideal: the discard readout is shot-based")
    oracles = [parse_oracle(args.algorithm, args.oracle)] if args.oracle else alg.suite(args.algorithm)
    results = alg.run_suite(oracles, device, noise, readout, shots, rng, workers=args.workers)
    rows = []
    for r in results:
        row = r.to_dict()
        row["seed"] = args.seed
        row["ideal"] = bool(args.ideal)
        rows.append(row)
    out = output_dir(args)
    stem = f"algo_{args.algorithm}" + (f"_{_slug(args.oracle)}" if args.oracle else "")
    paths = [emit_results(rows[0] if args.oracle else rows, "json", out / f"{stem}.json")]
    if not args.oracle:
        flat = [{k: v for k, v in row.items() if k != "distribution"} | {f"p{j:03b}": p for j, p in enumerate(row["distribution"])}
                for row in rows]
        paths.append(emit_results(flat, "csv", out / f"{stem}.csv"))
    _report(paths)
    return EXIT_OK


def cmd_rb(args) -> int:
    _check_shots(args.shots)
    _check_workers(args)
    if args.max_length < 4:
        raise ConfigError("--max-length must be at least 4")
    device = _device(args)
    rng = _rng(args)
    t = Transition.parse(args.transition)
    gate = toffoli_pulse(t, device) if args.interleave else None
    config = RBConfig(
        transition=t,
        lengths=tuple(range(1, args.max_length + 1)),
        sequences_per_length=args.sequences,
        shots=args.shots or RB_SHOTS,
        interleaved_gate=gate,
        depolarizing=args.depolarizing,
        interleaved_error=args.interleaved_error,
    )
    result = run_rb(config, device, _noise(args, device, args.ideal), _readout(device, args.ideal), rng, workers=args.workers)

    def curve(r):
        return [{"length": n, "fidelity": f, "stderr": e} for n, f, e in r.points]

    fit = {"A": result.fit.A, "p": result.fit.p, "B": result.fit.B, "F_avg": result.f_avg,
           "F_gate": result.f_gate, "p_ref": result.p_ref, "identifiable": result.fit.identifiable}
    doc = {"transition": t.name, "interleave": args.interleave, "seed": args.seed, "shots": config.shots,
           "sequences_per_length": config.sequences_per_length, "fit": fit, "points": curve(result)}
    if result.reference is not None:
        ref = result.reference
        doc["reference"] = {"fit": {"A": ref.fit.A, "p": ref.fit.p, "B": ref.fit.B, "F_avg": ref.f_avg},
                            "points": curve(ref)}
    out = output_dir(args)
    stem = f"rb_{t.name}" + ("_interleaved" if args.interleave else "")
    _report([emit_results(doc, "json", out / f"{stem}.json"), emit_results(curve(result), "csv", out / f"{stem}.csv")])
    return EXIT_OK


def cmd_tomo(args) -> int:
    _check_shots(args.shots)
    device = _device(args)
    rng = _rng(args)
    shots = None if args.exact else (args.shots or ALGO_SHOTS)
    readout = _readout(device, args.ideal)
    record = acquire_tomography(prepare_reference(args.state, device), device, _noise(args, device, args.ideal),
                                readout, shots, rng)
    rec = mle_reconstruct(record)
    if not rec.converged:
        print("warning: MLE hit the iteration cap", file=sys.stderr)
    doc = {
        "state": args.state,
        "seed": args.seed,
        "shots": shots,
        "fidelity": rec.fidelity(target_state(args.state)),
        "converged": rec.converged,
        "iterations": rec.iterations,
        "rho_real": rec.rho.real,
        "rho_imag": rec.rho.imag,
        "record": record.to_dict(),
    }
    out = output_dir(args)
    _report([emit_results(doc, "json", out / f"tomo_{args.state}.json")])
    return EXIT_OK


def read_lines_csv(path: Path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not rows or not {"line", "freq_GHz"} <= set(rows[0]):
        raise ConfigError("line CSV needs columns 'line' and 'freq_GHz'")
    return [(parse_line(r["line"]), float(r["freq_GHz"]) * GHz) for r in rows]


def cmd_device_fit(args) -> int:
    measured = read_lines_csv(args.input)
    initial = load_device(args.device) if args.device else None
    report = fit_params(measured, initial)
    p = report.params
    doc = {
        "converged": report.converged,
        "iterations": report.iterations,
        "max_residual_MHz": report.max_residual / 1e6,
        "f00_GHz": {q: v / GHz for q, v in p.f00.items()},
        "pair_shift_MHz": {k: v / 1e6 for k, v in p.j_pair.items()},
        "anharmonicity_MHz": {q: v / 1e6 for q, v in p.j_self.items()},
        "residuals": [{"line": line.name, "residual_MHz": r / 1e6} for line, r in zip(report.lines, report.residuals)],
    }
    _report([emit_results(doc, "json", output_dir(args) / "device_fit.json")])
    return EXIT_OK


def cmd_readout_calibrate(args) -> int:
    device = _device(args)
    rng = _rng(args)
    model = calibrate_readout((args.f000, args.f111), device)
    f000, f111 = assignment_fidelities(model)
    doc = {
        "sigma": model.sigma,
        "readout_decay_s": model.readout_decay,
        "F000": f000,
        "F111": f111,
        "mean_voltage": list(model.mean_voltage),
        "demarcation": list(model.demarcation),
    }
    out = output_dir(args)
    rows = histogram_rows(model, args.shots or ALGO_SHOTS, rng, bins=args.bins)
    _report([emit_results(doc, "json", out / "readout_calibration.json"),
             emit_results(rows, "csv", out / "readout_histograms.csv")])
    return EXIT_OK


# ----------------------------------------------------------------------------


def run_command(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, DeviceError, UnderdeterminedError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CalibrationError, FitError, ResultsError, np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
