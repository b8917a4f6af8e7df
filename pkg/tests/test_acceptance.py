"""Acceptance criteria, one pass/fail line each (see the terminal summary)."""

import time

import numpy as np
import pytest

from trimon import algorithms as alg
from trimon.channels import (
    NoiseModel,
    assignment_fidelities,
    calibrate_readout,
    ideal_readout,
    measure_populations,
)
from trimon.cli import run_command
from trimon.core import DIM, check_density, density_matrix, permutation_matrix
from trimon.device import FrequencyMode, MHz, Transition, all_transitions, default_device, fit_params, model_spectrum, transition_frequency
from trimon.experiments.rb import RBConfig, run_rb, toffoli_pulse
from trimon.experiments.states import REFERENCE_SIM_FIDELITY, prepare_reference, target_state
from trimon.experiments.tomography import acquire_tomography, mle_reconstruct

DOUBLE_EXCITED = {"AB1C1", "BC1A1", "CA1B1"}
SHOTS = 20_000


@pytest.fixture(scope="module")
def device():
    return default_device()


@pytest.fixture(scope="module")
def noise(device):
    return NoiseModel.from_device(device)


def test_c1_ideal_algorithm_suite(criterion, device):
    start = time.perf_counter()
    worst = 0.0
    for name, target in (("dj", 1.0), ("bv", 1.0), ("grover", 0.78125)):
        for r in alg.run_suite(alg.suite(name), device):
            worst = max(worst, abs(r.success_probability - target))
    sampled = alg.run_suite(alg.suite("grover"), device, shots=SHOTS, rng=np.random.default_rng(1))
    sampled_dev = max(abs(r.success_probability - 0.78125) for r in sampled)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and sampled_dev <= 3 / np.sqrt(SHOTS) and elapsed < 10
    criterion(1, ok, f"exact max |SP - ideal| = {worst:.1e} (tol 1e-9); sampled Grover max dev "
                     f"{sampled_dev:.4f} (tol {3 / np.sqrt(SHOTS):.4f}); {elapsed:.2f} s (< 10 s)")
    assert ok


def test_c2_qft(criterion, device):
    s = alg.build_qft(device)
    u = permutation_matrix(s.output_permutation) @ s.unitary()
    k = np.arange(DIM)
    dft = np.exp(2j * np.pi * np.outer(k, k) / DIM) / np.sqrt(DIM)
    convention = np.diag((-1.0) ** np.array([bin(x).count("1") for x in k]))
    unitary_err = np.abs(u - convention @ dft).max()

    results = alg.run_suite([alg.QFT(alg.Phase(phi)) for phi in alg.PHASE_SWEEP], device)
    min_sso = min(r.sso for r in results)
    integer_err = max(abs(results[2 * m].distribution[m] - 1.0) for m in range(DIM))
    ok = unitary_err <= 1e-10 and min_sso >= 0.999 and integer_err <= 1e-9
    criterion(2, ok, f"|U - DFT| = {unitary_err:.1e} (tol 1e-10); min SSO over 16 phases {min_sso:.6f} "
                     f"(>= 0.999); integer phases |P(m) - 1| = {integer_err:.1e}")
    assert ok


def test_c3_noisy_reference_state_fidelities(criterion, device, noise):
    # simulated fidelity: noisy preparation and tomography pulses, exact
    # populations without readout error, MLE reconstruction
    start = time.perf_counter()
    fids = {}
    for name in ("bell", "ghz", "w", "eqsup"):
        record = acquire_tomography(prepare_reference(name, device), device, noise, None, None, readout_noise=False)
        fids[name] = mle_reconstruct(record).fidelity(target_state(name))
    elapsed = time.perf_counter() - start
    misses = {n: f - REFERENCE_SIM_FIDELITY[n] for n, f in fids.items()}
    ok = all(abs(d) <= 0.02 for d in misses.values()) and elapsed < 60
    detail = ", ".join(f"{n} {fids[n]:.4f} vs {REFERENCE_SIM_FIDELITY[n]:.3f}" for n in fids)
    criterion(3, ok, f"{detail} (tol 0.02); {elapsed:.1f} s (< 60 s)")
    assert ok


def test_c4_frequency_model(criterion, device):
    single, double = [], []
    for t in all_transitions():
        gap = abs(transition_frequency(device, t, FrequencyMode.ADDITIVE) - transition_frequency(device, t)) / MHz
        (double if t.name in DOUBLE_EXCITED else single).append(gap)
    report = fit_params(model_spectrum(device))
    ok = max(single) <= 0.15 and all(9.5 <= g <= 10.0 for g in double) and report.max_residual <= 1e3
    criterion(4, ok, f"single-partner max gap {max(single):.3f} MHz (<= 0.15); double-excited gaps "
                     f"{', '.join(f'{g:.2f}' for g in double)} MHz (9.5-10.0); fit round trip "
                     f"{report.max_residual:.2e} Hz (<= 1 kHz)")
    assert ok


def test_c5_rb_self_consistency(criterion, device):
    t = Transition.parse("CA1B1")
    errors = []
    for i, d in enumerate((0.004, 0.012, 0.03)):
        res = run_rb(RBConfig(t, depolarizing=d), device, None, None, np.random.default_rng(100 + i))
        errors.append(res.f_avg - (1 - d / 2))
    e = 0.005
    inter = run_rb(RBConfig(t, depolarizing=0.012, interleaved_gate=toffoli_pulse(t, device), interleaved_error=e),
                   device, None, None, np.random.default_rng(200))
    gate_err = inter.f_gate - (1 - e)
    clean = run_rb(RBConfig(t, shots=None), device, None, None, np.random.default_rng(300))
    clean_err = np.abs(clean.sequence_fidelities - 1.0).max()
    ok = max(map(abs, errors)) <= 0.003 and abs(gate_err) <= 0.003 and clean_err <= 1e-12
    criterion(5, ok, f"F_avg - (1 - d/2) = {', '.join(f'{x:+.5f}' for x in errors)} (tol 0.003); "
                     f"F_gate - (1 - e) = {gate_err:+.5f} (tol 0.003); noiseless max |F - 1| = {clean_err:.1e}")
    assert ok


def test_c6_readout_calibration(criterion, device):
    model = calibrate_readout((0.951, 0.852), device)
    f000, f111 = assignment_fidelities(model)
    pops = np.arange(1, DIM + 1) / 36
    est = measure_populations(density_matrix(np.sqrt(pops)), SHOTS, ideal_readout(device), None,
                              np.random.default_rng(6), device)
    pop_err = np.abs(est.p - pops).max()
    ok = abs(f000 - 0.951) <= 0.005 and abs(f111 - 0.852) <= 0.005 and pop_err <= 3 / np.sqrt(SHOTS)
    criterion(6, ok, f"F000 {f000:.4f}, F111 {f111:.4f} (tol 0.005); ideal-readout population error "
                     f"{pop_err:.4f} (tol {3 / np.sqrt(SHOTS):.4f})")
    assert ok


def test_c7_noiseless_mle(criterion, device):
    fids = {}
    physical = True
    for name in ("bell", "ghz", "w", "eqsup"):
        rec = mle_reconstruct(acquire_tomography(prepare_reference(name, device), device))
        fids[name] = rec.fidelity(target_state(name))
        try:
            check_density(rec.rho)
        except ValueError:
            physical = False
    ok = min(fids.values()) >= 0.999 and physical
    criterion(7, ok, ", ".join(f"{n} {f:.6f}" for n, f in fids.items()) + f" (>= 0.999); PSD and trace 1: {physical}")
    assert ok


def test_c8_virtual_oracles_beat_constant1(criterion, device, noise):
    readout = calibrate_readout(params=device)
    res = {r.oracle: r.success_probability
           for r in alg.run_suite(alg.suite("dj"), device, noise, readout, SHOTS, np.random.default_rng(8))}
    worst_virtual = min(v for k, v in res.items() if k != "constant1")
    ok = worst_virtual > res["constant1"]
    criterion(8, ok, f"noisy DJ: Constant1 SP {res['constant1']:.3f} < lowest virtual-oracle SP {worst_virtual:.3f}")
    assert ok


def test_c9_determinism(criterion, tmp_path):
    runs = []
    for tag, workers in (("a", "1"), ("b", "1"), ("c", "4")):
        out = tmp_path / tag
        for argv in (["algo", "dj"], ["algo", "qft", "--ideal"], ["tomo", "--state", "bell"]):
            assert run_command(argv + ["--seed", "2024", "--shots", "3000", "--workers", workers, "--out", str(out)]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    ok = runs[0] == runs[1] == runs[2] and len(runs[0]) == 5
    criterion(9, ok, f"{len(runs[0])} result files byte-identical across reruns and worker counts")
    assert ok
