import numpy as np
import pytest

from trimon.core import ground_state, ket, populations
from trimon.channels import NoiseModel, evolve_schedule
from trimon.device import Transition, all_transitions, default_device
from trimon.experiments.rb import (
    RBConfig,
    fit_decay,
    initialization,
    interleaved_gate_fidelity,
    run_rb,
    subspace_depolarizing,
    toffoli_pulse,
)
from trimon.gates import ccr_pulse

SHORT = tuple(range(1, 21, 2))


def test_fit_decay_recovers_synthetic_curve():
    n = np.arange(1, 41)
    fit = fit_decay(list(zip(n, 0.45 * 0.97**n + 0.5)))
    np.testing.assert_allclose([fit.A, fit.p, fit.B], [0.45, 0.97, 0.5], atol=1e-6)
    assert fit.f_avg == pytest.approx(0.985, abs=1e-6)


def test_fit_decay_needs_four_lengths():
    with pytest.raises(ValueError):
        fit_decay([(1, 0.9), (2, 0.8), (3, 0.7), (3, 0.71)])


def test_fit_decay_constant_data():
    fit = fit_decay([(n, 1.0) for n in range(1, 6)])
    assert fit.p == 1.0 and not fit.identifiable


def test_interleaved_formula():
    assert interleaved_gate_fidelity(0.98, 0.98) == 1.0
    assert interleaved_gate_fidelity(0.98, 0.98 * 0.99) == pytest.approx(0.995)


@pytest.mark.parametrize("t", all_transitions(), ids=lambda t: t.name)
def test_initialization_reaches_lower_level(t):
    s = initialization(t)
    out = evolve_schedule(ground_state(), s)
    np.testing.assert_allclose(populations(out)[t.lower], 1.0, atol=1e-12)


def test_subspace_depolarizing_average_fidelity():
    t = Transition.parse("BC0A1")
    kraus = subspace_depolarizing(t, 0.1)
    rho = np.outer(ket(t.lower), ket(t.lower))
    out = sum(k @ rho @ k.conj().T for k in kraus)
    # depolarizing d keeps the lower level with 1 - d/2
    np.testing.assert_allclose(out[t.lower, t.lower].real, 0.95)


def test_noiseless_rb_is_perfect():
    cfg = RBConfig(Transition.parse("AB1C0"), lengths=SHORT, sequences_per_length=3, shots=None)
    res = run_rb(cfg, rng=np.random.default_rng(0))
    np.testing.assert_allclose(res.sequence_fidelities, 1.0, atol=1e-12)
    assert res.f_avg == 1.0


def test_injected_depolarizing_recovered():
    d = 0.02
    cfg = RBConfig(Transition.parse("CA0B1"), lengths=SHORT, sequences_per_length=4, shots=None, depolarizing=d)
    res = run_rb(cfg, rng=np.random.default_rng(1))
    assert res.f_avg == pytest.approx(1 - d / 2, abs=1e-6)


def test_interleaved_injected_error():
    t = Transition.parse("AB0C1")
    cfg = RBConfig(t, lengths=SHORT, sequences_per_length=3, shots=None,
                   interleaved_gate=toffoli_pulse(t), depolarizing=0.01, interleaved_error=0.004)
    res = run_rb(cfg, rng=np.random.default_rng(2))
    assert res.f_gate == pytest.approx(0.996, abs=1e-4)
    assert res.reference is not None


def test_interleaved_gate_must_match_transition():
    with pytest.raises(ValueError):
        RBConfig(Transition.parse("AB0C0"), interleaved_gate=ccr_pulse(Transition.parse("AB0C1"), 0, np.pi))
    with pytest.raises(ValueError):
        RBConfig(Transition.parse("AB0C0"), lengths=())


def test_rb_deterministic_across_workers():
    d = default_device()
    noise = NoiseModel.from_device(d)
    cfg = RBConfig(Transition.parse("BC1A1"), lengths=(1, 3, 5, 7), sequences_per_length=3, shots=500)
    a = run_rb(cfg, d, noise, None, np.random.default_rng(42), workers=1)
    b = run_rb(cfg, d, noise, None, np.random.default_rng(42), workers=3)
    np.testing.assert_array_equal(a.sequence_fidelities, b.sequence_fidelities)


def test_physical_noise_gives_realistic_fidelity():
    d = default_device()
    t = Transition.parse("AB0C0")
    cfg = RBConfig(t, lengths=tuple(range(1, 31, 3)), sequences_per_length=4, shots=None)
    res = run_rb(cfg, d, NoiseModel.from_device(d), None, np.random.default_rng(3))
    assert 0.97 < res.f_avg < 1.0
