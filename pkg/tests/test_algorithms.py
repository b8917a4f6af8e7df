import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trimon import algorithms as alg
from trimon.channels import NoiseModel
from trimon.core import DIM, bit_reversal, ket, permutation_matrix
from trimon.device import default_device
from trimon.gates import ideal_output, x_rotation


def brute_force_dft():
    return np.array([[np.exp(2j * np.pi * j * k / DIM) for j in range(DIM)] for k in range(DIM)]) / np.sqrt(DIM)


@pytest.mark.parametrize("name", alg.DJ_BALANCED)
def test_dj_balanced_oracles_are_balanced(name):
    phases = np.exp(1j * np.array(alg.dj_phase_oracle(name).phases))
    np.testing.assert_allclose(phases.imag, 0, atol=1e-12)
    assert np.sum(np.isclose(phases.real, -1)) == 4
    # diagonal equals (-1)^f by direct evaluation
    f = [alg.DJ(name).evaluate(j) for j in range(DIM)]
    np.testing.assert_allclose(phases.real, (-1.0) ** np.array(f))


def test_dj_oracle_names():
    assert alg.DJ("A⊕BC").function == "A^BC"
    assert alg.DJ("Constant1").constant
    with pytest.raises(ValueError):
        alg.DJ("A^B^C")


def test_dj_outcomes():
    assert np.argmax(np.abs(ideal_output(alg.build_dj("A")))) == 4
    for name in alg.DJ_ORACLES:
        out = np.abs(ideal_output(alg.build_dj(name))) ** 2
        expected = 1.0 if name.startswith("constant") else 0.0
        np.testing.assert_allclose(out[0], expected, atol=1e-12)


def test_dj_constant1_uses_compiled_x():
    s = alg.build_dj("constant1")
    assert s.pulse_count == 24 + x_rotation("C", np.pi).pulse_count
    assert alg.build_dj("B^C").pulse_count == 24


@pytest.mark.parametrize("j", range(DIM))
def test_bv_outcome(j):
    c = alg.BV(f"{j:03b}")
    out = np.abs(ideal_output(alg.build_bv(c))) ** 2
    np.testing.assert_allclose(out[j], 1.0, atol=1e-12)


def test_bv_000_has_no_oracle_gates():
    assert alg.build_bv("000").pulse_count == 24
    assert alg.build_bv("110").pulse_count == 24 + 4


def test_bv_bad_string():
    with pytest.raises(ValueError):
        alg.BV("12")


@pytest.mark.parametrize("marked", range(DIM))
def test_grover_single_iteration(marked):
    out = np.abs(ideal_output(alg.build_grover(marked))) ** 2
    np.testing.assert_allclose(out[marked], 25 / 32, atol=1e-12)
    np.testing.assert_allclose(np.delete(out, marked), 1 / 32, atol=1e-12)


def test_qft_pulse_and_virtual_counts():
    s = alg.build_qft()
    assert s.pulse_count == 12
    assert s.virtual_count == 3


def test_qft_matches_dft_with_convention_map():
    s = alg.build_qft()
    u = permutation_matrix(s.output_permutation) @ s.unitary()
    # -Y(pi/2) = Z H, so every output state picks up (-1)^popcount
    signs = np.diag([(-1.0) ** bin(k).count("1") for k in range(DIM)])
    np.testing.assert_allclose(u, signs @ brute_force_dft(), atol=1e-10)
    np.testing.assert_allclose(alg.dft_matrix(), brute_force_dft(), atol=1e-14)


def test_qft_of_ground_state_is_uniform():
    res = alg.run_algorithm(alg.build_qft(), alg.QFT(alg.Comb(8)))
    np.testing.assert_allclose(res.distribution, 1 / DIM, atol=1e-12)


@pytest.mark.parametrize("period,support", [(1, [0]), (2, [0, 4]), (4, [0, 2, 4, 6]), (8, list(range(8)))])
def test_comb_inputs(period, support):
    oracle = alg.QFT(alg.Comb(period))
    res = alg.run_algorithm(alg.build_algorithm(oracle), oracle)
    expected = np.zeros(DIM)
    expected[support] = 1 / len(support)
    np.testing.assert_allclose(res.distribution, expected, atol=1e-12)
    assert res.sso >= 0.999
    np.testing.assert_allclose(np.abs(ideal_output(alg.qft_input_state(alg.Comb(period)))) ** 2,
                               np.abs(alg.Comb(period).amplitudes()) ** 2, atol=1e-12)


def test_comb_rejects_bad_period():
    with pytest.raises(ValueError):
        alg.Comb(3)


@pytest.mark.parametrize("m", range(DIM))
def test_phase_estimation_integer_phases(m):
    oracle = alg.QFT(alg.Phase(2 * np.pi * m / DIM))
    res = alg.run_algorithm(alg.build_algorithm(oracle), oracle)
    np.testing.assert_allclose(res.distribution[m], 1.0, atol=1e-12)
    assert res.success_probability == pytest.approx(1.0)


def test_phase_input_state_form():
    phi = 0.731
    psi = ideal_output(alg.qft_input_state(alg.Phase(phi)))
    expected = np.kron(np.kron([1, np.exp(-4j * phi)], [1, np.exp(-2j * phi)]), [1, np.exp(-1j * phi)]) / np.sqrt(8)
    np.testing.assert_allclose(psi, expected, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * np.pi))
def test_phase_estimation_follows_dirichlet_kernel(phi):
    oracle = alg.QFT(alg.Phase(phi))
    res = alg.run_algorithm(alg.build_algorithm(oracle), oracle)
    # closed form |sum_j e^{i j (2 pi k / 8 - phi)}|^2 / 64
    k = np.arange(DIM)
    delta = 2 * np.pi * k / DIM - phi
    kernel = np.abs(np.sum(np.exp(1j * np.outer(delta, np.arange(DIM))), axis=1)) ** 2 / DIM**2
    np.testing.assert_allclose(res.distribution, kernel, atol=1e-10)


def test_sso_examples():
    t = np.full(DIM, 1 / DIM)
    assert alg.sso(t, t) == pytest.approx(1.0)
    assert alg.sso(ket(0).real, ket(1).real) == 0.0
    assert alg.sso(t, ket(3).real) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        alg.sso(np.ones(DIM), t)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sso_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.dirichlet(np.ones(DIM)), rng.dirichlet(np.ones(DIM))
    s = alg.sso(a, b)
    assert 0 <= s <= 1
    assert s == pytest.approx(alg.sso(b, a))


def test_classical_bounds():
    assert [alg.classical_bound(a) for a in ("DJ", "bv", "grover")] == [0.5, 0.25, 0.25]
    with pytest.raises(ValueError):
        alg.classical_bound("qft")


def test_sampled_grover_within_shot_noise():
    res = alg.run_algorithm(alg.build_grover(5), alg.Grover(5), shots=20_000, rng=np.random.default_rng(7))
    assert abs(res.success_probability - 0.78125) <= 3 / np.sqrt(20_000)
    np.testing.assert_allclose(res.distribution.sum(), 1.0)


def test_noisy_virtual_oracles_beat_constant1():
    d = default_device()
    noise = NoiseModel.from_device(d)
    res = {r.oracle: r.success_probability for r in alg.run_suite(alg.suite("dj"), d, noise)}
    for name in alg.DJ_BALANCED:
        assert res[name] > res["constant1"]


def test_suite_is_deterministic_and_worker_independent():
    d = default_device()
    oracles = alg.suite("bv")
    a = alg.run_suite(oracles, d, None, None, 1000, np.random.default_rng(3), workers=1)
    b = alg.run_suite(oracles, d, None, None, 1000, np.random.default_rng(3), workers=4)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.distribution, y.distribution)


def test_suite_sizes():
    assert [len(alg.suite(a)) for a in ("dj", "bv", "grover", "qft")] == [12, 8, 8, 20]


def test_bit_reversal_permutation_on_qft():
    s = alg.build_qft()
    assert s.output_permutation == tuple(bit_reversal(j) for j in range(DIM))
