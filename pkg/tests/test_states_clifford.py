import numpy as np
import pytest

from trimon.core import DIM
from trimon.device import Transition
from trimon.experiments.clifford import bloch_rotation, clifford_group, compose, identify, inverse
from trimon.experiments.states import W_THETA, prepare_reference, target_state
from trimon.gates import ideal_output, rotation_block


@pytest.mark.parametrize("name,pulses", [("bell", 2), ("ghz", 3), ("w", 3), ("eqsup", 7)])
def test_reference_preparations(name, pulses):
    s = prepare_reference(name)
    assert s.pulse_count == pulses
    np.testing.assert_allclose(ideal_output(s), target_state(name), atol=1e-12)


def test_w_angle():
    # the first pulse leaves one third of the population in |100>
    np.testing.assert_allclose(np.sin(W_THETA / 2) ** 2, 1 / 3)


def test_unknown_state():
    with pytest.raises(ValueError):
        target_state("cluster")


def test_state_aliases():
    np.testing.assert_allclose(target_state("Werner"), target_state("w"))


def test_clifford_group_structure():
    group = clifford_group()
    assert len(group) == 24
    assert group[0].pulses == ()
    mats = [bloch_rotation(e.matrix) for e in group]
    keys = {tuple(np.rint(m).astype(int).ravel()) for m in mats}
    assert len(keys) == 24
    for e in group:
        assert len(e.pulses) <= 2
        for phi, theta in e.pulses:
            assert np.isclose(theta, np.pi / 2) or np.isclose(theta, np.pi)
            assert np.isclose((phi / (np.pi / 4)) % 1, 0) or np.isclose((phi / (np.pi / 4)) % 1, 1)


def test_clifford_closure_and_inverses():
    group = clifford_group()
    for a in range(24):
        np.testing.assert_allclose(
            bloch_rotation(group[inverse(a)].matrix @ group[a].matrix), np.eye(3), atol=1e-12
        )
        for b in range(0, 24, 5):
            c = compose(a, b)
            np.testing.assert_allclose(
                bloch_rotation(group[c].matrix), bloch_rotation(group[a].matrix @ group[b].matrix), atol=1e-12
            )


def test_identify_rejects_non_clifford():
    assert identify(rotation_block(-np.pi / 2, np.pi)) == identify(1j * rotation_block(-np.pi / 2, np.pi))
    with pytest.raises(ValueError):
        identify(rotation_block(0.0, 0.3))


def test_clifford_schedule_on_transition():
    t = Transition.parse("CA1B1")
    for e in clifford_group(t):
        s = e.schedule(t)
        u = s.unitary()
        idx = [t.lower, t.upper]
        rest = [j for j in range(DIM) if j not in idx]
        np.testing.assert_allclose(u[np.ix_(rest, rest)], np.eye(6), atol=1e-12)
        np.testing.assert_allclose(u[np.ix_(idx, idx)], e.matrix, atol=1e-12)
