import math

import numpy as np
import pytest

from qrl.measure import enumerate_branches, outcome_distribution, sample_branch, sample_outcomes
from qrl.state import LayoutError, PureState, SystemLayout, partial_trace, random_vector

BELL = PureState(SystemLayout.of(("a", 2), ("b", 2)), np.array([1, 0, 0, 1]) / math.sqrt(2))


def test_bell_pair_gives_two_even_branches(backend):
    branches = enumerate_branches(BELL, ["a"])
    assert [b.digits for b in branches] == [(0,), (1,)]
    assert [b.probability for b in branches] == pytest.approx([0.5, 0.5], abs=1e-15)
    assert branches[1].post_state.terms() == pytest.approx({(1, 1): 1.0})


def test_definite_state_gives_single_branch(backend):
    s = PureState(SystemLayout.of(("a", 3), ("b", 2)), np.eye(6)[5])
    (b,) = enumerate_branches(s, ["a", "b"])
    assert b.digits == (2, 1)
    assert b.probability == pytest.approx(1.0)


def test_probabilities_sum_to_one_and_post_states_normalize(backend, rng):
    lay = SystemLayout.of(("a", 3), ("b", 2), ("c", 4))
    s = PureState(lay, random_vector(rng, lay.total_dim))
    branches = enumerate_branches(s, ["c", "a"])
    assert sum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-12)
    for b in branches:
        assert b.post_state.is_normalized()
        assert b.outcomes == ((2, b.digits[0]), (0, b.digits[1]))


def test_measurement_preserves_the_unmeasured_marginal(backend, rng):
    lay = SystemLayout.of(("a", 2), ("b", 3), ("c", 2))
    s = PureState(lay, random_vector(rng, lay.total_dim))
    before = partial_trace(s, ["b", "c"]).matrix
    after = sum(b.probability * partial_trace(b.post_state, ["b", "c"]).matrix for b in enumerate_branches(s, ["a"]))
    assert np.allclose(before, after, atol=1e-10)


def test_branches_are_orthogonal(backend, rng):
    lay = SystemLayout.of(("a", 2), ("b", 2), ("c", 2))
    s = PureState(lay, random_vector(rng, 8))
    posts = [b.post_state.amplitudes for b in enumerate_branches(s, ["a", "c"])]
    for i in range(len(posts)):
        for j in range(i + 1, len(posts)):
            assert abs(np.vdot(posts[i], posts[j])) < 1e-15


def test_outcome_order_follows_requested_subsystems():
    s = PureState(SystemLayout.of(("a", 2), ("b", 3)), np.eye(6)[1])  # a=0, b=1
    tuples, probs = outcome_distribution(s, ["b", "a"])
    assert tuples[int(np.argmax(probs))] == (1, 0)


def test_invalid_subsystems():
    with pytest.raises(LayoutError):
        enumerate_branches(BELL, [])
    with pytest.raises(LayoutError):
        enumerate_branches(BELL, ["z"])


def test_sampling_is_seeded_and_concentrates():
    rng = np.random.default_rng(42)
    hits = sum(sample_branch(BELL, ["a"], rng).digits == (0,) for _ in range(10_000))
    assert abs(hits / 10_000 - 0.5) < 5e-2
    seq = lambda: [sample_branch(BELL, ["a"], np.random.default_rng(7)).digits for _ in range(5)]
    assert seq() == seq()
    h1 = sample_outcomes(BELL, ["a", "b"], 1000, np.random.default_rng(3))
    h2 = sample_outcomes(BELL, ["a", "b"], 1000, np.random.default_rng(3))
    assert h1 == h2 and set(h1) <= {(0, 0), (1, 1)} and sum(h1.values()) == 1000


def test_post_state_support_hint_matches_full_scan(rng):
    from qrl.state import support

    lay = SystemLayout.of(("a", 2), ("b", 3), ("c", 2), ("d", 2))
    s = PureState(lay, random_vector(rng, lay.total_dim))
    for b in enumerate_branches(s, ["b", "d"]):
        nz, digits = support(b.post_state)
        assert np.array_equal(nz, np.flatnonzero(b.post_state.amplitudes))
        assert all(digits[1] == b.digits[0]) and all(digits[3] == b.digits[1])
