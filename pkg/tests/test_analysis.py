import math

import numpy as np
import pytest

from qrl import reference as ref
from qrl.analysis import (
    basis_agreement,
    build_report,
    check_outcome_injectivity,
    exchange_invariance_error,
    learning_fidelity,
    recover_mixed_params,
    register_patterns,
)
from qrl.circuit import run
from qrl.protocols import (
    build_larger_env_feedback,
    build_larger_env_register_rich,
    build_mixed_state,
    build_multiqubit,
    build_multiqudit,
    build_qudit,
    build_single_qubit,
    random_density,
)
from qrl.state import DegenerateInputError, DensityOperator, LayoutError, PureState, SystemLayout

PAIR = SystemLayout.of(("A", 2), ("E", 2))


def pair_state(*amps):
    return PureState(PAIR, np.array(amps, dtype=complex) / np.linalg.norm(amps))


def test_metrics_on_simple_states():
    assert learning_fidelity(pair_state(0, 1, 0, 0), "A", "E") == pytest.approx(0.0, abs=1e-12)
    assert basis_agreement(pair_state(0, 1, 0, 0), "A", "E") == 0.0
    assert basis_agreement(pair_state(1, 0, 0, 1), "A", "E") == pytest.approx(1.0)
    assert basis_agreement(pair_state(1, 0, 1, 0), "A", "E") == pytest.approx(0.5)
    assert exchange_invariance_error(pair_state(0, 1, 0, 0), "A", "E") == pytest.approx(1.0)
    assert exchange_invariance_error(pair_state(1, 0, 0, 1), "A", "E") == 0.0


def test_dimension_mismatch():
    lay = SystemLayout.of(("A", 2), ("E", 3))
    s = PureState(lay, np.eye(6)[0])
    for fn in (learning_fidelity, basis_agreement, exchange_invariance_error):
        with pytest.raises(LayoutError):
            fn(s, "A", "E")


def test_fidelity_of_equal_mixtures_is_one():
    # entangled branch: both reductions are the same diagonal mixture
    s = pair_state(0.6, 0, 0, 0.8)
    assert learning_fidelity(s, "A", "E") == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "scenario",
    [build_single_qubit(), build_multiqubit(2), build_qudit(3), build_qudit(6), build_multiqudit(2, 3),
     build_larger_env_feedback(), build_larger_env_register_rich()],
    ids=lambda s: f"{s.name}{s.params}",
)
def test_every_branch_has_maximal_fidelity(scenario):
    for seed in range(20):
        r = build_report(scenario, scenario.random_inputs(seed), seed=seed)
        assert r.passed, r.failures()
        assert r.min_fidelity >= 1 - 1e-9
        assert min(b.agreement for b in r.branches) >= 1 - 1e-9


def test_feedback_e2_is_not_learned():
    s = build_larger_env_feedback()
    worst = min(
        learning_fidelity(b, "A", "E2")
        for seed in range(5)
        for b in run(s.circuit, s.random_initial_state(seed)).branches
    )
    assert worst < 0.99


def test_feedback_reward_branches_are_exchange_invariant():
    s = build_larger_env_feedback()
    trace = run(s.circuit.until_measurement(1), s.random_initial_state(3))
    for b in trace.branches:
        assert exchange_invariance_error(b, "A", "E1") <= 1e-12
        assert learning_fidelity(b, "A", "E1") == pytest.approx(1.0, abs=1e-9)


def test_report_examples():
    s = build_single_qubit()
    r = build_report(s, s.random_inputs(1), seed=1)
    assert r.passed and len(r.branches) == 4
    r = build_report(build_qudit(5), build_qudit(5).random_inputs(2), seed=2)
    assert r.gate_count.total == 9 and r.injectivity is True
    d = r.to_dict()
    assert set(d) == {"scenario", "params", "seed", "branches", "gate_count", "checks", "pass"}
    assert d["gate_count"] == 9


@pytest.mark.parametrize("d", range(2, 9))
def test_qudit_injectivity_brute_force(d):
    pats = register_patterns(build_qudit(d))
    # analytic map (n, m) -> (n - m, n - 2m) and its inverse m = a - b, n = a + m
    for (n, m), outs in pats.items():
        assert outs == {((n - m) % d, (n - 2 * m) % d)}
    inverse = {next(iter(o)): k for k, o in pats.items()}
    assert all(inverse[(a, b)] == (((a - b) + a) % d, (a - b) % d) for a, b in inverse)
    assert check_outcome_injectivity(build_qudit(d), build_qudit(d).random_inputs(0))


def test_multiqubit_sixteen_patterns():
    pats = register_patterns(build_multiqubit(2))
    assert len(set().union(*pats.values())) == 16
    literal = {tuple(int(c) for c in v[4:]) for v in ref.MULTIQUBIT_TABLE.values()}
    assert set().union(*pats.values()) == literal


def test_injectivity_rejects_degenerate_input():
    s = build_single_qubit()
    with pytest.raises(DegenerateInputError):
        check_outcome_injectivity(s, [[1, 0], [0.6, 0.8]])


def test_feedback_is_not_injective():
    s = build_larger_env_feedback()
    assert not check_outcome_injectivity(s, s.random_inputs(0))


def test_recovery_exact_example():
    rho = DensityOperator(np.array([[0.7, 0.2 + 0.1j], [0.2 - 0.1j, 0.3]]))
    s = build_mixed_state(rho)
    got = recover_mixed_params(run(s.circuit, s.random_initial_state(0)).branches)
    assert got.as_tuple() == pytest.approx((0.7, 0.3, 0.2, 0.1), abs=1e-12)


def test_recovery_of_maximally_mixed():
    s = build_mixed_state(DensityOperator(np.eye(2) / 2))
    got = recover_mixed_params(run(s.circuit, s.random_initial_state(4)).branches)
    assert got.as_tuple() == pytest.approx((0.5, 0.5, 0.0, 0.0), abs=1e-12)


def test_recovery_random_exact(rng):
    for seed in range(30):
        rho = random_density(rng)
        s = build_mixed_state(rho)
        got = recover_mixed_params(run(s.circuit, s.random_initial_state(seed)).branches)
        m = rho.matrix
        assert got.as_tuple() == pytest.approx((m[0, 0].real, m[1, 1].real, m[0, 1].real, m[0, 1].imag), abs=1e-12)


def test_recovery_sampled():
    rho = DensityOperator.from_bloch(0.35, -0.1, 0.3)
    s = build_mixed_state(rho)
    r = build_report(s, s.random_inputs(5), mode="sample", seed=5, shots=100_000)
    assert r.checks["recovery"]
    got = r.recovered_params.as_tuple()
    assert got == pytest.approx((0.35, 0.65, -0.1, 0.3), abs=1.5e-2)
    assert "recovered_params" in r.to_dict()


def test_recovery_needs_every_selector():
    s = build_mixed_state(DensityOperator(np.eye(2) / 2))
    branches = [b for b in run(s.circuit, s.random_initial_state(0)).branches if b.outcome[2:] != (0, 0, 1)]
    with pytest.raises(DegenerateInputError):
        recover_mixed_params(branches)


def test_recovered_agent_digit_is_register_parity():
    s = build_mixed_state(DensityOperator.from_bloch(0.6, 0.1, 0.2))
    for b in run(s.circuit, s.random_initial_state(1)).branches:
        a = b.state.layout.index("A")
        digits = {d[a] for d in b.state.terms()}
        assert digits == {b.outcome[0] ^ b.outcome[1]}
