"""Learning metrics and the per-scenario claim checks built on them."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Circuit, ExecutionTrace, Gate, GateCount, Measure, TraceBranch, gate_count, iter_run, run
from .gates import Gxor, Xor
from .measure import OutcomeBranch, sample_outcomes
from .protocols import SELECTOR_PATTERNS, Scenario
from .state import (
    DegenerateInputError,
    LayoutError,
    PureState,
    Role,
    density_fidelity,
    partial_trace,
    swap_subsystems,
    support,
    _joint_index,
)

FIDELITY_TOL = 1e-9
EXCHANGE_TOL = 1e-12
RECOVERY_TOL_EXACT = 1e-12
RECOVERY_TOL_SAMPLED = 1.5e-2
PROBABILITY_TOL = 1e-12
DEFAULT_SHOTS = 100_000


def _state_of(x) -> PureState:
    if isinstance(x, PureState):
        return x
    if isinstance(x, OutcomeBranch):
        return x.post_state
    if isinstance(x, TraceBranch):
        return x.state
    raise TypeError(f"expected a state or branch, got {type(x).__name__}")


def _pair_axes(state: PureState, agent, env) -> tuple[tuple[int, ...], tuple[int, ...]]:
    layout = state.layout
    a = layout.indices([agent] if isinstance(agent, (int, str)) else agent)
    e = layout.indices([env] if isinstance(env, (int, str)) else env)
    if set(a) & set(e):
        raise LayoutError("agent and environment overlap")
    da = math.prod(layout.dims[i] for i in a)
    de = math.prod(layout.dims[i] for i in e)
    if da != de:
        raise LayoutError(f"agent dim {da} != environment dim {de}")
    return a, e


def learning_fidelity(branch, agent, env) -> float:
    """Uhlmann fidelity between the agent and environment reductions of a branch."""
    state = _state_of(branch)
    a, e = _pair_axes(state, agent, env)
    return density_fidelity(partial_trace(state, a), partial_trace(state, e))


def basis_agreement(branch, agent, env) -> float:
    """Exact probability that agent and environment read out the same digit string."""
    state = _state_of(branch)
    a, e = _pair_axes(state, agent, env)
    nz, digits = support(state)
    probs = np.abs(state.amplitudes[nz]) ** 2
    same = _joint_index(digits, a, state.layout.dims) == _joint_index(digits, e, state.layout.dims)
    return float(probs[same].sum() / probs.sum())


def exchange_invariance_error(state, agent, env) -> float:
    """Max amplitude change when every agent subsystem is swapped with its partner."""
    state = _state_of(state)
    a, e = _pair_axes(state, agent, env)
    if len(a) != len(e):
        raise LayoutError("pairwise exchange needs equally many agent and environment subsystems")
    swapped = state
    for i, j in zip(a, e):
        swapped = swap_subsystems(swapped, i, j)
    return float(np.max(np.abs(swapped.amplitudes - state.amplitudes)))


# ---------------------------------------------------------------- injectivity


def _first_measure(circuit: Circuit) -> Measure:
    for step in circuit.steps:
        if isinstance(step, Measure):
            return step
    raise ValueError("circuit has no measurement")


def _permutation_image(circuit: Circuit, digits: tuple[int, ...]) -> tuple[int, ...] | None:
    """Push a basis state through a circuit of shift gates; None if any other step appears."""
    out = list(digits)
    dims = circuit.layout.dims
    for step in circuit.steps:
        if not (isinstance(step, Gate) and isinstance(step.op, Gxor)):
            return None
        c, t = step.op.control, step.op.target
        if isinstance(step.op, Xor):
            out[t] = (out[c] + out[t]) % dims[t]
        else:  # gxor and cnot
            out[t] = (out[c] - out[t]) % dims[t]
    return tuple(out)


def register_patterns(scenario: Scenario, tol: float = 1e-12) -> dict[tuple[int, ...], set]:
    """For every basis input of the free groups, the register readouts it can produce."""
    prefix = scenario.circuit.until_measurement(0)
    measured = _first_measure(scenario.circuit).subsystems
    layout = scenario.layout
    out = {}
    for combo in itertools.product(*(range(d) for d in scenario.group_dims())):
        vecs = []
        for k, d in zip(combo, scenario.group_dims()):
            v = np.zeros(d, dtype=np.complex128)
            v[k] = 1.0
            vecs.append(v)
        image = None
        if not scenario.fixed_groups:
            digits = [0] * len(layout)
            for k, group in zip(combo, scenario.input_groups):
                for i, dgt in zip(group, np.unravel_index(k, [layout.dims[i] for i in group])):
                    digits[i] = int(dgt)
            image = _permutation_image(prefix, tuple(digits))
        if image is not None:
            out[combo] = {tuple(image[i] for i in measured)}
            continue
        final = run(prefix, scenario.initial_state(vecs)).branches[0].state
        out[combo] = {
            tuple(digits[i] for i in measured) for digits, amp in final.terms(tol).items()
        }
    return out


def check_outcome_injectivity(scenario: Scenario, inputs: Sequence[Sequence[complex]]) -> bool:
    """True iff distinct input basis pairs never share a register readout before measurement."""
    for vec in inputs:
        if np.min(np.abs(np.asarray(vec))) <= 1e-14:
            raise DegenerateInputError("injectivity needs every input coefficient nonzero")
    seen: set = set()
    for outs in register_patterns(scenario).values():
        if outs & seen:
            return False
        seen |= outs
    return True


# ---------------------------------------------------------------- mixed environments


@dataclass(frozen=True)
class RecoveredParams:
    rho00: float
    rho11: float
    re01: float
    im01: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.rho00, self.rho11, self.re01, self.im01)


def _agent_zero(state: PureState) -> float:
    a = state.layout.with_role(Role.AGENT)[0]
    return float(partial_trace(state, [a]).matrix[0, 0].real)


def recover_mixed_params(branches: Sequence[TraceBranch], counts: dict | None = None) -> RecoveredParams:
    """Read populations and coherences off the selector-conditioned agent statistics.

    With ``counts`` (outcome tuple -> shots) the branch weights are empirical
    frequencies; otherwise the exact branch probabilities are used.
    """
    if not branches:
        raise DegenerateInputError("no branches to recover from")
    layout = branches[0].state.layout
    sel_axes = layout.indices(["R3", "R4", "R5"])
    weight = {name: 0.0 for name in SELECTOR_PATTERNS}
    zero = {name: 0.0 for name in SELECTOR_PATTERNS}
    by_bits = {bits: name for name, bits in SELECTOR_PATTERNS.items()}
    for b in branches:
        w = b.probability if counts is None else counts.get(b.outcome, 0)
        digits = b.state.layout.digits(int(np.argmax(np.abs(b.state.amplitudes))))
        name = by_bits.get(tuple(digits[i] for i in sel_axes))
        if name is None or w == 0:
            continue
        weight[name] += w
        zero[name] += w * _agent_zero(b.state)
    for name, w in weight.items():
        if w <= 0:
            raise DegenerateInputError(f"no weight on the {name} selector branch")
    p = {name: zero[name] / weight[name] for name in weight}
    return RecoveredParams(p["population"], 1.0 - p["population"], p["real"] - 0.5, p["imag"] - 0.5)


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class BranchRecord:
    outcome: tuple[int, ...]
    probability: float
    fidelity: float
    agreement: float


@dataclass
class ScenarioReport:
    scenario: str
    params: dict
    seed: int | None
    branches: list[BranchRecord]
    exchange_error: float | None
    gate_count: GateCount
    injectivity: bool | None
    checks: dict[str, bool] = field(default_factory=dict)
    recovered_params: RecoveredParams | None = None
    passed: bool = False

    @property
    def min_fidelity(self) -> float:
        return min(b.fidelity for b in self.branches)

    def failures(self) -> list[str]:
        return [k for k, ok in self.checks.items() if not ok]

    def to_dict(self) -> dict:
        out = {
            "scenario": self.scenario,
            "params": dict(self.params),
            "seed": self.seed,
            "branches": [
                {"outcome": list(b.outcome), "probability": b.probability, "fidelity": b.fidelity, "agreement": b.agreement}
                for b in self.branches
            ],
            "gate_count": self.gate_count.total,
            "checks": dict(self.checks),
            "pass": self.passed,
        }
        if self.recovered_params is not None:
            r = self.recovered_params
            out["recovered_params"] = {"rho00": r.rho00, "rho11": r.rho11, "re01": r.re01, "im01": r.im01}
        return out


def _exchange_error(scenario: Scenario, initial: PureState) -> float | None:
    if scenario.exchange_point is None:
        return None
    agents, envs = scenario.fidelity_targets[0]
    if scenario.exchange_point == "pre":
        state = run(scenario.circuit.until_measurement(0), initial).branches[0].state
        return exchange_invariance_error(state, agents, envs)
    # after the reward gates, on every first-readout branch
    trace = run(scenario.circuit.until_measurement(1), initial)
    return max(exchange_invariance_error(b.state, agents, envs) for b in trace.branches)


def _branch_record(b: TraceBranch, targets) -> BranchRecord:
    fid = min(learning_fidelity(b, a, e) for a, e in targets)
    agr = min(basis_agreement(b, a, e) for a, e in targets)
    return BranchRecord(b.outcome, float(b.probability), fid, agr)


def build_report(
    scenario: Scenario,
    inputs: Sequence[Sequence[complex]],
    mode: str = "exhaustive",
    seed: int | None = None,
    shots: int = DEFAULT_SHOTS,
) -> ScenarioReport:
    """Run ``scenario`` on ``inputs`` and evaluate every claim that applies to it."""
    initial = scenario.initial_state(inputs)
    # stream the leaves so only one branch state is alive at a time
    records, kept, total = [], [], 0.0
    for b in iter_run(scenario.circuit, initial, rng_seed=seed, mode=mode):
        records.append(_branch_record(b, scenario.fidelity_targets))
        total += b.probability
        if scenario.rho is not None:
            kept.append(b)
    count = gate_count(scenario.circuit)
    exch = _exchange_error(scenario, initial)

    checks = {
        "fidelity": min(r.fidelity for r in records) >= 1 - FIDELITY_TOL,
        "agreement": min(r.agreement for r in records) >= 1 - FIDELITY_TOL,
        "gate_count": count.total == scenario.expected_gates,
    }
    if mode == "exhaustive":
        checks["probability_sum"] = abs(total - 1.0) <= PROBABILITY_TOL
    if exch is not None:
        checks["exchange_invariance"] = exch <= EXCHANGE_TOL

    injective = None
    if scenario.injective:
        injective = check_outcome_injectivity(scenario, inputs)
        checks["injectivity"] = injective

    recovered = None
    if scenario.rho is not None:
        recovered, tol = _recover(scenario, initial, kept, mode, seed, shots)
        m = scenario.rho.matrix
        truth = (m[0, 0].real, m[1, 1].real, m[0, 1].real, m[0, 1].imag)
        checks["recovery"] = bool(max(abs(x - t) for x, t in zip(recovered.as_tuple(), truth)) <= tol)

    report = ScenarioReport(
        scenario=scenario.name,
        params=dict(scenario.params),
        seed=seed,
        branches=records,
        exchange_error=exch,
        gate_count=count,
        injectivity=injective,
        checks=checks,
        recovered_params=recovered,
    )
    report.passed = all(checks.values())
    return report


def _recover(scenario, initial, branches: list[TraceBranch], mode, seed, shots):
    if mode == "exhaustive":
        return recover_mixed_params(branches), RECOVERY_TOL_EXACT
    exact = run(scenario.circuit, initial)
    pre = run(scenario.circuit.until_measurement(0), initial).branches[0].state
    measured = _first_measure(scenario.circuit).subsystems
    counts = sample_outcomes(pre, measured, shots, np.random.default_rng(seed))
    return recover_mixed_params(exact.branches, counts), RECOVERY_TOL_SAMPLED


def exec_records(trace: ExecutionTrace) -> list[dict]:
    """Per-branch records for an arbitrary circuit run.

    Fidelity and agreement are included when the layout has agent and
    environment roles; agents are paired with the first environments.
    """
    layout = trace.circuit.layout
    agents = layout.with_role(Role.AGENT)
    envs = layout.with_role(Role.ENVIRONMENT)[: len(agents)]
    paired = bool(agents) and len(envs) == len(agents)
    out = []
    for b in trace.branches:
        rec = {"outcome": list(b.outcome), "probability": float(b.probability)}
        if paired:
            rec["fidelity"] = learning_fidelity(b, agents, envs)
            rec["agreement"] = basis_agreement(b, agents, envs)
        out.append(rec)
    return out
