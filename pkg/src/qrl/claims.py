"""The verification suite behind ``qrl verify``.

Each claim is a small function returning a :class:`ClaimResult`; claims are
grouped so ``--only`` can select a subset.  Trial counts and tolerances are
the ones the acceptance tests use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Callable

import numpy as np

from . import reference as ref
from .analysis import (
    RECOVERY_TOL_EXACT,
    RECOVERY_TOL_SAMPLED,
    basis_agreement,
    exchange_invariance_error,
    exec_records,
    learning_fidelity,
    recover_mixed_params,
    register_patterns,
)
from .circuit import Circuit, Measure, gate_count, measurement_count, parse, run, to_text
from .gates import Gxor, Xor, gate_matrix
from .measure import sample_outcomes
from .protocols import (
    build_larger_env_feedback,
    build_larger_env_register_rich,
    build_mixed_state,
    build_multiqubit,
    build_multiqudit,
    build_qudit,
    build_single_qubit,
    purify,
    random_density,
)
from .state import DensityOperator, PureState, SystemLayout, grouped_state

TERM_TOL = 1e-12
FID_TOL = 1e-9
EXCHANGE_TOL = 1e-12
TRIALS = 100
QUDIT_DIMS = range(2, 9)

GOLDEN = {
    "fig1": build_single_qubit,
    "fig2": lambda: build_multiqubit(2),
    "fig3": lambda: build_qudit(4),
    "fig4": build_larger_env_feedback,
    "registers": build_larger_env_register_rich,
    "multiqudit": lambda: build_multiqudit(2, 3),
    "mixed": lambda: build_mixed_state(DensityOperator.from_bloch(0.5, 0.0, 0.0)),
}


@dataclass(frozen=True)
class ClaimResult:
    claim: str
    anchor: str
    measured: float
    tolerance: float
    passed: bool
    kind: str = "max"  # "max": measured <= tolerance; "min": measured >= 1 - tolerance; "eq": exact


@dataclass(frozen=True)
class Claim:
    name: str
    group: str
    anchor: str
    check: Callable[[], ClaimResult]


def _le(claim, anchor, measured, tol) -> ClaimResult:
    return ClaimResult(claim, anchor, float(measured), tol, bool(measured <= tol), "max")


def _ge1(claim, anchor, measured, tol) -> ClaimResult:
    return ClaimResult(claim, anchor, float(measured), tol, bool(measured >= 1 - tol), "min")


def _exact(claim, anchor, ok: bool, measured=None) -> ClaimResult:
    return ClaimResult(claim, anchor, float(ok if measured is None else measured), 0.0, bool(ok), "eq")


def _pre_state(scenario, inputs) -> PureState:
    return run(scenario.circuit.until_measurement(0), scenario.initial_state(inputs)).branches[0].state


def _through_measure(circuit: Circuit, k: int) -> Circuit:
    """Prefix ending right after the ``k``-th measurement."""
    seen = 0
    for i, step in enumerate(circuit.steps):
        if isinstance(step, Measure):
            if seen == k:
                return Circuit(circuit.layout, circuit.steps[: i + 1])
            seen += 1
    return circuit


def _min_branch_metrics(scenario, seeds) -> tuple[float, float]:
    fid, agr = 1.0, 1.0
    for seed in seeds:
        trace = run(scenario.circuit, scenario.random_initial_state(seed))
        for b in trace.branches:
            for a, e in scenario.fidelity_targets:
                fid = min(fid, learning_fidelity(b, a, e))
                agr = min(agr, basis_agreement(b, a, e))
    return fid, agr


# ---------------------------------------------------------------- 1: single-qubit fidelity


def claim_single_fidelity() -> ClaimResult:
    fid, agr = _min_branch_metrics(build_single_qubit(), range(TRIALS))
    return _ge1("single: min fidelity and agreement over all branches", "single-qubit fidelity", min(fid, agr), FID_TOL)


# ---------------------------------------------------------------- 2: printed states


def _term_error(scenario, expected: Callable, seeds=range(10)) -> float:
    err = 0.0
    for seed in seeds:
        inputs = scenario.random_inputs(seed)
        err = max(err, ref.max_term_error(_pre_state(scenario, inputs), expected(*inputs)))
    return err


def claim_single_terms() -> ClaimResult:
    err = _term_error(build_single_qubit(), ref.single_qubit_final)
    return _le("single: final state term by term", "single-qubit final state", err, TERM_TOL)


def claim_multiqubit_terms() -> ClaimResult:
    err = _term_error(build_multiqubit(2), ref.multiqubit_final)
    return _le("multiqubit n=2: final state term by term", "multiqubit final state", err, TERM_TOL)


def claim_qudit_terms() -> ClaimResult:
    err = max(_term_error(build_qudit(d), ref.qudit_final) for d in QUDIT_DIMS)
    return _le("qudit D=2..8: final state term by term", "qudit final state", err, TERM_TOL)


def claim_qudit_d4_terms() -> ClaimResult:
    err = _term_error(build_qudit(4), ref.qudit_d4_final)
    return _le("qudit D=4: all 16 printed coefficients", "qudit D=4 worked example", err, TERM_TOL)


def claim_multiqudit_terms() -> ClaimResult:
    err = 0.0
    for d in (2, 3, 4):
        s = build_multiqudit(2, d)
        err = max(err, _term_error(s, lambda a, e, d=d: ref.multiqudit_final(a, e, 2, d), range(5)))
    return _le("multiqudit n=2 D=2..4: final state term by term", "multiqudit final state", err, TERM_TOL)


def feedback_branch_error(seeds=range(10)) -> float:
    s = build_larger_env_feedback()
    err = 0.0
    for seed in seeds:
        a, e = s.random_inputs(seed)
        init = s.initial_state([a, e])
        for rewarded, circ in ((False, _through_measure(s.circuit, 0)), (True, s.circuit.until_measurement(1))):
            expected = ref.feedback_branches(a, e, rewarded)
            trace = run(circ, init)
            if {b.outcome for b in trace.branches} != set(expected):
                return math.inf
            for b in trace.branches:
                err = max(err, ref.max_term_error(b.state, expected[b.outcome], 1 / math.sqrt(b.probability)))
    return err


def claim_feedback_terms() -> ClaimResult:
    return _le(
        "largerenv-feedback: branches after readout and after reward", "larger-environment branches",
        feedback_branch_error(), TERM_TOL,
    )


def mixed_term_error(rho: DensityOperator, seed: int) -> float:
    """Twelve-term comparison; the population slice is also checked with its purifier kets."""
    s = build_mixed_state(rho)
    (alpha,) = s.random_inputs(seed)
    pre = _pre_state(s, [alpha])
    lay = s.layout
    m = rho.matrix
    mags = ref.mixed_final_magnitudes(alpha, m[0, 0].real, m[0, 1].real, m[0, 1].imag)
    err = ref.max_marginal_error(pre, lay.index("e"), mags)
    pur = purify(rho).vector.reshape(2, 2)
    exact = {}
    for ia in (0, 1):
        for env in (0, 1):
            for p in (0, 1):
                exact[(env, env, p, ia ^ env, ia, 1, 0, 0)] = alpha[ia] * pur[env, p] / math.sqrt(3)
    sel = pre.tensor()[..., 1, 0, 0]
    want = ref.as_vector(exact, lay.dims).reshape(lay.dims)[..., 1, 0, 0]
    return max(err, float(np.max(np.abs(sel - want))))


def claim_mixed_terms() -> ClaimResult:
    rng = np.random.default_rng(7)
    err = max(mixed_term_error(random_density(rng), seed) for seed in range(10))
    return _le("mixed: twelve-term expansion", "mixed-state expansion", err, TERM_TOL)


# ---------------------------------------------------------------- 3: gate counts


def claim_gate_counts() -> ClaimResult:
    bad = 0
    for d in QUDIT_DIMS:
        bad += gate_count(build_qudit(d).circuit).total != 9
    for n in (1, 2, 3):
        bad += gate_count(build_multiqudit(n, 3).circuit).total != 9 * n
    bad += gate_count(build_multiqudit(2, 2).circuit).total != 18
    bad += gate_count(build_multiqubit(2).circuit).total != 10
    bad += gate_count(build_single_qubit().circuit).total != 5
    return _exact("gate counts 9, 9n, 18 and 5n", "gate-count statements", bad == 0, bad)


# ---------------------------------------------------------------- 4: GXOR algebra


def _pair_layout(d: int) -> SystemLayout:
    return SystemLayout.of(("c", d), ("t", d))


def claim_gxor_algebra() -> ClaimResult:
    bad = 0
    for d in (2, 3, 4, 5):
        g = gate_matrix(Gxor(0, 1), _pair_layout(d))
        bad += not np.array_equal(g, g.conj().T)
        bad += not np.array_equal(g @ g, np.eye(d * d))
        bad += not np.array_equal(g.conj().T @ g, np.eye(d * d))
    for d in (3, 4, 5):
        x = gate_matrix(Xor(0, 1), _pair_layout(d))
        bad += np.array_equal(x, x.conj().T)
        bad += not np.array_equal(x.conj().T @ x, np.eye(d * d))
    return _exact("GXOR Hermitian and self-inverse; XOR not Hermitian for D>2", "GXOR definition", bad == 0, bad)


# ---------------------------------------------------------------- 5: injectivity


def claim_qudit_injectivity() -> ClaimResult:
    bad = 0
    for d in QUDIT_DIMS:
        pats = register_patterns(build_qudit(d))
        outs = [next(iter(v)) for v in pats.values() if len(v) == 1]
        bad += len(outs) != d * d or len(set(outs)) != d * d
        bad += any(pats[(n, m)] != {((n - m) % d, (n - 2 * m) % d)} for n in range(d) for m in range(d))
    return _exact("qudit D=2..8: register outcomes distinct", "qudit register outcomes", bad == 0, bad)


def claim_multiqubit_injectivity() -> ClaimResult:
    pats = register_patterns(build_multiqubit(2))
    outs = set().union(*pats.values())
    return _exact("multiqubit n=2: 16 distinct register patterns", "multiqubit final state", len(outs) == 16, len(outs))


# ---------------------------------------------------------------- 6: exchange invariance


def claim_exchange() -> ClaimResult:
    err = 0.0
    scenarios = [build_single_qubit()] + [build_qudit(d) for d in (3, 4, 5)]
    for s in scenarios:
        agents, envs = s.fidelity_targets[0]
        for seed in range(TRIALS):
            err = max(err, exchange_invariance_error(_pre_state(s, s.random_inputs(seed)), agents, envs))
    return _le("single and qudit: swap error of final states", "exchange invariance", err, EXCHANGE_TOL)


# ---------------------------------------------------------------- 7: larger environments


def claim_feedback_fidelity() -> ClaimResult:
    s = build_larger_env_feedback()
    fid, agr = _min_branch_metrics(s, range(TRIALS))
    err = 0.0
    for seed in range(TRIALS):
        for b in run(s.circuit.until_measurement(1), s.random_initial_state(seed)).branches:
            fid = min(fid, learning_fidelity(b, "A", "E1"))
            agr = min(agr, basis_agreement(b, "A", "E1"))
            err = max(err, exchange_invariance_error(b, "A", "E1"))
    ok = fid >= 1 - FID_TOL and agr >= 1 - FID_TOL and err <= EXCHANGE_TOL
    return ClaimResult(
        "largerenv-feedback: (A,E1) fidelity, agreement and exchange after reward",
        "larger-environment fidelity", min(fid, agr), FID_TOL, ok, "min",
    )


def claim_register_rich() -> ClaimResult:
    s = build_larger_env_register_rich()
    fid, agr = _min_branch_metrics(s, range(TRIALS))
    structural = gate_count(s.circuit).total == 6 and measurement_count(s.circuit) == 1
    err = _term_error(s, ref.register_rich_final)
    ok = structural and min(fid, agr) >= 1 - FID_TOL and err <= TERM_TOL
    return ClaimResult(
        "largerenv-registers: one readout, 6 gates, fidelity 1", "register-rich variant",
        min(fid, agr), FID_TOL, ok, "min",
    )


# ---------------------------------------------------------------- 8: mixed recovery


def _truth(rho: DensityOperator) -> tuple[float, ...]:
    m = rho.matrix
    return (m[0, 0].real, m[1, 1].real, m[0, 1].real, m[0, 1].imag)


def recovery_error(rho: DensityOperator, seed: int, shots: int | None = None) -> float:
    s = build_mixed_state(rho)
    init = s.random_initial_state(seed)
    trace = run(s.circuit, init)
    counts = None
    if shots is not None:
        pre = run(s.circuit.until_measurement(0), init).branches[0].state
        counts = sample_outcomes(pre, s.circuit.steps[-1].subsystems, shots, np.random.default_rng(seed))
    got = recover_mixed_params(trace.branches, counts).as_tuple()
    return max(abs(x - t) for x, t in zip(got, _truth(rho)))


def claim_mixed_exact() -> ClaimResult:
    rng = np.random.default_rng(11)
    err = max(recovery_error(random_density(rng), seed) for seed in range(TRIALS))
    return _le("mixed: exact recovery of rho over 100 random rho", "coherence recovery", err, RECOVERY_TOL_EXACT)


def claim_mixed_sampled() -> ClaimResult:
    rng = np.random.default_rng(13)
    err = max(recovery_error(random_density(rng), seed, shots=100_000) for seed in range(20))
    return _le("mixed: sampled recovery, 1e5 shots, 20 random rho", "coherence recovery", err, RECOVERY_TOL_SAMPLED)


# ---------------------------------------------------------------- 9: purification


def claim_purification() -> ClaimResult:
    rng = np.random.default_rng(17)
    rhos = [random_density(rng) for _ in range(TRIALS)]
    rhos += [
        DensityOperator.from_bloch(0.0, 0.0, 0.0),
        DensityOperator.from_bloch(1.0, 0.0, 0.0),
        DensityOperator.from_bloch(0.5, 0.5, 0.0),
        DensityOperator.from_bloch(0.5, 0.0, -0.5),
    ]
    err = max(float(np.max(np.abs(purify(r).reduced() - r.matrix))) for r in rhos)
    return _le("purification reproduces rho (including rho00 = 0)", "purification", err, TERM_TOL)


# ---------------------------------------------------------------- 10: golden circuits


def golden_text(name: str) -> str:
    return resources.files("qrl").joinpath("circuits", f"{name}.qrl").read_text()


def claim_roundtrip() -> ClaimResult:
    bad = 0
    for name, builder in GOLDEN.items():
        text = golden_text(name)
        bad += to_text(parse(text)) != text
        bad += to_text(builder().circuit) != text
    return _exact("golden circuits: print(parse(text)) == text and match the builders", "circuit text format", bad == 0, bad)


def claim_golden_exec() -> ClaimResult:
    """fig1..fig4 parsed from text reproduce the builder states and metrics."""
    err, fid = 0.0, 1.0
    for name in ("fig1", "fig2", "fig3", "fig4"):
        circuit = parse(golden_text(name))
        scenario = GOLDEN[name]()
        for seed in range(20):
            inputs = scenario.random_inputs(seed)
            groups = list(zip(scenario.input_groups, inputs))
            init = grouped_state(circuit.layout, groups)
            got = run(circuit, init)
            want = run(scenario.circuit, scenario.initial_state(inputs))
            for g, w in zip(got.branches, want.branches):
                err = max(err, float(np.max(np.abs(g.state.amplitudes - w.state.amplitudes))))
            if len(got.branches) != len(want.branches):
                err = math.inf
            for rec in exec_records(got):
                fid = min(fid, rec["fidelity"], rec["agreement"])
    ok = err <= TERM_TOL and fid >= 1 - FID_TOL
    return ClaimResult("golden fig1-fig4 executed from text", "circuit text format", fid, FID_TOL, ok, "min")


CLAIMS: tuple[Claim, ...] = (
    Claim("single-fidelity", "single", "single-qubit fidelity", claim_single_fidelity),
    Claim("single-terms", "single", "single-qubit final state", claim_single_terms),
    Claim("multiqubit-terms", "multiqubit", "multiqubit final state", claim_multiqubit_terms),
    Claim("qudit-terms", "qudit", "qudit final state", claim_qudit_terms),
    Claim("qudit-d4-terms", "qudit", "qudit D=4 worked example", claim_qudit_d4_terms),
    Claim("multiqudit-terms", "multiqudit", "multiqudit final state", claim_multiqudit_terms),
    Claim("feedback-terms", "largerenv", "larger-environment branches", claim_feedback_terms),
    Claim("mixed-terms", "mixed", "mixed-state expansion", claim_mixed_terms),
    Claim("gate-counts", "gates", "gate-count statements", claim_gate_counts),
    Claim("gxor-algebra", "gates", "GXOR definition", claim_gxor_algebra),
    Claim("qudit-injectivity", "qudit", "qudit register outcomes", claim_qudit_injectivity),
    Claim("multiqubit-injectivity", "multiqubit", "multiqubit final state", claim_multiqubit_injectivity),
    Claim("exchange", "exchange", "exchange invariance", claim_exchange),
    Claim("feedback-fidelity", "largerenv", "larger-environment fidelity", claim_feedback_fidelity),
    Claim("register-rich", "largerenv", "register-rich variant", claim_register_rich),
    Claim("mixed-exact", "mixed", "coherence recovery", claim_mixed_exact),
    Claim("mixed-sampled", "mixed", "coherence recovery", claim_mixed_sampled),
    Claim("purification", "mixed", "purification", claim_purification),
    Claim("roundtrip", "parser", "circuit text format", claim_roundtrip),
    Claim("golden-exec", "parser", "circuit text format", claim_golden_exec),
)

GROUPS = tuple(dict.fromkeys(c.group for c in CLAIMS))


def select(only: str | None = None) -> list[Claim]:
    """Claims whose group or name matches ``only`` (all claims when ``None``)."""
    if only is None:
        return list(CLAIMS)
    picked = [c for c in CLAIMS if only in (c.group, c.name)]
    if not picked:
        raise ValueError(f"no claims match {only!r}; groups are {', '.join(GROUPS)}")
    return picked


def run_claims(only: str | None = None) -> list[ClaimResult]:
    out = []
    for c in select(only):
        try:
            out.append(c.check())
        except Exception as exc:  # a crash is a failed claim, reported with its cause
            out.append(ClaimResult(f"{c.name}: {type(exc).__name__}: {exc}", c.anchor, math.nan, 0.0, False, "eq"))
    return out
