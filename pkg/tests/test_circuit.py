import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrl.circuit import (
    Circuit,
    CircuitError,
    ConditionalGate,
    Gate,
    Measure,
    ParseError,
    gate_count,
    measurement_count,
    parse,
    run,
    to_text,
)
from qrl.gates import Cnot, ControlledLocal, Gxor, Local, Xor, u_y
from qrl.state import LayoutError, PureState, SystemLayout, grouped_state, random_vector

FIG1 = """\
# single-qubit protocol
layout A:2:A E:2:E R1:2 R2:2
cnot E R1
cnot E R2
cnot A R1
cnot R1 R2
cnot R1 A
measure R1 R2 as m
"""


def test_parse_basic_circuit():
    c = parse(FIG1)
    assert c.layout.labels == ("A", "E", "R1", "R2")
    assert gate_count(c).total == 5
    assert gate_count(c).by_kind == {"cnot": 5}
    assert measurement_count(c) == 1
    assert c.steps[0] == Gate(Cnot(1, 2))
    assert c.steps[-1] == Measure((2, 3), "m")


def test_round_trip_normalizes_spacing_and_comments():
    text = to_text(parse(FIG1))
    assert text.startswith("layout A:2:A E:2:E R1:2:R R2:2:R\n")
    assert to_text(parse(text)) == text


def test_inline_matrix_and_conditions_round_trip():
    text = (
        "layout E:2:E s:2 t:2\n"
        "local E 0,1i,1+0i,0\n"
        "clocal (s=1,t=0) E uy\n"
        "measure s t as m\n"
        "cgate m=10 cnot s E\n"
    )
    c = parse(text)
    assert isinstance(c.steps[0].op, Local)
    assert c.steps[0].op.matrix[0][1] == 1j
    assert c.steps[1].op == ControlledLocal(((1, 1), (2, 0)), 0, u_y(), "uy")
    assert c.steps[3] == ConditionalGate("m", (1, 0), Cnot(1, 0))
    assert parse(to_text(c)) == c


def test_qudit_cgate_digits_may_be_comma_separated():
    c = parse("layout a:12 b:12\nmeasure a b as m\ncgate m=11 gxor a b\n")
    assert c.steps[1].digits == (1, 1)  # compact form reads one digit per character
    with pytest.raises(ParseError):
        parse("layout a:12 b:12\nmeasure a as m\ncgate m=11 gxor a b\n")
    c = parse("layout a:12 b:12\nmeasure a b as m\ncgate m=11,3 gxor a b\n")
    assert c.steps[1].digits == (11, 3)
    assert parse(to_text(c)) == c


@pytest.mark.parametrize(
    "text,line,needle",
    [
        ("", 1, "missing layout"),
        ("cnot A B\n", 1, "missing layout"),
        ("cnot A A\n", 1, "control equals target"),
        ("layout A:2 B:2\ncnot A A\n", 2, "control equals target"),
        ("layout A:2 B:2\nfoo A B\n", 2, "unknown directive"),
        ("layout A:2 B:2\ncnot A\n", 2, "takes 2 arguments"),
        ("layout A:2 B:2\ncnot A C\n", 2, "undefined label"),
        ("layout A:2 B:2\n\nmeasure A as m\nmeasure B as m\n", 4, "duplicate tag"),
        ("layout A:2 B:2\ncgate m=1 cnot A B\n", 2, "undefined tag"),
        ("layout A:2 B:3\ngxor A B\n", 2, "dim"),
        ("layout A:2:Q\n", 1, "unknown role"),
        ("layout A:1\n", 1, "dim"),
        ("layout A:3 B:3\ncnot A B\n", 2, "qubit"),
        ("layout A:2\nlocal A 1,1,0,1\n", 2, "unitary"),
        ("layout A:2\nlocal A 1,0,1\n", 2, "entries"),
        ("layout A:2 B:2\nmeasure A as m\ncgate m=2 cnot A B\n", 3, "out of range"),
    ],
)
def test_parse_errors_name_the_line(text, line, needle):
    with pytest.raises(ParseError) as exc:
        parse(text)
    assert exc.value.line == line
    assert needle in str(exc.value)
    assert str(exc.value).startswith(f"line {line}, column ")


def test_missing_layout_reported_before_other_checks():
    with pytest.raises(ParseError, match="missing layout"):
        parse("measure A as m\n")


def test_circuit_validation_outside_the_parser():
    lay = SystemLayout.of(("a", 2), ("b", 2))
    with pytest.raises(CircuitError):
        Circuit(lay, (ConditionalGate("m", (0,), Cnot(0, 1)),))
    with pytest.raises(CircuitError):
        Circuit(lay, (Measure((0,), "m"), Measure((1,), "m")))
    with pytest.raises(LayoutError):
        Gxor(0, 0)


def test_until_measurement_prefix():
    c = parse(FIG1 + "cnot A R1\nmeasure R1 as n\n")
    assert gate_count(c.until_measurement(0)).total == 5
    assert measurement_count(c.until_measurement(1)) == 1
    assert c.until_measurement(5) == c


def test_run_exhaustive_probabilities_multiply():
    c = parse("layout a:2 b:2\nlocal a 0.7071067811865476,0.7071067811865476,0.7071067811865476,-0.7071067811865476\n"
              "measure a as m\nlocal b 0.7071067811865476,0.7071067811865476,0.7071067811865476,-0.7071067811865476\n"
              "measure b as n\n")
    trace = run(c, grouped_state(c.layout, []))
    assert [b.outcome for b in trace.branches] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert [b.probability for b in trace.branches] == pytest.approx([0.25] * 4)
    assert trace.branches[2].outcome_of("m") == (1,)
    assert trace.total_probability == pytest.approx(1.0)


def test_conditional_gate_applies_only_on_matching_branch():
    c = parse("layout a:2 b:2\nmeasure a as m\ncgate m=1 cnot a b\n")
    init = PureState(c.layout, np.array([1, 0, 1, 0]) / math.sqrt(2))
    trace = run(c, init)
    assert trace.branches[0].state.terms() == pytest.approx({(0, 0): 1})
    assert trace.branches[1].state.terms() == pytest.approx({(1, 1): 1})


def test_run_sample_mode_is_seeded():
    c = parse("layout a:2 b:2\nmeasure a b as m\n")
    init = PureState(c.layout, np.full(4, 0.5))
    outs = {run(c, init, rng_seed=s, mode="sample").branches[0].outcome for s in range(40)}
    assert len(outs) > 1
    a = run(c, init, rng_seed=9, mode="sample").branches[0]
    b = run(c, init, rng_seed=9, mode="sample").branches[0]
    assert a.outcome == b.outcome and a.probability == pytest.approx(0.25)
    with pytest.raises(ValueError):
        run(c, init, mode="sample")
    with pytest.raises(ValueError):
        run(c, init, mode="bogus")


def test_run_rejects_layout_mismatch():
    c = parse("layout a:2 b:2\n")
    with pytest.raises(LayoutError):
        run(c, PureState(SystemLayout.of(("a", 2)), [1, 0]))


@st.composite
def circuits(draw):
    dims = draw(st.lists(st.integers(2, 4), min_size=2, max_size=4))
    lay = SystemLayout.of(*[(f"q{i}", d) for i, d in enumerate(dims)])
    steps, tags = [], []
    for _ in range(draw(st.integers(0, 8))):
        i = draw(st.integers(0, len(dims) - 1))
        j = draw(st.integers(0, len(dims) - 1).filter(lambda k: k != i))
        choice = draw(st.sampled_from(["gxor", "xor", "cnot", "local", "measure", "cgate"]))
        if choice in ("gxor", "xor", "cnot") and dims[i] == dims[j]:
            if choice == "cnot" and dims[i] != 2:
                choice = "gxor"
            steps.append(Gate({"gxor": Gxor, "xor": Xor, "cnot": Cnot}[choice](i, j)))
        elif choice == "local":
            theta = draw(st.floats(0, 3.0))
            m = np.eye(dims[i], dtype=complex)
            m[0, 0] = complex(math.cos(theta), math.sin(theta))
            steps.append(Gate(Local(i, m)))
        elif choice == "measure":
            tag = f"m{len(tags)}"
            tags.append((tag, i))
            steps.append(Measure((i,), tag))
        elif choice == "cgate" and tags:
            tag, sub = draw(st.sampled_from(tags))
            d = draw(st.integers(0, dims[sub] - 1))
            k = draw(st.integers(0, len(dims) - 1).filter(lambda x: x != sub))
            steps.append(ConditionalGate(tag, (d,), Local(k, np.eye(dims[k]))))
    return Circuit(lay, tuple(steps))


@settings(max_examples=60, deadline=None)
@given(circuits())
def test_print_parse_round_trip(c):
    text = to_text(c)
    assert parse(text) == c
    assert to_text(parse(text)) == text


@settings(max_examples=25, deadline=None)
@given(circuits(), st.integers(0, 2**32 - 1))
def test_exhaustive_run_conserves_probability(c, seed):
    init = PureState(c.layout, random_vector(np.random.default_rng(seed), c.layout.total_dim))
    trace = run(c, init)
    assert trace.total_probability == pytest.approx(1.0, abs=1e-12)
    for b in trace.branches:
        assert b.state.is_normalized()
