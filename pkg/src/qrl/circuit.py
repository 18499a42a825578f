"""Circuit IR, its line-oriented text format, and the branch-tracking runner.

Text format (one directive per line, ``#`` starts a comment)::

    layout A:2:A E:2:E R1:2 R2:2      # label:dim[:role], role in A,E,R,P (default R)
    gxor E R1
    xor E R1
    cnot E R1
    local E uy                        # ux, uy, x, id or inline row-major "a+bi,..."
    clocal (R3=0,R4=1,R5=0) E uy
    measure R1 R2 as m
    cgate m=01 cnot R1 A              # gate applied only on branches where m read 01
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from .gates import (
    Cnot,
    ControlledLocal,
    GateOp,
    GateValidationError,
    Gxor,
    Local,
    Xor,
    apply_gate,
    named_matrix,
)
from .measure import OutcomeBranch, iter_branches, sample_branch
from .state import LayoutError, PureState, Role, Subsystem, SystemLayout


class CircuitError(ValueError):
    """A circuit references unknown subsystems or tags, or mixes dimensions."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Gate:
    op: GateOp


@dataclass(frozen=True)
class Measure:
    subsystems: tuple[int, ...]
    tag: str


@dataclass(frozen=True)
class ConditionalGate:
    tag: str
    digits: tuple[int, ...]
    op: GateOp


Step = Union[Gate, Measure, ConditionalGate]


def _check_op(layout: SystemLayout, op: GateOp) -> None:
    n = len(layout)
    for s in op.subsystems:
        if not 0 <= s < n:
            raise CircuitError(f"gate {op.kind} references subsystem {s} outside the layout")
    dims = layout.dims
    if isinstance(op, Gxor):
        if dims[op.control] != dims[op.target]:
            raise CircuitError(
                f"{op.kind} {layout.labels[op.control]} {layout.labels[op.target]}: unequal dims"
            )
        if isinstance(op, Cnot) and dims[op.control] != 2:
            raise CircuitError("cnot acts on qubits only")
    else:
        if len(op.matrix) != dims[op.subsystem]:
            raise CircuitError(
                f"{op.kind} on {layout.labels[op.subsystem]}: matrix size {len(op.matrix)} != dim {dims[op.subsystem]}"
            )
        if isinstance(op, ControlledLocal):
            for s, d in op.condition:
                if not 0 <= d < dims[s]:
                    raise CircuitError(f"condition digit {d} out of range for {layout.labels[s]}")


@dataclass(frozen=True)
class Circuit:
    layout: SystemLayout
    steps: tuple[Step, ...] = ()

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        measured: dict[str, tuple[int, ...]] = {}
        for step in steps:
            if isinstance(step, Gate):
                _check_op(self.layout, step.op)
            elif isinstance(step, Measure):
                if step.tag in measured:
                    raise CircuitError(f"duplicate measurement tag {step.tag!r}")
                if not step.subsystems:
                    raise CircuitError("measurement needs at least one subsystem")
                try:
                    self.layout.indices(step.subsystems)
                except LayoutError as exc:
                    raise CircuitError(str(exc)) from None
                measured[step.tag] = step.subsystems
            elif isinstance(step, ConditionalGate):
                if step.tag not in measured:
                    raise CircuitError(f"conditional gate uses tag {step.tag!r} before its measurement")
                subs = measured[step.tag]
                if len(step.digits) != len(subs):
                    raise CircuitError(f"tag {step.tag!r} has {len(subs)} digits, got {len(step.digits)}")
                for s, d in zip(subs, step.digits):
                    if not 0 <= d < self.layout.dims[s]:
                        raise CircuitError(f"digit {d} out of range for {self.layout.labels[s]}")
                _check_op(self.layout, step.op)
            else:
                raise CircuitError(f"unknown step {step!r}")

    def then(self, *steps: Step) -> "Circuit":
        return Circuit(self.layout, self.steps + tuple(steps))

    def until_measurement(self, k: int = 0) -> "Circuit":
        """Prefix of the circuit that stops just before the ``k``-th measurement."""
        seen = 0
        for i, step in enumerate(self.steps):
            if isinstance(step, Measure):
                if seen == k:
                    return Circuit(self.layout, self.steps[:i])
                seen += 1
        return self

    def to_text(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class GateCount:
    total: int
    by_kind: dict[str, int] = field(default_factory=dict)


def gate_count(circuit: Circuit) -> GateCount:
    kinds = Counter(step.op.kind for step in circuit.steps if not isinstance(step, Measure))
    return GateCount(sum(kinds.values()), dict(sorted(kinds.items())))


def measurement_count(circuit: Circuit) -> int:
    return sum(isinstance(s, Measure) for s in circuit.steps)


# ---------------------------------------------------------------- text format

_TOKEN = re.compile(r"\([^)]*\)|\S+")
_LABEL = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_ROLES = {r.value: r for r in Role}


@dataclass
class _Tok:
    text: str
    col: int


def _complex(tok: str) -> complex:
    s = tok.strip().replace("i", "j")
    s = re.sub(r"(^|[+-])j", r"\g<1>1j", s)
    return complex(s)


def _format_complex(z: complex) -> str:
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.layout: SystemLayout | None = None
        self.steps: list[Step] = []
        self.tags: dict[str, tuple[int, ...]] = {}
        self.lineno = 0

    def fail(self, msg: str, tok: _Tok | None = None):
        raise ParseError(msg, self.lineno, tok.col if tok else 1)

    def run(self) -> Circuit:
        for self.lineno, raw in enumerate(self.text.splitlines(), start=1):
            line = raw.split("#", 1)[0]
            toks = [_Tok(m.group(0), m.start() + 1) for m in _TOKEN.finditer(line)]
            if not toks:
                continue
            head = toks[0]
            if head.text == "layout":
                self.parse_layout(toks)
            elif head.text == "measure":
                self.parse_measure(toks)
            elif head.text == "cgate":
                self.parse_cgate(toks)
            else:
                op = self.parse_gate(toks)
                self.steps.append(Gate(op))
        if self.layout is None:
            self.lineno = max(self.lineno, 1)
            self.fail("missing layout")
        try:
            return Circuit(self.layout, tuple(self.steps))
        except CircuitError as exc:
            self.fail(str(exc))

    def need_layout(self, tok: _Tok) -> SystemLayout:
        if self.layout is None:
            self.fail("missing layout", tok)
        return self.layout

    def label(self, tok: _Tok) -> int:
        layout = self.need_layout(tok)
        if tok.text not in layout.labels:
            self.fail(f"undefined label {tok.text!r}", tok)
        return layout.labels.index(tok.text)

    def parse_layout(self, toks: list[_Tok]) -> None:
        if self.layout is not None:
            self.fail("layout declared twice", toks[0])
        if len(toks) < 2:
            self.fail("layout needs at least one subsystem", toks[0])
        subs = []
        for tok in toks[1:]:
            parts = tok.text.split(":")
            if len(parts) not in (2, 3) or not _LABEL.match(parts[0]):
                self.fail(f"bad subsystem spec {tok.text!r}; expected label:dim[:role]", tok)
            try:
                dim = int(parts[1])
            except ValueError:
                self.fail(f"bad dimension in {tok.text!r}", tok)
            role = Role.REGISTER
            if len(parts) == 3:
                if parts[2] not in _ROLES:
                    self.fail(f"unknown role {parts[2]!r}; expected one of A, E, R, P", tok)
                role = _ROLES[parts[2]]
            subs.append(Subsystem(parts[0], dim, role))
        try:
            self.layout = SystemLayout(tuple(subs))
        except LayoutError as exc:
            self.fail(str(exc), toks[1])

    def matrix(self, tok: _Tok, dim: int) -> tuple[np.ndarray, str | None]:
        if "," not in tok.text:
            try:
                return named_matrix(tok.text, dim), tok.text
            except GateValidationError as exc:
                self.fail(str(exc), tok)
        try:
            entries = [_complex(e) for e in tok.text.split(",")]
        except ValueError:
            self.fail(f"bad inline matrix {tok.text!r}", tok)
        if len(entries) != dim * dim:
            self.fail(f"inline matrix has {len(entries)} entries, need {dim * dim}", tok)
        return np.array(entries).reshape(dim, dim), None

    def parse_gate(self, toks: list[_Tok]) -> GateOp:
        head = toks[0]
        kind = head.text
        if kind in ("gxor", "xor", "cnot"):
            if len(toks) != 3:
                self.fail(f"{kind} takes 2 arguments, got {len(toks) - 1}", head)
            if toks[1].text == toks[2].text:
                self.fail("control equals target", toks[2])
            c, t = self.label(toks[1]), self.label(toks[2])
            cls = {"gxor": Gxor, "xor": Xor, "cnot": Cnot}[kind]
            op = cls(c, t)
        elif kind == "local":
            if len(toks) != 3:
                self.fail(f"local takes 2 arguments, got {len(toks) - 1}", head)
            s = self.label(toks[1])
            m, name = self.matrix(toks[2], self.layout.dims[s])
            try:
                op = Local(s, m, name)
            except GateValidationError as exc:
                self.fail(str(exc), toks[2])
        elif kind == "clocal":
            if len(toks) != 4:
                self.fail(f"clocal takes 3 arguments, got {len(toks) - 1}", head)
            cond_tok = toks[1]
            if not (cond_tok.text.startswith("(") and cond_tok.text.endswith(")")):
                self.fail("clocal condition must look like (label=digit,...)", cond_tok)
            cond = []
            for item in filter(None, (p.strip() for p in cond_tok.text[1:-1].split(","))):
                if "=" not in item:
                    self.fail(f"bad condition {item!r}", cond_tok)
                lab, dig = (x.strip() for x in item.split("=", 1))
                s = self.label(_Tok(lab, cond_tok.col))
                if not dig.isdigit():
                    self.fail(f"bad digit {dig!r}", cond_tok)
                cond.append((s, int(dig)))
            if not cond:
                self.fail("clocal needs at least one condition", cond_tok)
            s = self.label(toks[2])
            m, name = self.matrix(toks[3], self.layout.dims[s])
            try:
                op = ControlledLocal(tuple(cond), s, m, name)
            except (GateValidationError, LayoutError) as exc:
                self.fail(str(exc), toks[2])
        else:
            self.fail(f"unknown directive {kind!r}", head)
        try:
            _check_op(self.layout, op)
        except CircuitError as exc:
            self.fail(str(exc), head)
        return op

    def parse_measure(self, toks: list[_Tok]) -> None:
        head = toks[0]
        if len(toks) < 4 or toks[-2].text != "as":
            self.fail("measure syntax: measure <label> ... as <tag>", head)
        tag = toks[-1]
        if not _LABEL.match(tag.text):
            self.fail(f"bad tag {tag.text!r}", tag)
        if tag.text in self.tags:
            self.fail(f"duplicate tag {tag.text!r}", tag)
        subs = tuple(self.label(t) for t in toks[1:-2])
        if len(set(subs)) != len(subs):
            self.fail("repeated subsystem in measurement", head)
        self.tags[tag.text] = subs
        self.steps.append(Measure(subs, tag.text))

    def parse_cgate(self, toks: list[_Tok]) -> None:
        head = toks[0]
        if len(toks) < 3 or "=" not in toks[1].text:
            self.fail("cgate syntax: cgate <tag>=<digits> <gate-line>", head)
        tag, digs = toks[1].text.split("=", 1)
        if tag not in self.tags:
            self.fail(f"undefined tag {tag!r}", toks[1])
        parts = digs.split(",") if "," in digs else list(digs)
        if not parts or not all(p.isdigit() for p in parts):
            self.fail(f"bad outcome digits {digs!r}", toks[1])
        digits = tuple(int(p) for p in parts)
        if len(digits) != len(self.tags[tag]):
            self.fail(f"tag {tag!r} has {len(self.tags[tag])} digits, got {len(digits)}", toks[1])
        op = self.parse_gate(toks[2:])
        self.steps.append(ConditionalGate(tag, digits, op))


def parse(text: str) -> Circuit:
    """Parse the text format; raises :class:`ParseError` naming the offending line."""
    return _Parser(text).run()


def _gate_text(op: GateOp, labels: Sequence[str]) -> str:
    if isinstance(op, Gxor):
        return f"{op.kind} {labels[op.control]} {labels[op.target]}"
    mat = op.name if op.name else ",".join(_format_complex(z) for row in op.matrix for z in row)
    if isinstance(op, Local):
        return f"local {labels[op.subsystem]} {mat}"
    cond = ",".join(f"{labels[s]}={d}" for s, d in op.condition)
    return f"clocal ({cond}) {labels[op.subsystem]} {mat}"


def to_text(circuit: Circuit) -> str:
    """Serialize ``circuit``; ``parse(to_text(c)) == c``."""
    labels = circuit.layout.labels
    lines = ["layout " + " ".join(f"{s.label}:{s.dim}:{s.role.value}" for s in circuit.layout.subsystems)]
    for step in circuit.steps:
        if isinstance(step, Gate):
            lines.append(_gate_text(step.op, labels))
        elif isinstance(step, Measure):
            lines.append("measure " + " ".join(labels[s] for s in step.subsystems) + f" as {step.tag}")
        else:
            sep = "," if any(d > 9 for d in step.digits) else ""
            digits = sep.join(str(d) for d in step.digits)
            lines.append(f"cgate {step.tag}={digits} {_gate_text(step.op, labels)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- execution


@dataclass(frozen=True, eq=False)
class TraceBranch:
    """A leaf of the outcome tree: the measurement path taken and the state reached."""

    path: tuple[tuple[str, OutcomeBranch], ...]
    probability: float
    state: PureState

    @property
    def outcome(self) -> tuple[int, ...]:
        return tuple(d for _, b in self.path for d in b.digits)

    def outcome_of(self, tag: str) -> tuple[int, ...]:
        for t, b in self.path:
            if t == tag:
                return b.digits
        raise KeyError(tag)


@dataclass(frozen=True, eq=False)
class ExecutionTrace:
    circuit: Circuit
    mode: str
    branches: tuple[TraceBranch, ...]

    @property
    def total_probability(self) -> float:
        return float(sum(b.probability for b in self.branches))


def _check_run(circuit: Circuit, initial: PureState, rng_seed, mode) -> np.random.Generator | None:
    if initial.layout != circuit.layout:
        raise LayoutError("initial state layout does not match the circuit layout")
    if mode not in ("exhaustive", "sample"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "sample":
        if rng_seed is None:
            raise ValueError("sampling mode requires a seed")
        return np.random.default_rng(rng_seed)
    return None


def iter_run(
    circuit: Circuit, initial: PureState, rng_seed: int | None = None, mode: str = "exhaustive"
) -> Iterator[TraceBranch]:
    """Leaves of the outcome tree, depth first, holding one path's states at a time.

    Leaves come out in the same order :func:`run` lists them.
    """
    rng = _check_run(circuit, initial, rng_seed, mode)
    steps = circuit.steps

    def walk(start: int, leaf: TraceBranch) -> Iterator[TraceBranch]:
        state = leaf.state
        for k in range(start, len(steps)):
            step = steps[k]
            if isinstance(step, Gate):
                state = apply_gate(state, step.op)
            elif isinstance(step, ConditionalGate):
                if leaf.outcome_of(step.tag) == step.digits:
                    state = apply_gate(state, step.op)
            else:
                if rng is None:
                    outs = iter_branches(state, step.subsystems)
                else:
                    outs = iter([sample_branch(state, step.subsystems, rng)])
                for o in outs:
                    child = TraceBranch(leaf.path + ((step.tag, o),), leaf.probability * o.probability, o.post_state)
                    yield from walk(k + 1, child)
                return
        yield TraceBranch(leaf.path, leaf.probability, state)

    yield from walk(0, TraceBranch((), 1.0, initial))


def run(circuit: Circuit, initial: PureState, rng_seed: int | None = None, mode: str = "exhaustive") -> ExecutionTrace:
    """Apply the circuit, branching on every measurement.

    ``exhaustive`` keeps every outcome with nonzero probability and ignores
    ``rng_seed``; ``sample`` follows one seeded outcome per measurement.
    """
    return ExecutionTrace(circuit, mode, tuple(iter_run(circuit, initial, rng_seed, mode)))
