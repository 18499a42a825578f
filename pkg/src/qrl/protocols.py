"""Scenario builders for the agent/environment/register learning circuits.

Every builder returns a :class:`Scenario` whose circuit is fixed; inputs
(agent and environment amplitudes) are supplied separately so one circuit can
be run on many random initial states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate, Measure
from .gates import Cnot, ControlledLocal, Gxor, u_x, u_y
from .state import (
    DegenerateInputError,
    DensityOperator,
    NumericError,
    PureState,
    Role,
    Subsystem,
    SystemLayout,
    grouped_state,
    random_vector,
)

PURIFY_EPS = 1e-12

A, E, R, P = Role.AGENT, Role.ENVIRONMENT, Role.REGISTER, Role.PURIFIER


@dataclass(frozen=True, eq=False)
class Scenario:
    """A protocol circuit plus the bookkeeping needed to feed and score it.

    ``input_groups`` lists the subsystem groups whose joint state is a free
    input (one vector per group); ``fixed_groups`` pins the rest, e.g. the
    purified environment.  ``fidelity_targets`` pairs agent subsystems with
    the environment subsystems they should end up matching.
    """

    name: str
    params: dict
    circuit: Circuit
    fidelity_targets: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    input_groups: tuple[tuple[int, ...], ...]
    fixed_groups: tuple[tuple[tuple[int, ...], np.ndarray], ...] = ()
    expected_gates: int = 0
    exchange_point: str | None = "pre"  # "pre": before measuring; "reward": after the feedback gates
    injective: bool = True
    rho: DensityOperator | None = field(default=None, repr=False)

    @property
    def layout(self) -> SystemLayout:
        return self.circuit.layout

    def group_dims(self) -> list[int]:
        return [math.prod(self.layout.dims[i] for i in g) for g in self.input_groups]

    def initial_state(self, inputs: Sequence[Sequence[complex]]) -> PureState:
        if len(inputs) != len(self.input_groups):
            raise ValueError(f"{self.name} takes {len(self.input_groups)} input vectors, got {len(inputs)}")
        groups = list(zip(self.input_groups, inputs)) + list(self.fixed_groups)
        return grouped_state(self.layout, groups)

    def random_inputs(self, seed: int) -> list[np.ndarray]:
        rng = np.random.default_rng(seed)
        return [random_vector(rng, d) for d in self.group_dims()]

    def random_initial_state(self, seed: int) -> PureState:
        return self.initial_state(self.random_inputs(seed))


def _layout(*items) -> SystemLayout:
    return SystemLayout(tuple(Subsystem(label, dim, role) for label, dim, role in items))


def _gates(layout: SystemLayout, pairs, cls=Cnot) -> list[Gate]:
    ix = layout.index
    return [Gate(cls(ix(c), ix(t))) for c, t in pairs]


def _measure(layout: SystemLayout, labels, tag: str) -> Measure:
    return Measure(layout.indices(labels), tag)


def build_single_qubit() -> Scenario:
    layout = _layout(("A", 2, A), ("E", 2, E), ("R1", 2, R), ("R2", 2, R))
    steps = _gates(layout, [("E", "R1"), ("E", "R2"), ("A", "R1"), ("R1", "R2"), ("R1", "A")])
    steps.append(_measure(layout, ["R1", "R2"], "m"))
    return Scenario(
        name="single",
        params={},
        circuit=Circuit(layout, tuple(steps)),
        fidelity_targets=(((0,), (1,)),),
        input_groups=((0,), (1,)),
        expected_gates=5,
    )


def _banked_layout(n: int, dim: int) -> SystemLayout:
    return _layout(
        *[(f"A{k}", dim, A) for k in range(1, n + 1)],
        *[(f"E{k}", dim, E) for k in range(1, n + 1)],
        *[(f"R{k}", dim, R) for k in range(1, 2 * n + 1)],
    )


def _banked_prefix(n: int) -> list[tuple[str, str]]:
    ks = range(1, n + 1)
    return (
        [(f"E{k}", f"R{k}") for k in ks]
        + [(f"E{k}", f"R{n + k}") for k in ks]
        + [(f"A{k}", f"R{k}") for k in ks]
        + [(f"R{k}", f"R{n + k}") for k in ks]
    )


def _banked_scenario(name, params, layout, steps, n, expected) -> Scenario:
    agents = tuple(range(n))
    envs = tuple(range(n, 2 * n))
    return Scenario(
        name=name,
        params=params,
        circuit=Circuit(layout, tuple(steps)),
        fidelity_targets=((agents, envs),),
        input_groups=(agents, envs),
        expected_gates=expected,
    )


def build_multiqubit(n: int) -> Scenario:
    """n agent qubits, n environment qubits, 2n registers; five CNOTs per pair."""
    if n < 1:
        raise ValueError("n must be >= 1")
    layout = _banked_layout(n, 2)
    pairs = _banked_prefix(n) + [(f"R{k}", f"A{k}") for k in range(1, n + 1)]
    steps = _gates(layout, pairs)
    steps.append(_measure(layout, [f"R{k}" for k in range(1, 2 * n + 1)], "m"))
    return _banked_scenario("multiqubit", {"n": n}, layout, steps, n, 5 * n)


def build_qudit(dim: int) -> Scenario:
    """Single qudit agent and environment; nine GXOR gates for any dimension."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    layout = _layout(("A", dim, A), ("E", dim, E), ("R1", dim, R), ("R2", dim, R))
    pairs = [("E", "R1"), ("E", "R2"), ("A", "R1"), ("R1", "R2")]
    pairs += [("R1", "A"), ("R2", "A"), ("R1", "A"), ("R2", "A"), ("R1", "A")]
    steps = _gates(layout, pairs, Gxor)
    steps.append(_measure(layout, ["R1", "R2"], "m"))
    return Scenario(
        name="qudit",
        params={"dim": dim},
        circuit=Circuit(layout, tuple(steps)),
        fidelity_targets=(((0,), (1,)),),
        input_groups=((0,), (1,)),
        expected_gates=9,
    )


def build_multiqudit(n: int, dim: int) -> Scenario:
    """n qudit pairs; each agent is updated from its two registers in five alternating rounds."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    layout = _banked_layout(n, dim)
    pairs = _banked_prefix(n)
    ks = range(1, n + 1)
    for rnd in range(5):
        bank = 0 if rnd % 2 == 0 else n
        pairs += [(f"R{bank + k}", f"A{k}") for k in ks]
    steps = _gates(layout, pairs, Gxor)
    steps.append(_measure(layout, [f"R{k}" for k in range(1, 2 * n + 1)], "m"))
    return _banked_scenario("multiqudit", {"n": n, "dim": dim}, layout, steps, n, 9 * n)


def build_larger_env_feedback() -> Scenario:
    """Two-qubit environment, one agent: measure, apply the reward pair, measure again."""
    layout = _layout(("A", 2, A), ("E1", 2, E), ("E2", 2, E), ("R1", 2, R), ("R2", 2, R))
    steps = _gates(layout, [("E1", "R1"), ("E2", "R2"), ("A", "R1")])
    steps.append(_measure(layout, ["R1", "R2"], "m1"))
    steps += _gates(layout, [("R1", "A"), ("A", "R1")])
    steps.append(_measure(layout, ["R1", "R2"], "m2"))
    return Scenario(
        name="largerenv-feedback",
        params={},
        circuit=Circuit(layout, tuple(steps)),
        fidelity_targets=(((0,), (1,)),),
        input_groups=((0,), (1, 2)),
        expected_gates=5,
        exchange_point="reward",
        injective=False,
    )


def build_larger_env_register_rich() -> Scenario:
    """Two-qubit environment with four registers; a single final measurement suffices."""
    layout = _layout(
        ("A", 2, A), ("E1", 2, E), ("E2", 2, E), ("R1", 2, R), ("R2", 2, R), ("R3", 2, R), ("R4", 2, R)
    )
    steps = _gates(layout, [("E1", "R1"), ("E2", "R2"), ("E1", "R3"), ("E2", "R4"), ("A", "R1"), ("R1", "A")])
    steps.append(_measure(layout, ["R1", "R2", "R3", "R4"], "m"))
    return Scenario(
        name="largerenv-registers",
        params={},
        circuit=Circuit(layout, tuple(steps)),
        fidelity_targets=(((0,), (1,)),),
        input_groups=((0,), (1, 2)),
        expected_gates=6,
    )


# ---------------------------------------------------------------- mixed environments


@dataclass(frozen=True, eq=False)
class Purification:
    """Pure state on environment (x) purifier whose environment marginal is ``rho``.

    ``vector`` is indexed row-major as (environment digit, purifier digit);
    purifier basis ``|e1>, |e2>`` is digits 0, 1.
    """

    rho: DensityOperator
    vector: np.ndarray

    def reduced(self) -> np.ndarray:
        m = self.vector.reshape(2, 2)
        return m @ m.conj().T


def purify(rho: DensityOperator) -> Purification:
    if rho.dim != 2:
        raise ValueError("purify expects a qubit density operator")
    m = rho.matrix
    r00, r11 = float(m[0, 0].real), float(m[1, 1].real)
    r10 = complex(m[1, 0])
    v = np.zeros((2, 2), dtype=np.complex128)  # [env digit, purifier digit]
    if r00 > PURIFY_EPS:
        # |e1> carries sqrt(r00)|0> + r10/sqrt(r00)|1>; |e2> carries the remainder on |1>
        v[0, 0] = math.sqrt(r00)
        v[1, 0] = r10 / math.sqrt(r00)
        v[1, 1] = math.sqrt(max(r11 - abs(r10) ** 2 / r00, 0.0))
    else:
        # same construction with |0> and |1> exchanged
        r01 = complex(m[0, 1])
        v[1, 0] = math.sqrt(r11)
        v[0, 0] = r01 / math.sqrt(r11)
        v[0, 1] = math.sqrt(max(r00 - abs(r01) ** 2 / r11, 0.0))
    return Purification(rho, v.reshape(-1))


SELECTOR_PATTERNS = {"population": (1, 0, 0), "real": (0, 1, 0), "imag": (0, 0, 1)}


def selector_state() -> np.ndarray:
    """Equal superposition of the three one-hot patterns on three qubits."""
    w = np.zeros(8, dtype=np.complex128)
    for bits in SELECTOR_PATTERNS.values():
        w[int("".join(map(str, bits)), 2)] = 1 / math.sqrt(3)
    return w


def mixed_state_circuit() -> Circuit:
    layout = _layout(
        ("A", 2, A), ("E", 2, E), ("e", 2, P),
        ("R1", 2, R), ("R2", 2, R), ("R3", 2, R), ("R4", 2, R), ("R5", 2, R),
    )
    ix = layout.index
    sel = [ix("R3"), ix("R4"), ix("R5")]
    rotations = [(SELECTOR_PATTERNS["population"], np.eye(2), "id"),
                 (SELECTOR_PATTERNS["real"], u_y(), "uy"),
                 (SELECTOR_PATTERNS["imag"], u_x(), "ux")]
    steps: list = [
        Gate(ControlledLocal(tuple(zip(sel, bits)), ix("E"), m, name)) for bits, m, name in rotations
    ]
    steps += _gates(layout, [("E", "R1"), ("E", "R2"), ("A", "R1"), ("R1", "R2"), ("R1", "A")])
    steps.append(_measure(layout, ["R1", "R2", "R3", "R4", "R5"], "m"))
    return Circuit(layout, tuple(steps))


def build_mixed_state(rho: DensityOperator) -> Scenario:
    """Mixed qubit environment, purified, with a one-hot selector choosing the readout basis."""
    pur = purify(rho)
    circuit = mixed_state_circuit()
    ix = circuit.layout.index
    m = rho.matrix
    return Scenario(
        name="mixed",
        params={"rho00": float(m[0, 0].real), "re01": float(m[0, 1].real), "im01": float(m[0, 1].imag)},
        circuit=circuit,
        fidelity_targets=(((ix("A"),), (ix("E"),)),),
        input_groups=((ix("A"),),),
        fixed_groups=(((ix("E"), ix("e")), pur.vector), ((ix("R3"), ix("R4"), ix("R5")), selector_state())),
        expected_gates=8,
        exchange_point=None,
        injective=False,
        rho=rho,
    )


def random_density(rng: np.random.Generator, dim: int = 2) -> DensityOperator:
    """Random full-rank density operator G G^dagger / tr, G complex Gaussian."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return DensityOperator((m + m.conj().T) / 2)


def parse_rho(text: str) -> DensityOperator:
    """Parse ``"rho00,re01,im01"``."""
    try:
        r00, re01, im01 = (float(x) for x in text.split(","))
    except ValueError:
        raise ValueError(f"rho must be 'rho00,re01,im01', got {text!r}") from None
    try:
        return DensityOperator.from_bloch(r00, re01, im01)
    except NumericError as exc:
        raise ValueError(f"invalid rho {text!r}: {exc}") from None


SCENARIOS = (
    "single", "multiqubit", "qudit", "multiqudit", "largerenv-feedback", "largerenv-registers", "mixed",
)


def build(name: str, *, n: int = 2, dim: int = 3, rho: DensityOperator | None = None) -> Scenario:
    """Build a scenario by its command-line name."""
    if name == "single":
        return build_single_qubit()
    if name == "multiqubit":
        return build_multiqubit(n)
    if name == "qudit":
        return build_qudit(dim)
    if name == "multiqudit":
        return build_multiqudit(n, dim)
    if name == "largerenv-feedback":
        return build_larger_env_feedback()
    if name == "largerenv-registers":
        return build_larger_env_register_rich()
    if name == "mixed":
        if rho is None:
            raise DegenerateInputError("mixed scenario needs a density operator")
        return build_mixed_state(rho)
    raise ValueError(f"unknown scenario {name!r}")
