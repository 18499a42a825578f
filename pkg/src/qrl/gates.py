"""Gate primitives over the mixed-radix index space.

Permutation gates (GXOR, XOR, CNOT) and local unitaries are applied by the
strided kernels in :mod:`qrl.kernels`; no full-space matrix is ever built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import kernels
from .state import LayoutError, PureState, SystemLayout

UNITARY_TOL = 1e-10

Matrix = tuple[tuple[complex, ...], ...]


class GateValidationError(ValueError):
    """A gate matrix is not unitary or does not fit its subsystem."""


def _as_matrix(m) -> Matrix:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise GateValidationError(f"gate matrix must be square, got shape {arr.shape}")
    return tuple(tuple(complex(x) for x in row) for row in arr)


def check_unitary(m, tol: float = UNITARY_TOL) -> np.ndarray:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise GateValidationError(f"gate matrix must be square, got shape {arr.shape}")
    if np.max(np.abs(arr.conj().T @ arr - np.eye(arr.shape[0]))) > tol:
        raise GateValidationError("matrix is not unitary")
    return arr


@dataclass(frozen=True)
class Gxor:
    """Generalized XOR: ``|i>_c |j>_t -> |i>_c |i - j mod D>_t``."""

    control: int
    target: int
    kind = "gxor"

    def __post_init__(self):
        if self.control == self.target:
            raise LayoutError("control equals target")

    @property
    def subsystems(self) -> tuple[int, ...]:
        return (self.control, self.target)


@dataclass(frozen=True)
class Cnot(Gxor):
    """GXOR restricted to qubits; kept as its own kind so circuits print as written."""

    kind = "cnot"


@dataclass(frozen=True)
class Xor(Gxor):
    """Modular-addition XOR: ``|i>|j> -> |i>|i + j mod D>``."""

    kind = "xor"


@dataclass(frozen=True)
class Local:
    subsystem: int
    matrix: Matrix
    name: str | None = None
    kind = "local"

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_matrix(self.matrix))
        check_unitary(self.matrix)

    @property
    def subsystems(self) -> tuple[int, ...]:
        return (self.subsystem,)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.complex128)


@dataclass(frozen=True)
class ControlledLocal:
    """Local unitary applied only where every ``(subsystem, digit)`` condition holds."""

    condition: tuple[tuple[int, int], ...]
    subsystem: int
    matrix: Matrix
    name: str | None = None
    kind = "clocal"

    def __post_init__(self):
        cond = tuple((int(s), int(d)) for s, d in self.condition)
        object.__setattr__(self, "condition", cond)
        object.__setattr__(self, "matrix", _as_matrix(self.matrix))
        check_unitary(self.matrix)
        subs = [s for s, _ in cond]
        if len(set(subs)) != len(subs):
            raise LayoutError("condition subsystems must be distinct")
        if self.subsystem in subs:
            raise LayoutError("condition overlaps the target subsystem")

    @property
    def subsystems(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.condition) + (self.subsystem,)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.complex128)


GateOp = Union[Gxor, Cnot, Xor, Local, ControlledLocal]


def u_y() -> np.ndarray:
    """exp(+i pi/4 sigma_y): brings the real part of the coherence onto the diagonal."""
    return np.array([[1, 1], [-1, 1]], dtype=np.complex128) / math.sqrt(2)


def u_x() -> np.ndarray:
    """exp(+i pi/4 sigma_x): brings the imaginary part of the coherence onto the diagonal."""
    return np.array([[1, 1j], [1j, 1]], dtype=np.complex128) / math.sqrt(2)


def pauli_x() -> np.ndarray:
    return np.array([[0, 1], [1, 0]], dtype=np.complex128)


NAMED_MATRICES = {"ux": u_x, "uy": u_y, "x": pauli_x}


def named_matrix(name: str, dim: int) -> np.ndarray:
    if name == "id":
        return np.eye(dim, dtype=np.complex128)
    if name not in NAMED_MATRICES:
        raise GateValidationError(f"unknown matrix name {name!r}")
    m = NAMED_MATRICES[name]()
    if m.shape[0] != dim:
        raise GateValidationError(f"matrix {name!r} is {m.shape[0]}x{m.shape[0]}, subsystem dim is {dim}")
    return m


def _pair(state: PureState, control, target) -> tuple[int, int]:
    layout = state.layout
    c, t = layout.index(control), layout.index(target)
    if c == t:
        raise LayoutError("control equals target")
    if layout.dims[c] != layout.dims[t]:
        raise LayoutError(f"control dim {layout.dims[c]} != target dim {layout.dims[t]}")
    return c, t


def apply_gxor(state: PureState, control, target) -> PureState:
    c, t = _pair(state, control, target)
    out = kernels.controlled_shift(state.amplitudes, state.layout.dims, c, t, True)
    return PureState(state.layout, out)


def apply_xor(state: PureState, control, target) -> PureState:
    c, t = _pair(state, control, target)
    out = kernels.controlled_shift(state.amplitudes, state.layout.dims, c, t, False)
    return PureState(state.layout, out)


def apply_cnot(state: PureState, control, target) -> PureState:
    c, t = _pair(state, control, target)
    if state.layout.dims[c] != 2:
        raise LayoutError("cnot acts on qubits only; use gxor for qudits")
    return apply_gxor(state, c, t)


def apply_local(state: PureState, subsystem, matrix) -> PureState:
    return apply_controlled_local(state, (), subsystem, matrix)


def apply_controlled_local(state: PureState, condition: Sequence[tuple], subsystem, matrix) -> PureState:
    layout = state.layout
    t = layout.index(subsystem)
    cond = tuple((layout.index(s), int(d)) for s, d in condition)
    subs = [s for s, _ in cond]
    if len(set(subs)) != len(subs):
        raise LayoutError("condition subsystems must be distinct")
    if t in subs:
        raise LayoutError("condition overlaps the target subsystem")
    for s, d in cond:
        if not 0 <= d < layout.dims[s]:
            raise LayoutError(f"condition digit {d} out of range for {layout.labels[s]}")
    m = check_unitary(matrix)
    if m.shape[0] != layout.dims[t]:
        raise LayoutError(f"matrix size {m.shape[0]} != dim {layout.dims[t]} of {layout.labels[t]}")
    out = kernels.apply_matrix(state.amplitudes, layout.dims, t, np.ascontiguousarray(m), cond)
    return PureState(layout, out)


def apply_gate(state: PureState, op: GateOp) -> PureState:
    if isinstance(op, Cnot):
        return apply_cnot(state, op.control, op.target)
    if isinstance(op, Xor):
        return apply_xor(state, op.control, op.target)
    if isinstance(op, Gxor):
        return apply_gxor(state, op.control, op.target)
    if isinstance(op, Local):
        return apply_local(state, op.subsystem, op.array)
    if isinstance(op, ControlledLocal):
        return apply_controlled_local(state, op.condition, op.subsystem, op.array)
    raise TypeError(f"not a gate: {op!r}")


def gate_matrix(op: GateOp, layout: SystemLayout) -> np.ndarray:
    """Dense matrix of ``op`` on ``layout``, built column by column from basis states."""
    n = layout.total_dim
    cols = []
    for k in range(n):
        e = np.zeros(n, dtype=np.complex128)
        e[k] = 1.0
        cols.append(apply_gate(PureState(layout, e), op).amplitudes)
    return np.stack(cols, axis=1)
