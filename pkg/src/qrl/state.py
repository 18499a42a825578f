"""Mixed-radix pure states, reduced density operators and fidelity primitives.

Subsystem 0 is the most significant digit of the amplitude index, so a ket
written left to right as ``|a>|e>|r1>|r2>`` maps to digit tuple
``(a, e, r1, r2)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_TOTAL_DIM = 2**20
NORM_TOL = 1e-12


class LayoutError(ValueError):
    """Subsystem indices, labels or dimensions are inconsistent."""


class DegenerateInputError(ValueError):
    """An input vector or coefficient set cannot be normalized or is not generic."""


class NumericError(ArithmeticError):
    """A matrix violates positivity or hermiticity beyond tolerance."""


class Role(enum.Enum):
    AGENT = "A"
    ENVIRONMENT = "E"
    REGISTER = "R"
    PURIFIER = "P"


@dataclass(frozen=True)
class Subsystem:
    label: str
    dim: int
    role: Role = Role.REGISTER


@dataclass(frozen=True)
class SystemLayout:
    subsystems: tuple[Subsystem, ...]

    def __post_init__(self):
        subs = tuple(self.subsystems)
        object.__setattr__(self, "subsystems", subs)
        if not subs:
            raise LayoutError("layout needs at least one subsystem")
        labels = [s.label for s in subs]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate labels in layout: {labels}")
        for s in subs:
            if int(s.dim) < 2:
                raise LayoutError(f"subsystem {s.label!r} has dim {s.dim}; dim must be >= 2")
        if self.total_dim > MAX_TOTAL_DIM:
            raise LayoutError(f"total dimension {self.total_dim} exceeds {MAX_TOTAL_DIM}")

    @classmethod
    def of(cls, *items: tuple) -> "SystemLayout":
        """Build from ``(label, dim[, role])`` tuples."""
        subs = []
        for item in items:
            label, dim, *rest = item
            role = Role(rest[0]) if rest and isinstance(rest[0], str) else (rest[0] if rest else Role.REGISTER)
            subs.append(Subsystem(label, int(dim), role))
        return cls(tuple(subs))

    def __len__(self) -> int:
        return len(self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.subsystems)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def strides(self) -> tuple[int, ...]:
        out = [1] * len(self.subsystems)
        for i in range(len(out) - 2, -1, -1):
            out[i] = out[i + 1] * self.subsystems[i + 1].dim
        return tuple(out)

    def index(self, ref: int | str) -> int:
        """Resolve a label or an integer position to a subsystem index."""
        if isinstance(ref, (int, np.integer)) and not isinstance(ref, bool):
            if not 0 <= ref < len(self.subsystems):
                raise LayoutError(f"subsystem index {ref} out of range")
            return int(ref)
        try:
            return self.labels.index(ref)
        except ValueError:
            raise LayoutError(f"unknown subsystem {ref!r}") from None

    def indices(self, refs: Iterable[int | str]) -> tuple[int, ...]:
        out = tuple(self.index(r) for r in refs)
        if len(set(out)) != len(out):
            raise LayoutError(f"repeated subsystem in {list(refs)}")
        return out

    def with_role(self, role: Role) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.subsystems) if s.role is role)

    def digits(self, index: int) -> tuple[int, ...]:
        out = []
        for d in reversed(self.dims):
            index, r = divmod(index, d)
            out.append(r)
        return tuple(reversed(out))

    def flat_index(self, digits: Sequence[int]) -> int:
        if len(digits) != len(self.subsystems):
            raise LayoutError("digit tuple length does not match layout")
        k = 0
        for dgt, d in zip(digits, self.dims):
            if not 0 <= dgt < d:
                raise LayoutError(f"digit {dgt} out of range for dim {d}")
            k = k * d + int(dgt)
        return k


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    layout: SystemLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != self.layout.total_dim:
            raise LayoutError(f"{amps.shape[0]} amplitudes for total dimension {self.layout.total_dim}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def amplitude(self, digits: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.layout.flat_index(digits)])

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def terms(self, tol: float = 1e-14) -> dict[tuple[int, ...], complex]:
        """Nonzero basis components keyed by digit tuple."""
        nz = np.flatnonzero(np.abs(self.amplitudes) > tol)
        return {self.layout.digits(int(k)): complex(self.amplitudes[k]) for k in nz}

    def normalized(self) -> "PureState":
        n = math.sqrt(self.norm_sq)
        if n == 0.0:
            raise DegenerateInputError("cannot normalize the zero vector")
        return PureState(self.layout, self.amplitudes / n)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_sq - 1.0) <= tol


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Reduced or prescribed density matrix; validated on construction."""

    matrix: np.ndarray = field(repr=False)
    tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise LayoutError(f"density matrix must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > self.tol:
            raise NumericError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > self.tol or abs(np.trace(m).imag) > self.tol:
            raise NumericError(f"density matrix trace {np.trace(m)} != 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise NumericError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_bloch(cls, rho00: float, re01: float, im01: float) -> "DensityOperator":
        """Qubit operator from its population and coherence parameters."""
        r01 = complex(re01, im01)
        return cls(np.array([[rho00, r01], [r01.conjugate(), 1.0 - rho00]]))

    @classmethod
    def pure(cls, vector: Sequence[complex]) -> "DensityOperator":
        v = np.asarray(vector, dtype=np.complex128)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))


def _normalize_vector(vec, dim: int, what: str) -> np.ndarray:
    v = np.asarray(vec, dtype=np.complex128).reshape(-1)
    if v.shape[0] != dim:
        raise LayoutError(f"{what}: expected {dim} amplitudes, got {v.shape[0]}")
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateInputError(f"{what}: zero-norm factor")
    return v / n


def product_state(layout: SystemLayout, factors: Sequence[Sequence[complex]]) -> PureState:
    """Tensor product of per-subsystem vectors, each normalized first."""
    if len(factors) != len(layout):
        raise LayoutError(f"{len(factors)} factors for {len(layout)} subsystems")
    amps = np.ones(1, dtype=np.complex128)
    for sub, f in zip(layout.subsystems, factors):
        amps = np.kron(amps, _normalize_vector(f, sub.dim, sub.label))
    return PureState(layout, amps)


def grouped_state(layout: SystemLayout, groups: Sequence[tuple[Sequence[int | str], Sequence[complex]]]) -> PureState:
    """Product over groups of jointly specified subsystems.

    Each group is ``(subsystems, vector)`` where ``vector`` is the joint state
    in the row-major basis of the listed subsystems.  Subsystems that are not
    mentioned start in digit 0.
    """
    order: list[int] = []
    amps = np.ones(1, dtype=np.complex128)
    for refs, vec in groups:
        idx = layout.indices(refs)
        if set(idx) & set(order):
            raise LayoutError("subsystem appears in more than one group")
        dim = math.prod(layout.dims[i] for i in idx)
        amps = np.kron(amps, _normalize_vector(vec, dim, ",".join(layout.labels[i] for i in idx)))
        order.extend(idx)
    for i, d in enumerate(layout.dims):
        if i not in order:
            ground = np.zeros(d, dtype=np.complex128)
            ground[0] = 1.0
            amps = np.kron(amps, ground)
            order.append(i)
    psi = amps.reshape([layout.dims[i] for i in order])
    psi = np.transpose(psi, np.argsort(order))
    return PureState(layout, psi.reshape(-1))


def random_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Normalized vector of standard complex Gaussians."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_local_product(layout: SystemLayout, seed: int) -> PureState:
    """Independent random states on agents and environments, registers and purifiers at 0."""
    rng = np.random.default_rng(seed)
    factors = []
    for sub in layout.subsystems:
        if sub.role in (Role.REGISTER, Role.PURIFIER):
            v = np.zeros(sub.dim, dtype=np.complex128)
            v[0] = 1.0
        else:
            v = random_vector(rng, sub.dim)
        factors.append(v)
    return product_state(layout, factors)


def _check_keep(layout: SystemLayout, keep) -> tuple[int, ...]:
    if len(keep) == 0:
        raise LayoutError("partial trace needs at least one kept subsystem")
    return layout.indices(keep)


SPARSE_FRACTION = 0.125


def support(state: PureState) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices of nonzero amplitudes and their digits (one row per subsystem).

    Cached per state.  :func:`hint_support` lets a producer that knows where
    the nonzeros can live (e.g. a measurement collapse) skip the full scan.
    """
    cached = state.__dict__.get("_support")
    if cached is None:
        cand = state.__dict__.get("_candidates")
        nz = np.flatnonzero(state.amplitudes) if cand is None else cand[state.amplitudes[cand] != 0]
        cached = (nz, np.array(np.unravel_index(nz, state.layout.dims)).reshape(len(state.layout), -1))
        state.__dict__["_support"] = cached
    return cached


def hint_support(state: PureState, candidates: np.ndarray) -> PureState:
    """Record that every nonzero amplitude of ``state`` has a flat index in ``candidates``."""
    state.__dict__["_candidates"] = np.sort(np.asarray(candidates, dtype=np.intp))
    return state


def _joint_index(digits: np.ndarray, axes: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    out = np.zeros(digits.shape[1], dtype=np.intp)
    for a in axes:
        out = out * dims[a] + digits[a]
    return out


def partial_trace(state: PureState, keep: Sequence[int | str]) -> DensityOperator:
    """Reduced operator on ``keep``; basis is row-major over kept digits in layout order."""
    layout = state.layout
    kept = sorted(_check_keep(layout, keep))
    rest = [i for i in range(len(layout)) if i not in kept]
    dk = math.prod(layout.dims[i] for i in kept)
    nz, digits = support(state)
    if nz.size <= SPARSE_FRACTION * layout.total_dim:
        # post-measurement states are mostly zeros: work on the support only
        rows = _joint_index(digits, kept, layout.dims)
        _, cols = np.unique(_joint_index(digits, rest, layout.dims), return_inverse=True)
        psi = np.zeros((dk, int(cols.max(initial=-1)) + 1), dtype=np.complex128)
        psi[rows, cols.reshape(-1)] = state.amplitudes[nz]
    else:
        psi = np.transpose(state.tensor(), kept + rest).reshape(dk, -1)
    rho = psi @ psi.conj().T
    return DensityOperator(rho, tol=1e-10)


def swap_subsystems(state: PureState, i: int | str, j: int | str) -> PureState:
    layout = state.layout
    a, b = layout.index(i), layout.index(j)
    if layout.dims[a] != layout.dims[b]:
        raise LayoutError(f"cannot swap subsystems of dims {layout.dims[a]} and {layout.dims[b]}")
    psi = np.swapaxes(state.tensor(), a, b)
    return PureState(layout, psi.reshape(-1))


def overlap(a: PureState, b: PureState) -> complex:
    """Inner product <a|b>, conjugate-linear in ``a``."""
    if a.layout != b.layout:
        raise LayoutError("overlap of states on different layouts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    if w.min() < -1e-10:
        raise NumericError(f"matrix not positive semidefinite (eigenvalue {w.min():.3g})")
    w = np.where(w > 1e-14, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def density_fidelity(r: DensityOperator, s: DensityOperator) -> float:
    """Uhlmann fidelity tr sqrt(sqrt(r) s sqrt(r)), clamped to [0, 1].

    Not squared: for pure states it equals ``|<psi|phi>|``.
    """
    if r.dim != s.dim:
        raise LayoutError(f"fidelity between dims {r.dim} and {s.dim}")
    sr = _psd_sqrt(r.matrix)
    m = sr @ s.matrix @ sr
    m = (m + m.conj().T) / 2
    w = np.linalg.eigvalsh(m)
    if w.min() < -1e-10:
        raise NumericError("fidelity kernel not positive semidefinite")
    f = float(np.sum(np.sqrt(np.where(w > 1e-14, w, 0.0))))
    return min(1.0, max(0.0, f))
