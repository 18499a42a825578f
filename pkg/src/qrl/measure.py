"""Projective computational-basis measurement on chosen subsystems."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .state import LayoutError, PureState, hint_support

PRUNE_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class OutcomeBranch:
    """One measurement result.

    Measured subsystems stay in the layout, collapsed to their outcome digit,
    so later gates can address the same indices.
    """

    outcomes: tuple[tuple[int, int], ...]
    probability: float
    post_state: PureState

    @property
    def digits(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.outcomes)


def _axes(state: PureState, subsystems) -> tuple[int, ...]:
    if len(subsystems) == 0:
        raise LayoutError("measurement needs at least one subsystem")
    return state.layout.indices(subsystems)


def outcome_distribution(state: PureState, subsystems) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """All digit tuples on ``subsystems`` (row-major, given order) with their probabilities."""
    axes = _axes(state, subsystems)
    probs = kernels.outcome_probabilities(state.amplitudes, state.layout.dims, axes)
    tuples = list(itertools.product(*(range(state.layout.dims[a]) for a in axes)))
    return tuples, probs


def _sublattice(layout, axes, digits) -> np.ndarray:
    """Flat indices whose digits on ``axes`` equal ``digits``."""
    st = layout.strides
    idx = np.array([sum(d * st[a] for a, d in zip(axes, digits))], dtype=np.intp)
    for i, dim in enumerate(layout.dims):
        if i not in axes:
            idx = (idx[:, None] + np.arange(dim) * st[i]).reshape(-1)
    return idx


def _branch(state: PureState, axes, digits, p) -> OutcomeBranch:
    amps = kernels.collapse(state.amplitudes, state.layout.dims, axes, digits)
    post = PureState(state.layout, amps / math.sqrt(p))
    if math.prod(state.layout.dims[a] for a in axes) >= 8:
        hint_support(post, _sublattice(state.layout, axes, digits))
    return OutcomeBranch(tuple(zip(axes, digits)), float(p), post)


def iter_branches(state: PureState, subsystems: Sequence) -> Iterator[OutcomeBranch]:
    """Lazy :func:`enumerate_branches`; post-states are built one at a time."""
    axes = _axes(state, subsystems)
    tuples, probs = outcome_distribution(state, axes)
    for t, p in zip(tuples, probs):
        if p > PRUNE_TOL:
            yield _branch(state, axes, t, p)


def enumerate_branches(state: PureState, subsystems: Sequence) -> list[OutcomeBranch]:
    """Every outcome with probability above the pruning floor, in row-major outcome order."""
    return list(iter_branches(state, subsystems))


def sample_outcomes(state: PureState, subsystems: Sequence, shots: int, rng: np.random.Generator) -> dict[tuple[int, ...], int]:
    """Histogram of ``shots`` independent readouts, drawn from the exact distribution."""
    tuples, probs = outcome_distribution(state, subsystems)
    p = np.where(probs > PRUNE_TOL, probs, 0.0)
    counts = rng.multinomial(shots, p / p.sum())
    return {tuples[i]: int(c) for i, c in enumerate(counts) if c}


def sample_branch(state: PureState, subsystems: Sequence, rng: np.random.Generator) -> OutcomeBranch:
    axes = _axes(state, subsystems)
    tuples, probs = outcome_distribution(state, axes)
    p = np.where(probs > PRUNE_TOL, probs, 0.0)
    i = int(rng.choice(len(tuples), p=p / p.sum()))
    return _branch(state, axes, tuples[i], probs[i])
