"""Closed-form protocol states, used as oracles against the simulator.

Tables marked *literal* are transcribed term by term (digit patterns as
written out by hand); the others are evaluated from the general modular
formulas.  Every function returns ``{digit tuple: amplitude}`` over the full
layout of the matching scenario, unnormalized only where noted.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .state import PureState


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=np.complex128).reshape(-1)


# literal: (agent digit, env digit) -> (A, E, R1, R2) after the five CNOTs
SINGLE_QUBIT_TABLE = {
    (0, 0): (0, 0, 0, 0),
    (0, 1): (1, 1, 1, 0),
    (1, 0): (0, 0, 1, 1),
    (1, 1): (1, 1, 0, 1),
}


def single_qubit_final(alpha_a, alpha_e) -> dict:
    a, e = _vec(alpha_a), _vec(alpha_e)
    return {digits: a[i] * e[j] for (i, j), digits in SINGLE_QUBIT_TABLE.items()}


# literal: ((a1,a2), (e1,e2)) -> (A1, A2, E1, E2, R1, R2, R3, R4) for two qubit pairs
MULTIQUBIT_TABLE = {
    ("00", "00"): "00" "00" "0000",
    ("00", "01"): "01" "01" "0100",
    ("00", "10"): "10" "10" "1000",
    ("00", "11"): "11" "11" "1100",
    ("01", "00"): "00" "00" "0101",
    ("01", "01"): "01" "01" "0001",
    ("01", "10"): "10" "10" "1101",
    ("01", "11"): "11" "11" "1001",
    ("10", "00"): "00" "00" "1010",
    ("10", "01"): "01" "01" "1110",
    ("10", "10"): "10" "10" "0010",
    ("10", "11"): "11" "11" "0110",
    ("11", "00"): "00" "00" "1111",
    ("11", "01"): "01" "01" "1011",
    ("11", "10"): "10" "10" "0111",
    ("11", "11"): "11" "11" "0011",
}


def multiqubit_final(alpha_a, alpha_e) -> dict:
    """``alpha_a``, ``alpha_e`` are joint two-qubit vectors indexed by ``int('ab', 2)``."""
    a, e = _vec(alpha_a), _vec(alpha_e)
    return {
        tuple(int(c) for c in out): a[int(ka, 2)] * e[int(ke, 2)]
        for (ka, ke), out in MULTIQUBIT_TABLE.items()
    }


def qudit_final(alpha_a, alpha_e) -> dict:
    """sum_{n,m} a_n e_m |m>_A |m>_E |n - m>_1 |n - 2m>_2 (mod D)."""
    a, e = _vec(alpha_a), _vec(alpha_e)
    d = len(a)
    out: dict = {}
    for n in range(d):
        for m in range(d):
            key = (m, m, (n - m) % d, (n - 2 * m) % d)
            out[key] = out.get(key, 0) + a[n] * e[m]
    return out


# literal: worked D = 4 example, (n, m) -> (A, E, R1, R2)
QUDIT_D4_TABLE = {
    (0, 0): (0, 0, 0, 0), (0, 1): (1, 1, 3, 2), (0, 2): (2, 2, 2, 0), (0, 3): (3, 3, 1, 2),
    (1, 0): (0, 0, 1, 1), (1, 1): (1, 1, 0, 3), (1, 2): (2, 2, 3, 1), (1, 3): (3, 3, 2, 3),
    (2, 0): (0, 0, 2, 2), (2, 1): (1, 1, 1, 0), (2, 2): (2, 2, 0, 2), (2, 3): (3, 3, 3, 0),
    (3, 0): (0, 0, 3, 3), (3, 1): (1, 1, 2, 1), (3, 2): (2, 2, 1, 3), (3, 3): (3, 3, 0, 1),
}


def qudit_d4_final(alpha_a, alpha_e) -> dict:
    a, e = _vec(alpha_a), _vec(alpha_e)
    return {digits: a[n] * e[m] for (n, m), digits in QUDIT_D4_TABLE.items()}


def multiqudit_final(alpha_a, alpha_e, n_pairs: int, dim: int) -> dict:
    """Each pair k ends as |p_k>_A |p_k>_E with registers (n_k - p_k, n_k - 2 p_k).

    ``alpha_a``/``alpha_e`` are joint vectors over the n agent (environment) qudits.
    """
    a, e = _vec(alpha_a), _vec(alpha_e)
    out: dict = {}
    for ia in range(dim**n_pairs):
        ns = _digits(ia, n_pairs, dim)
        for ie in range(dim**n_pairs):
            ps = _digits(ie, n_pairs, dim)
            r1 = tuple((x - p) % dim for x, p in zip(ns, ps))
            r2 = tuple((x - 2 * p) % dim for x, p in zip(ns, ps))
            key = ps + ps + r1 + r2
            out[key] = out.get(key, 0) + a[ia] * e[ie]
    return out


def _digits(k: int, n: int, d: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        k, r = divmod(k, d)
        out.append(r)
    return tuple(reversed(out))


# literal: unnormalized branches of the two-qubit environment protocol after the
# first register readout.  Entries: (agent init digit, env digits) -> (A, E1, E2, R1, R2)
FEEDBACK_MEASURED = {
    (0, 0): [((0, "00"), (0, 0, 0, 0, 0)), ((1, "10"), (1, 1, 0, 0, 0))],
    (0, 1): [((0, "01"), (0, 0, 1, 0, 1)), ((1, "11"), (1, 1, 1, 0, 1))],
    (1, 0): [((1, "00"), (1, 0, 0, 1, 0)), ((0, "10"), (0, 1, 0, 1, 0))],
    (1, 1): [((0, "11"), (0, 1, 1, 1, 1)), ((1, "01"), (1, 0, 1, 1, 1))],
}

# literal: the same branches after the reward pair (R1 -> A, then A -> R1)
FEEDBACK_REWARDED = {
    (0, 0): [((0, "00"), (0, 0, 0, 0, 0)), ((1, "10"), (1, 1, 0, 1, 0))],
    (0, 1): [((0, "01"), (0, 0, 1, 0, 1)), ((1, "11"), (1, 1, 1, 1, 1))],
    (1, 0): [((1, "00"), (0, 0, 0, 1, 0)), ((0, "10"), (1, 1, 0, 0, 0))],
    (1, 1): [((1, "01"), (0, 0, 1, 1, 1)), ((0, "11"), (1, 1, 1, 0, 1))],
}


def feedback_branches(alpha_a, alpha_e, rewarded: bool = False) -> dict:
    """Register outcome -> unnormalized branch terms.  ``alpha_e`` is indexed by int('e1e2', 2)."""
    a, e = _vec(alpha_a), _vec(alpha_e)
    table = FEEDBACK_REWARDED if rewarded else FEEDBACK_MEASURED
    return {
        outcome: {digits: a[ia] * e[int(ke, 2)] for (ia, ke), digits in terms}
        for outcome, terms in table.items()
    }


# literal: (agent digit, e1, e2) -> (A, E1, E2, R1, R2, R3, R4) for the four-register variant
REGISTER_RICH_TABLE = {
    (0, 0, 0): (0, 0, 0, 0, 0, 0, 0),
    (0, 1, 0): (1, 1, 0, 1, 0, 1, 0),
    (0, 0, 1): (0, 0, 1, 0, 1, 0, 1),
    (0, 1, 1): (1, 1, 1, 1, 1, 1, 1),
    (1, 0, 0): (0, 0, 0, 1, 0, 0, 0),
    (1, 1, 0): (1, 1, 0, 0, 0, 1, 0),
    (1, 0, 1): (0, 0, 1, 1, 1, 0, 1),
    (1, 1, 1): (1, 1, 1, 0, 1, 1, 1),
}


def register_rich_final(alpha_a, alpha_e) -> dict:
    a, e = _vec(alpha_a), _vec(alpha_e)
    return {digits: a[ia] * e[2 * e1 + e2] for (ia, e1, e2), digits in REGISTER_RICH_TABLE.items()}


def mixed_final_magnitudes(alpha_a, rho00: float, re01: float, im01: float) -> dict:
    """Twelve terms of the selector protocol with the purifier traced out.

    Keys are (A, E, R1, R2, R3, R4, R5); values are the magnitudes of the
    coefficients multiplying the (normalized) purifier ket of each term.
    """
    a = np.abs(_vec(alpha_a))
    weights = {
        (1, 0, 0): (rho00, 1.0 - rho00),
        (0, 1, 0): (0.5 + re01, 0.5 - re01),
        (0, 0, 1): (0.5 + im01, 0.5 - im01),
    }
    out = {}
    for sel, (w0, w1) in weights.items():
        for ia in (0, 1):
            for env, w in ((0, w0), (1, w1)):
                key = (env, env, ia ^ env, ia) + sel
                out[key] = a[ia] * math.sqrt(max(w, 0.0)) / math.sqrt(3)
    return out


def as_vector(terms: dict, dims: Sequence[int]) -> np.ndarray:
    vec = np.zeros(math.prod(dims), dtype=np.complex128)
    for digits, amp in terms.items():
        k = 0
        for dgt, d in zip(digits, dims):
            k = k * d + dgt
        vec[k] += amp
    return vec


def max_term_error(state: PureState, terms: dict, scale: float = 1.0) -> float:
    """Largest amplitude mismatch between ``state`` and ``scale * terms`` over the whole basis."""
    expected = scale * as_vector(terms, state.layout.dims)
    return float(np.max(np.abs(state.amplitudes - expected)))


def max_marginal_error(state: PureState, traced: int, magnitudes: dict) -> float:
    """Like :func:`max_term_error` but compares fiber norms after removing one subsystem."""
    psi = np.moveaxis(state.tensor(), traced, -1)
    norms = np.linalg.norm(psi, axis=-1)
    dims = [d for i, d in enumerate(state.layout.dims) if i != traced]
    expected = np.real(as_vector(magnitudes, dims)).reshape(dims)
    return float(np.max(np.abs(norms - expected)))
