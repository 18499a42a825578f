import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrl import kernels
from qrl.gates import (
    Cnot,
    ControlledLocal,
    GateValidationError,
    Gxor,
    Local,
    Xor,
    apply_cnot,
    apply_controlled_local,
    apply_gate,
    apply_gxor,
    apply_local,
    apply_xor,
    gate_matrix,
    named_matrix,
    u_x,
    u_y,
)
from qrl.state import LayoutError, PureState, SystemLayout, random_vector


def shift_oracle(dims, c, t, sign):
    """Dense permutation |..i..j..> -> |..i..(sign*j + i) mod D..> built by digit loops."""
    n = math.prod(dims)
    m = np.zeros((n, n))
    for src in itertools.product(*(range(d) for d in dims)):
        dst = list(src)
        dst[t] = (src[c] + sign * src[t]) % dims[t]
        m[np.ravel_multi_index(dst, dims), np.ravel_multi_index(src, dims)] = 1
    return m


def local_oracle(dims, t, u):
    ops = [np.eye(d) for d in dims]
    ops[t] = u
    out = np.ones((1, 1))
    for o in ops:
        out = np.kron(out, o)
    return out


def test_gxor_on_basis_states(backend):
    lay = SystemLayout.of(("c", 5), ("t", 5))
    for i, j in itertools.product(range(5), repeat=2):
        s = PureState(lay, np.eye(25)[lay.flat_index((i, j))])
        assert apply_gxor(s, 0, 1).terms() == {(i, (i - j) % 5): 1}
        assert apply_xor(s, 0, 1).terms() == {(i, (i + j) % 5): 1}


@pytest.mark.parametrize("dims,c,t", [((2, 2), 0, 1), ((3, 2, 3), 2, 0), ((4, 4, 2), 1, 0), ((2, 3, 3, 2), 1, 2)])
def test_shift_gates_match_dense_oracle(backend, rng, dims, c, t):
    lay = SystemLayout.of(*[(f"q{i}", d) for i, d in enumerate(dims)])
    psi = random_vector(rng, lay.total_dim)
    s = PureState(lay, psi)
    assert np.allclose(apply_gxor(s, c, t).amplitudes, shift_oracle(dims, c, t, -1) @ psi, atol=1e-14)
    assert np.allclose(apply_xor(s, c, t).amplitudes, shift_oracle(dims, c, t, +1) @ psi, atol=1e-14)


@pytest.mark.parametrize("dims,t", [((2, 3), 1), ((3, 2, 2), 0), ((2, 2, 4), 2)])
def test_local_matches_kron_oracle(backend, rng, dims, t):
    lay = SystemLayout.of(*[(f"q{i}", d) for i, d in enumerate(dims)])
    q, _ = np.linalg.qr(rng.standard_normal((dims[t], dims[t])) + 1j * rng.standard_normal((dims[t], dims[t])))
    psi = random_vector(rng, lay.total_dim)
    got = apply_local(PureState(lay, psi), t, q).amplitudes
    assert np.allclose(got, local_oracle(dims, t, q) @ psi, atol=1e-13)


def test_controlled_local_acts_only_on_matching_pattern(backend, rng):
    lay = SystemLayout.of(("E", 2), ("s1", 2), ("s2", 2))
    psi = random_vector(rng, 8)
    got = apply_controlled_local(PureState(lay, psi), [("s1", 1), ("s2", 0)], "E", u_y()).amplitudes
    proj = np.zeros((4, 4))
    proj[2, 2] = 1  # s1 s2 = 10
    want = (np.kron(u_y(), proj) + np.kron(np.eye(2), np.eye(4) - proj)) @ psi
    assert np.allclose(got, want, atol=1e-14)


def test_backends_agree(rng):
    found = kernels.available_backends()
    if len(found) < 2:
        pytest.skip("compiled backend not built")
    dims = (3, 2, 4, 3)
    psi = random_vector(rng, math.prod(dims))
    u = named_matrix("uy", 2)
    py, cc = found["python"], found["compiled"]
    assert np.array_equal(py.controlled_shift(psi, dims, 3, 0, True), cc.controlled_shift(psi, dims, 3, 0, True))
    assert np.allclose(py.apply_matrix(psi, dims, 1, u, ((2, 3),)), cc.apply_matrix(psi, dims, 1, u, ((2, 3),)), atol=1e-15)
    assert np.allclose(py.outcome_probabilities(psi, dims, (2, 0)), cc.outcome_probabilities(psi, dims, (2, 0)), atol=1e-15)
    assert np.array_equal(py.collapse(psi, dims, (1, 3), (1, 2)), cc.collapse(psi, dims, (1, 3), (1, 2)))


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_gxor_is_hermitian_and_self_inverse(d):
    g = gate_matrix(Gxor(0, 1), SystemLayout.of(("c", d), ("t", d)))
    assert np.array_equal(g, g.conj().T)
    assert np.array_equal(g @ g, np.eye(d * d))


@pytest.mark.parametrize("d", [3, 4, 5])
def test_xor_is_unitary_but_not_hermitian(d):
    x = gate_matrix(Xor(0, 1), SystemLayout.of(("c", d), ("t", d)))
    assert np.array_equal(x.conj().T @ x, np.eye(d * d))
    assert not np.array_equal(x, x.conj().T)


def test_xor_equals_gxor_on_qubits():
    lay = SystemLayout.of(("c", 2), ("t", 2))
    assert np.array_equal(gate_matrix(Xor(0, 1), lay), gate_matrix(Gxor(0, 1), lay))
    assert np.array_equal(gate_matrix(Cnot(0, 1), lay), gate_matrix(Gxor(0, 1), lay))


def test_cnot_rejects_qudits():
    s = PureState(SystemLayout.of(("c", 3), ("t", 3)), np.eye(9)[0])
    with pytest.raises(LayoutError):
        apply_cnot(s, 0, 1)


def test_gate_errors():
    with pytest.raises(LayoutError, match="control equals target"):
        Gxor(1, 1)
    s = PureState(SystemLayout.of(("c", 2), ("t", 3)), np.eye(6)[0])
    with pytest.raises(LayoutError):
        apply_gxor(s, 0, 1)
    with pytest.raises(GateValidationError):
        Local(0, [[1, 1], [0, 1]])
    with pytest.raises(LayoutError):
        apply_local(s, 1, np.eye(2))
    with pytest.raises(LayoutError):
        ControlledLocal(((0, 1),), 0, np.eye(2))


def test_rotation_conventions():
    # printed matrices: u_y = [[1,1],[-1,1]]/sqrt2 and u_x = [[1,i],[i,1]]/sqrt2
    s = 1 / math.sqrt(2)
    assert np.allclose(u_y(), s * np.array([[1, 1], [-1, 1]]))
    assert np.allclose(u_x(), s * np.array([[1, 1j], [1j, 1]]))
    sy = np.array([[0, -1j], [1j, 0]])
    sx = np.array([[0, 1], [1, 0]])
    assert np.allclose(u_y(), math.cos(math.pi / 4) * np.eye(2) + 1j * math.sin(math.pi / 4) * sy)
    assert np.allclose(u_x(), math.cos(math.pi / 4) * np.eye(2) + 1j * math.sin(math.pi / 4) * sx)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0, 1),
    st.floats(-1, 1),
    st.floats(-1, 1),
)
def test_rotations_move_coherences_onto_the_diagonal(r00, a, b):
    # scale the coherence into the Bloch ball
    bound = math.sqrt(r00 * (1 - r00))
    norm = math.hypot(a, b)
    if norm > 1:
        a, b = a / norm, b / norm
    re, im = a * bound, b * bound
    rho = np.array([[r00, re + 1j * im], [re - 1j * im, 1 - r00]])
    assert (u_y() @ rho @ u_y().conj().T)[0, 0].real == pytest.approx(0.5 + re, abs=1e-12)
    assert (u_x() @ rho @ u_x().conj().T)[0, 0].real == pytest.approx(0.5 + im, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_gxor_twice_is_identity_on_random_states(d, seed):
    lay = SystemLayout.of(("a", d), ("b", d), ("c", 2))
    s = PureState(lay, random_vector(np.random.default_rng(seed), lay.total_dim))
    back = apply_gate(apply_gate(s, Gxor(1, 0)), Gxor(1, 0))
    assert np.allclose(back.amplitudes, s.amplitudes, atol=1e-15)


@st.composite
def kernel_cases(draw):
    dims = tuple(draw(st.lists(st.integers(2, 4), min_size=1, max_size=5)))
    n = len(dims)
    axes = tuple(draw(st.permutations(range(n)))[: draw(st.integers(1, n))])
    digits = tuple(draw(st.integers(0, dims[a] - 1)) for a in axes)
    return dims, axes, digits, draw(st.integers(0, 2**32 - 1))


@settings(max_examples=80, deadline=None)
@given(kernel_cases())
def test_compiled_and_python_kernels_agree(case):
    found = kernels.available_backends()
    if "compiled" not in found:
        pytest.skip("compiled backend not built")
    py, cc = found["python"], found["compiled"]
    dims, axes, digits, seed = case
    rng = np.random.default_rng(seed)
    psi = random_vector(rng, math.prod(dims))
    assert np.allclose(py.outcome_probabilities(psi, dims, axes), cc.outcome_probabilities(psi, dims, axes), atol=1e-15)
    assert np.array_equal(py.collapse(psi, dims, axes, digits), cc.collapse(psi, dims, axes, digits))
    t = axes[0]
    u = np.linalg.qr(rng.standard_normal((dims[t], dims[t])) + 0j)[0]
    cond = tuple(zip(axes[1:], digits[1:]))
    assert np.allclose(py.apply_matrix(psi, dims, t, u, cond), cc.apply_matrix(psi, dims, t, u, cond), atol=1e-14)
    same = [a for a in range(len(dims)) if a != t and dims[a] == dims[t]]
    for c in same:
        for sub in (True, False):
            assert np.array_equal(py.controlled_shift(psi, dims, c, t, sub), cc.controlled_shift(psi, dims, c, t, sub))
