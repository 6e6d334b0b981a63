import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridmech import operators as ops
from hybridmech.errors import InvalidDimensionError, SpaceMismatchError


def test_space_dimension_is_product():
    space = ops.HilbertSpace.build(("qubit", 2, "qubit"), ("b", 5), ("c", 3))
    assert space.dim == 30
    assert space.index("b") == 1


@pytest.mark.parametrize("dims,kinds", [((1,), ("mode",)), ((3,), ("qubit",)), ((), ())])
def test_invalid_spaces(dims, kinds):
    with pytest.raises(InvalidDimensionError):
        ops.HilbertSpace(dims, tuple(f"f{i}" for i in range(len(dims))), kinds)


def test_annihilation_small():
    assert np.array_equal(ops.annihilation(2).matrix, np.array([[0, 1], [0, 0]]))
    assert ops.annihilation(3).matrix[1, 2] == pytest.approx(np.sqrt(2.0))


def test_number_diagonal_dim8():
    b = ops.annihilation(8)
    n = b.dag() @ b
    for k in range(8):
        v = ops.fock_vector(8, k)
        assert np.vdot(v, n.matrix @ v).real == pytest.approx(k, abs=1e-14)


@pytest.mark.parametrize("dim", range(2, 12))
def test_truncated_commutator(dim):
    b = ops.annihilation(dim)
    c = ops.commutator(b, b.dag()).matrix
    expected = np.eye(dim)
    expected[-1, -1] = 1 - dim
    assert np.allclose(c, expected, atol=1e-12)


def test_pauli_conventions():
    assert np.array_equal(ops.pauli("z").matrix, np.diag([-1, 1]))
    sx, sy, sz = (ops.pauli(k) for k in "xyz")
    assert (sx @ sx).allclose(ops.identity(sx.space))
    assert ops.commutator(sx, sy).allclose(2j * sz)
    e = np.array([0, 1])
    assert np.allclose(ops.pauli("+").matrix @ np.array([1, 0]), e)
    with pytest.raises(ValueError):
        ops.pauli("q")


def test_embed_rules():
    space = ops.HilbertSpace.build(("qubit", 2, "qubit"), ("b", 4))
    assert ops.embed(np.eye(2), 0, space).allclose(ops.identity(space))
    sz = ops.embed(ops.pauli("z"), 0, space)
    b = ops.embed(ops.annihilation(4), 1, space)
    assert (sz @ b).allclose(b @ sz)
    a = ops.annihilation(4)
    assert ops.embed(a.dag() @ a, 1, space).trace() == pytest.approx((a.dag() @ a).trace() * 2)
    with pytest.raises(SpaceMismatchError):
        ops.embed(ops.annihilation(3), 1, space)


def test_basis_ordering_leftmost_slowest():
    space = ops.HilbertSpace.build(("qubit", 2, "qubit"), ("b", 3))
    psi = ops.basis_state(space, (1, 2))
    assert np.argmax(np.abs(psi.data)) == 1 * 3 + 2


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(2, 4), st.integers(0, 10_000))
def test_embed_preserves_spectrum(d0, d1, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(d1, d1)) + 1j * rng.normal(size=(d1, d1))
    h = ops.Operator(ops.HilbertSpace.single(d1), m + m.conj().T)
    space = ops.HilbertSpace.build(("a", d0), ("b", d1))
    big = ops.embed(h, 1, space)
    assert big.is_hermitian()
    want = np.sort(np.repeat(np.linalg.eigvalsh(h.matrix), d0))
    assert np.allclose(np.linalg.eigvalsh(big.matrix), want, atol=1e-10)


def test_expectations():
    space = ops.HilbertSpace.single(10)
    n = ops.number(10)
    assert ops.expectation(ops.basis_state(space, (0,)), n) == pytest.approx(0)
    assert ops.expectation(ops.basis_state(space, (3,)), n) == pytest.approx(3)
    # thermal state at n = 0.5 built explicitly from the geometric series in a large space
    dim = 60
    p = np.array([(0.5 ** k) / (1.5 ** (k + 1)) for k in range(dim)])
    rho = ops.QuantumState(ops.HilbertSpace.single(dim), np.diag(p / p.sum()))
    assert ops.expectation(rho, ops.number(dim)).real == pytest.approx(0.5, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_hermitian_expectation_is_real(dim, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    state = ops.QuantumState(ops.HilbertSpace.single(dim), v / np.linalg.norm(v))
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = ops.Operator(state.space, m + m.conj().T)
    assert abs(ops.expectation(state, h).imag) <= 1e-10


def test_state_validation():
    space = ops.HilbertSpace.single(3)
    with pytest.raises(ValueError):
        ops.QuantumState(space, np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        ops.QuantumState(space, np.diag([0.5, 0.6, -0.1]))
    with pytest.raises(SpaceMismatchError):
        ops.QuantumState(space, np.array([1.0, 0.0]))


def test_operator_shape_and_space_checks():
    with pytest.raises(SpaceMismatchError):
        ops.Operator(ops.HilbertSpace.single(3), np.eye(2))
    with pytest.raises(SpaceMismatchError):
        ops.annihilation(3) @ ops.annihilation(4)


def test_coherent_and_thermal_helpers():
    v = ops.coherent_vector(30, 1.5)
    b = ops.annihilation(30).matrix
    assert np.vdot(v, b @ v) == pytest.approx(1.5, abs=1e-8)
    rho = ops.thermal_matrix(80, 2.0)
    assert np.trace(rho @ np.diag(np.arange(80))).real == pytest.approx(2.0, rel=1e-6)
