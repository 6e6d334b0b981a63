"""Dense operator algebra on composite truncated Hilbert spaces.

Factor 0 is the leftmost tensor factor, i.e. the slowest-varying index of
the flattened basis. Qubit factors use the ordered basis (|g>, |e>), so that
``pauli("z") = diag(-1, +1)`` and sigma_z |e> = +|e>.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import InvalidDimensionError, SpaceMismatchError

HERMITIAN_RTOL = 1e-12
STATE_TOL = 1e-10


@dataclass(frozen=True)
class HilbertSpace:
    dims: tuple[int, ...]
    labels: tuple[str, ...]
    kinds: tuple[str, ...] | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(self.labels)
        kinds = tuple(self.kinds) if self.kinds is not None else ("mode",) * len(dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "kinds", kinds)
        if not dims:
            raise InvalidDimensionError("a Hilbert space needs at least one factor")
        if len(labels) != len(dims) or len(kinds) != len(dims):
            raise InvalidDimensionError("one label and one kind per factor required")
        for d, k in zip(dims, kinds):
            if d < 2:
                raise InvalidDimensionError(f"factor dimension must be >= 2, got {d}")
            if k not in ("mode", "qubit", "charge"):
                raise InvalidDimensionError(f"unknown factor kind {k!r}")
            if k == "qubit" and d != 2:
                raise InvalidDimensionError("qubit factors have dimension 2")

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, label: str | int) -> int:
        if isinstance(label, (int, np.integer)):
            if not 0 <= label < len(self.dims):
                raise IndexError(f"factor index {label} out of range")
            return int(label)
        return self.labels.index(label)

    @classmethod
    def single(cls, dim: int, label: str = "mode", kind: str = "mode") -> "HilbertSpace":
        return cls((dim,), (label,), (kind,))

    @classmethod
    def build(cls, *factors: tuple[str, int] | tuple[str, int, str]) -> "HilbertSpace":
        """``HilbertSpace.build(("qubit", 2, "qubit"), ("b", 10))``"""
        labels, dims, kinds = [], [], []
        for f in factors:
            labels.append(f[0])
            dims.append(f[1])
            kinds.append(f[2] if len(f) > 2 else "mode")
        return cls(tuple(dims), tuple(labels), tuple(kinds))


@dataclass(frozen=True, eq=False)
class Operator:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        n = self.space.dim
        if m.shape != (n, n):
            raise SpaceMismatchError(f"matrix shape {m.shape} does not match space dimension {n}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def _check(self, other: "Operator"):
        if other.space != self.space:
            raise SpaceMismatchError("operators live on different spaces")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix + other.matrix)
        return Operator(self.space, self.matrix + other * np.eye(self.space.dim))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            raise TypeError("use @ for operator products")
        return Operator(self.space, scalar * self.matrix)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.space, self.matrix / scalar)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix @ other.matrix)

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self) -> bool:
        m = self.matrix
        scale = np.max(np.abs(m))
        if scale == 0.0:
            return True
        return bool(np.max(np.abs(m - m.conj().T)) <= HERMITIAN_RTOL * scale)

    def assert_hermitian(self) -> "Operator":
        if not self.is_hermitian():
            raise ValueError("operator is not Hermitian")
        return self

    def allclose(self, other: "Operator", atol: float = 1e-12) -> bool:
        return other.space == self.space and np.allclose(self.matrix, other.matrix, atol=atol, rtol=0)


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.dim))


def annihilation(dim: int) -> Operator:
    """Truncated bosonic lowering operator with sqrt(n) at (n-1, n)."""
    if dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    return Operator(HilbertSpace.single(dim), np.diag(np.sqrt(np.arange(1, dim)), k=1))


def number(dim: int) -> Operator:
    return Operator(HilbertSpace.single(dim), np.diag(np.arange(dim, dtype=float)))


_PAULI = {
    "x": [[0, 1], [1, 0]],
    "y": [[0, 1j], [-1j, 0]],
    "z": [[-1, 0], [0, 1]],
    # raising |g> -> |e>
    "+": [[0, 0], [1, 0]],
    "-": [[0, 1], [0, 0]],
}
_PAULI["−"] = _PAULI["-"]


def pauli(which: str) -> Operator:
    """Pauli matrix in the (|g>, |e>) basis.

    sigma_y is chosen so that [sigma_x, sigma_y] = 2i sigma_z with the
    sign convention sigma_z = |e><e| - |g><g|.
    """
    try:
        m = _PAULI[which]
    except KeyError:
        raise ValueError(f"unknown Pauli operator {which!r}") from None
    return Operator(HilbertSpace.single(2, "qubit", "qubit"), np.array(m, dtype=complex))


def embed(op: Operator | np.ndarray, target_factor: int | str, space: HilbertSpace) -> Operator:
    """Lift a single-factor operator to ``space`` (identity elsewhere)."""
    k = space.index(target_factor)
    m = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    if m.shape != (space.dims[k], space.dims[k]):
        raise SpaceMismatchError(
            f"operator of dimension {m.shape[0]} cannot act on factor {k} of dimension {space.dims[k]}")
    parts = [np.eye(d) for d in space.dims]
    parts[k] = m
    return Operator(space, reduce(np.kron, parts))


def tensor(*ops: Operator) -> Operator:
    dims, labels, kinds = [], [], []
    for o in ops:
        dims += o.space.dims
        labels += o.space.labels
        kinds += o.space.kinds
    return Operator(HilbertSpace(tuple(dims), tuple(labels), tuple(kinds)),
                    reduce(np.kron, [o.matrix for o in ops]))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """State vector (1-D ``data``) or density matrix (2-D ``data``)."""

    space: HilbertSpace
    data: np.ndarray

    def __post_init__(self):
        d = np.array(self.data, dtype=complex)
        n = self.space.dim
        if d.ndim == 1:
            if d.shape != (n,):
                raise SpaceMismatchError(f"state vector length {d.shape[0]} != {n}")
            if abs(np.linalg.norm(d) - 1.0) > STATE_TOL:
                raise ValueError("state vector is not normalized")
        elif d.ndim == 2:
            if d.shape != (n, n):
                raise SpaceMismatchError(f"density matrix shape {d.shape} != ({n}, {n})")
            if np.max(np.abs(d - d.conj().T)) > STATE_TOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(d) - 1.0) > STATE_TOL:
                raise ValueError("density matrix trace differs from 1")
            if np.linalg.eigvalsh(0.5 * (d + d.conj().T)).min() < -STATE_TOL:
                raise ValueError("density matrix has negative eigenvalues")
        else:
            raise ValueError("state data must be 1-D or 2-D")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def is_pure_vector(self) -> bool:
        return self.data.ndim == 1

    def density_matrix(self) -> np.ndarray:
        if self.data.ndim == 1:
            return np.outer(self.data, self.data.conj())
        return self.data.copy()


def expectation(state: QuantumState, op: Operator) -> complex:
    """<psi|O|psi> or tr(rho O)."""
    if state.space != op.space:
        raise SpaceMismatchError("state and operator live on different spaces")
    if state.data.ndim == 1:
        return complex(np.vdot(state.data, op.matrix @ state.data))
    return complex(np.trace(state.data @ op.matrix))


# -- single-factor state vectors / density matrices -------------------------

def fock_vector(dim: int, n: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"Fock level {n} outside truncation {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def coherent_vector(dim: int, alpha: complex) -> np.ndarray:
    """Truncated, renormalized coherent state."""
    n = np.arange(dim)
    log_fact = np.array([np.sum(np.log(np.arange(1, k + 1))) for k in n])
    with np.errstate(divide="ignore"):
        amp = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * log_fact) * np.power(complex(alpha), n)
    return amp / np.linalg.norm(amp)


def thermal_matrix(dim: int, n_bar: float) -> np.ndarray:
    """Truncated, renormalized thermal state with mean occupation n_bar."""
    if n_bar == 0:
        p = np.zeros(dim)
        p[0] = 1.0
    else:
        ratio = n_bar / (1.0 + n_bar)
        p = ratio ** np.arange(dim) / (1.0 + n_bar)
        p = p / p.sum()
    return np.diag(p).astype(complex)


def product_state(space: HilbertSpace, parts: Sequence[np.ndarray]) -> QuantumState:
    """Tensor product of per-factor vectors (all 1-D) or matrices (any 2-D)."""
    if len(parts) != len(space.dims):
        raise SpaceMismatchError("one part per factor required")
    if all(np.ndim(p) == 1 for p in parts):
        return QuantumState(space, reduce(np.kron, parts))
    mats = [np.outer(p, np.conj(p)) if np.ndim(p) == 1 else np.asarray(p) for p in parts]
    return QuantumState(space, reduce(np.kron, mats))


def basis_state(space: HilbertSpace, levels: Sequence[int]) -> QuantumState:
    return product_state(space, [fock_vector(d, n) for d, n in zip(space.dims, levels)])


def quadratures(dim: int) -> tuple[Operator, Operator]:
    """q = (b + b^dag)/sqrt(2), p = i(b^dag - b)/sqrt(2)."""
    b = annihilation(dim)
    q = (b + b.dag()) / np.sqrt(2.0)
    p = 1j * (b.dag() - b) / np.sqrt(2.0)
    return q, p


def reduced_populations(rho: np.ndarray, space: HilbertSpace, factor: int | str) -> np.ndarray:
    """Diagonal of the reduced density matrix of one factor."""
    k = space.index(factor)
    diag = np.real(np.diagonal(rho)) if np.ndim(rho) == 2 else np.abs(rho) ** 2
    axes = tuple(i for i in range(len(space.dims)) if i != k)
    return diag.reshape(space.dims).sum(axis=axes)
