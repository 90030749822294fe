"""Dense density-matrix algebra for small qubit registers.

Qubit 0 is the leftmost (most significant) tensor factor. Every function
returns a new :class:`DensityMatrix`; inputs are never mutated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

MAX_QUBITS = 11

HERMITIAN_ATOL = 1e-12
PSD_ATOL = 1e-10
UNITARY_ATOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma_z exp(i pi/4 sigma_y), which is the usual Hadamard
H = Z @ (np.cos(np.pi / 4) * I2 + 1j * np.sin(np.pi / 4) * Y)
CPHASE = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


class RegisterTooLarge(ValueError):
    pass


class PauliIndex(NamedTuple):
    """Two-bit label of sigma_{i,j}: (0,0)=1, (0,1)=X, (1,0)=Z, (1,1)=-iY."""

    i: int
    j: int


PAULI_INDICES = (PauliIndex(0, 0), PauliIndex(1, 0), PauliIndex(0, 1), PauliIndex(1, 1))


def pauli(which: Sequence[int]) -> np.ndarray:
    i, j = which
    # X^j Z^i reproduces the table, including sigma_{1,1} = X Z = -iY
    return np.linalg.matrix_power(X, j) @ np.linalg.matrix_power(Z, i)


def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def ket(bits: str | Sequence[int]) -> np.ndarray:
    bits = [int(b) for b in bits]
    vec = np.zeros(2 ** len(bits), dtype=complex)
    vec[int("".join(map(str, bits)), 2) if bits else 0] = 1.0
    return vec


def bell_ket(which: Sequence[int]) -> np.ndarray:
    """|Psi^{i,j}> = (sigma_{i,j}^dagger on qubit 1)(|00> + |11>)/sqrt(2)."""
    phi = (ket("00") + ket("11")) / np.sqrt(2)
    return kron(pauli(which).conj().T, I2) @ phi


def is_unitary(U: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=atol, rtol=0)


def _num_qubits_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed state of an n-qubit register.

    Under leakage the trace may drop below one; ``trace_weight`` reports
    it. The wrapped array is read-only.
    """

    mat: np.ndarray

    def __post_init__(self) -> None:
        mat = np.array(self.mat, dtype=complex, copy=True)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {mat.shape}")
        n = _num_qubits_of(mat.shape[0])
        if n < 1:
            raise ValueError("density matrix needs at least one qubit")
        if n > MAX_QUBITS:
            raise RegisterTooLarge(f"{n} qubits exceeds the register cap of {MAX_QUBITS}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    @classmethod
    def from_ket(cls, psi: np.ndarray) -> DensityMatrix:
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, bits: str | Sequence[int]) -> DensityMatrix:
        return cls.from_ket(ket(bits))

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> DensityMatrix:
        dim = 2**num_qubits
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def bell(cls, which: Sequence[int] = (0, 0)) -> DensityMatrix:
        return cls.from_ket(bell_ket(which))

    @property
    def num_qubits(self) -> int:
        return _num_qubits_of(self.mat.shape[0])

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def trace_weight(self) -> float:
        return float(np.trace(self.mat).real)

    def tensor(self, other: DensityMatrix) -> DensityMatrix:
        return DensityMatrix(np.kron(self.mat, other.mat))

    def scaled(self, factor: float) -> DensityMatrix:
        return DensityMatrix(self.mat * factor)

    def normalized(self) -> DensityMatrix:
        w = self.trace_weight
        if w <= 0:
            raise ValueError("cannot normalize a state with zero trace")
        return DensityMatrix(self.mat / w)

    def __add__(self, other: DensityMatrix) -> DensityMatrix:
        return DensityMatrix(self.mat + other.mat)

    def allclose(self, other: DensityMatrix, atol: float = 1e-10) -> bool:
        return self.mat.shape == other.mat.shape and np.allclose(
            self.mat, other.mat, atol=atol, rtol=0
        )

    def validate(self, atol: float = PSD_ATOL) -> None:
        """Raise ValueError unless Hermitian and positive semidefinite."""
        if not np.allclose(self.mat, self.mat.conj().T, atol=HERMITIAN_ATOL, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        evals = np.linalg.eigvalsh((self.mat + self.mat.conj().T) / 2)
        if evals.min() < -atol:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min():.3e}")
        if self.trace_weight > 1 + 1e-9:
            raise ValueError(f"trace {self.trace_weight} exceeds one")

    def is_valid(self, atol: float = PSD_ATOL) -> bool:
        try:
            self.validate(atol)
        except ValueError:
            return False
        return True


def _check_targets(targets: Sequence[int], n: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"target qubits must be distinct, got {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise IndexError(f"qubit {t} out of range for a {n}-qubit register")
    return targets


def _sandwich(mat: np.ndarray, n: int, K: np.ndarray, L: np.ndarray, targets: list[int]) -> np.ndarray:
    """Return K rho L^dagger with K, L acting on ``targets``."""
    k = len(targets)
    t = mat.reshape((2,) * (2 * n))
    Kt = K.reshape((2,) * (2 * k))
    Lt = L.conj().reshape((2,) * (2 * k))
    t = np.tensordot(Kt, t, axes=(list(range(k, 2 * k)), targets))
    t = np.moveaxis(t, list(range(k)), targets)
    cols = [n + q for q in targets]
    t = np.tensordot(t, Lt, axes=(cols, list(range(k, 2 * k))))
    t = np.moveaxis(t, list(range(2 * n - k, 2 * n)), cols)
    return t.reshape(2**n, 2**n)


def apply_operator(state: DensityMatrix, K: np.ndarray, targets: Sequence[int]) -> DensityMatrix:
    """K rho K^dagger for an arbitrary (possibly non-unitary) operator K."""
    n = state.num_qubits
    targets = _check_targets(targets, n)
    K = np.asarray(K, dtype=complex)
    if K.shape != (2 ** len(targets),) * 2:
        raise ValueError(f"operator shape {K.shape} does not match {len(targets)} targets")
    return DensityMatrix(_sandwich(state.mat, n, K, K, targets))


def apply_unitary(state: DensityMatrix, U: np.ndarray, targets: Sequence[int]) -> DensityMatrix:
    if not is_unitary(U):
        raise ValueError("operator is not unitary")
    return apply_operator(state, U, targets)


def apply_kraus(state: DensityMatrix, kraus: Sequence[np.ndarray], targets: Sequence[int]) -> DensityMatrix:
    n = state.num_qubits
    targets = _check_targets(targets, n)
    out = np.zeros_like(state.mat)
    for K in kraus:
        K = np.asarray(K, dtype=complex)
        out += _sandwich(state.mat, n, K, K, targets)
    return DensityMatrix(out)


def partial_trace(state: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on ``keep`` (returned in ascending qubit order).

    Keeping every qubit returns the state unchanged; an empty ``keep`` is
    an error because a zero-qubit DensityMatrix does not exist here (use
    ``trace_weight`` for the scalar).
    """
    n = state.num_qubits
    keep = sorted(_check_targets(keep, n))
    if not keep:
        raise ValueError("keep set must be nonempty")
    t = state.mat.reshape((2,) * (2 * n))
    m = n
    for q in reversed(range(n)):
        if q in keep:
            continue
        t = np.trace(t, axis1=q, axis2=q + m)
        m -= 1
    dim = 2 ** len(keep)
    return DensityMatrix(t.reshape(dim, dim))


def permute_qubits(state: DensityMatrix, order: Sequence[int]) -> DensityMatrix:
    """New state whose qubit k is old qubit ``order[k]``."""
    n = state.num_qubits
    order = _check_targets(order, n)
    if len(order) != n:
        raise ValueError("order must be a permutation of all qubits")
    t = state.mat.reshape((2,) * (2 * n))
    t = t.transpose(order + [n + q for q in order])
    return DensityMatrix(t.reshape(state.dim, state.dim))


def insert_qubits(state: DensityMatrix, extra: DensityMatrix, positions: Sequence[int]) -> DensityMatrix:
    """Tensor ``extra`` into the register so its qubits land at ``positions``."""
    n_total = state.num_qubits + extra.num_qubits
    positions = _check_targets(positions, n_total)
    if len(positions) != extra.num_qubits:
        raise ValueError("one position per inserted qubit is required")
    rest = [q for q in range(n_total) if q not in positions]
    combined = state.tensor(extra)
    # combined qubit k sits at final position (rest + positions)[k]
    final_of = rest + positions
    order = [final_of.index(q) for q in range(n_total)]
    return permute_qubits(combined, order)


def fidelity_with_bell(state: DensityMatrix, which: Sequence[int] = (0, 0)) -> float:
    """<Psi^{i,j}| rho |Psi^{i,j}>."""
    if state.num_qubits != 2:
        raise ValueError(f"expected a 2-qubit state, got {state.num_qubits} qubits")
    psi = bell_ket(which)
    return float(np.real(psi.conj() @ state.mat @ psi))


def bell_basis_matrix() -> np.ndarray:
    """Columns are |Psi^{0,0}>, |Psi^{1,0}>, |Psi^{0,1}>, |Psi^{1,1}>."""
    return np.column_stack([bell_ket(w) for w in PAULI_INDICES])


def projector(qubit: int, outcome: int, n: int) -> np.ndarray:
    P = np.zeros((2, 2), dtype=complex)
    P[outcome, outcome] = 1.0
    return kron(*[P if q == qubit else I2 for q in range(n)])


class Branch(NamedTuple):
    outcome: int
    probability: float
    state: DensityMatrix | None


def measure_qubit(state: DensityMatrix, qubit: int) -> list[Branch]:
    """Ideal Z-basis measurement; both branches, post-states renormalized.

    A branch with zero probability carries ``state=None``.
    """
    n = state.num_qubits
    (qubit,) = _check_targets([qubit], n)
    branches = []
    for outcome in (0, 1):
        P = np.zeros((2, 2), dtype=complex)
        P[outcome, outcome] = 1.0
        post = _sandwich(state.mat, n, P, P, [qubit])
        prob = float(np.trace(post).real)
        branches.append(Branch(outcome, prob, DensityMatrix(post / prob) if prob > 0 else None))
    return branches


def random_density_matrix(num_qubits: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    dim = 2**num_qubits
    rank = dim if rank is None else rank
    G = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = G @ G.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
