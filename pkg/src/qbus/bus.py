"""Parallel entanglement swapping along a bus of l qubits.

Bus positions are numbered 1..l as in the protocol description; position
k lives at register index k - 1.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import qmat
from .noise import ErrorModel, NoiseModel, noisy_cphase, noisy_measure, twirl
from .qmat import (
    H,
    PAULI_INDICES,
    DensityMatrix,
    PauliIndex,
    apply_unitary,
    bell_basis_matrix,
    fidelity_with_bell,
    partial_trace,
    pauli,
)


class Op(NamedTuple):
    kind: str  # "H", "CPHASE", "MEASURE" or "PAULI"
    positions: tuple[int, ...]


Layer = tuple[Op, ...]


def _check_length(l: int) -> None:
    if l < 2 or l % 2:
        raise ValueError(f"bus length must be an even integer >= 2, got {l}")


def build_swap_circuit(l: int) -> list[Layer]:
    """The six parallel layers of the swapping protocol.

    Layer 4 puts H on positions 1..l-1: the end qubit 1 gets an extra H
    and the end qubit l none, which conjugates the end pair by H (x) H.
    That leaves |Psi^{0,0}> fixed and swaps the X/Z byproducts so the
    parity rule of :func:`parity_completion` holds for every outcome.
    The last layer holds a placeholder PAULI op on position 1; its actual
    Pauli comes from :func:`parity_completion`.
    """
    _check_length(l)
    return [
        tuple(Op("H", (k,)) for k in range(1, l + 1)),
        tuple(Op("CPHASE", (k, k + 1)) for k in range(1, l, 2)),
        tuple(Op("CPHASE", (k, k + 1)) for k in range(2, l - 1, 2)),
        tuple(Op("H", (k,)) for k in range(1, l)),
        tuple(Op("MEASURE", (k,)) for k in range(2, l)),
        (Op("PAULI", (1,)),),
    ]


def count_ops(layers: Sequence[Layer], kind: str) -> int:
    return sum(op.kind == kind for layer in layers for op in layer)


@dataclass(frozen=True)
class MeasurementRecord:
    """Reported bits for interior positions 2..l-1, in position order."""

    outcomes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.outcomes) % 2:
            raise ValueError("a bus of even length has an even number of interior qubits")
        if any(b not in (0, 1) for b in self.outcomes):
            raise ValueError(f"outcomes must be bits, got {self.outcomes}")

    def position(self, k: int) -> int:
        return self.outcomes[k - 2]

    @property
    def parity_even(self) -> int:
        return sum(self.outcomes[0::2]) % 2  # positions 2, 4, ...

    @property
    def parity_odd(self) -> int:
        return sum(self.outcomes[1::2]) % 2  # positions 3, 5, ...


def parity_completion(record: MeasurementRecord) -> PauliIndex:
    return PauliIndex(record.parity_even, record.parity_odd)


def _completion_from_product(record: MeasurementRecord) -> np.ndarray:
    """sigma_M as the explicit product over joints (phase included)."""
    out = np.eye(2, dtype=complex)
    for j in range(0, len(record.outcomes), 2):
        out = out @ pauli(record.outcomes[j : j + 2])
    return out


@dataclass(frozen=True)
class BusSpec:
    l: int
    noise: NoiseModel = NoiseModel()
    error_model: ErrorModel = ErrorModel.DEP

    def __post_init__(self) -> None:
        _check_length(self.l)
        object.__setattr__(self, "error_model", ErrorModel(self.error_model))

    @property
    def n(self) -> int:
        return self.l // 2 - 1


def _prepare(spec: BusSpec) -> DensityMatrix:
    """Layers 1-4 on |0...0>, with gate noise on every CPHASE."""
    l = spec.l
    if l > qmat.MAX_QUBITS:
        raise qmat.RegisterTooLarge(f"bus length {l} exceeds the register cap of {qmat.MAX_QUBITS}")
    layers = build_swap_circuit(l)
    state = DensityMatrix.basis("0" * l)
    for layer in layers[:4]:
        for op in layer:
            idx = [k - 1 for k in op.positions]
            if op.kind == "H":
                state = apply_unitary(state, H, idx)
            else:
                state = noisy_cphase(state, idx, spec.noise, spec.error_model)
    return state


def _correct(end_pair: DensityMatrix, which: Sequence[int]) -> DensityMatrix:
    return apply_unitary(end_pair, pauli(which), [0])


def simulate_bus_exact(spec: BusSpec) -> DensityMatrix:
    """Exact end-pair state averaged over all reported outcomes.

    Branches are merged by the two parity bits as each interior qubit is
    measured, and the measured qubit is traced out, so the register
    shrinks as the sweep proceeds. Leaked population is absent from the
    result, whose trace is then below one.
    """
    state = _prepare(spec)
    branches: dict[tuple[int, int], DensityMatrix] = {(0, 0): state}
    for k in range(2, spec.l):
        parity_slot = 0 if k % 2 == 0 else 1
        merged: dict[tuple[int, int], np.ndarray] = {}
        for parities, rho in branches.items():
            # qubit at position k is now the second qubit (index 1)
            for rep in noisy_measure(rho, 1, spec.noise.eta):
                if rep.probability <= 0:
                    continue
                keep = [q for q in range(rho.num_qubits) if q != 1]
                reduced = partial_trace(rep.state, keep).mat * rep.probability
                key = list(parities)
                key[parity_slot] ^= rep.outcome
                key = tuple(key)
                merged[key] = merged.get(key, 0) + reduced
        branches = {key: DensityMatrix(mat) for key, mat in sorted(merged.items())}
    out = np.zeros((4, 4), dtype=complex)
    for parities, rho in sorted(branches.items()):
        out += _correct(rho, parities).mat
    return DensityMatrix(out)


def outcome_branches(spec: BusSpec) -> Iterator[tuple[MeasurementRecord, float, DensityMatrix]]:
    """Every reported outcome string with its probability and corrected end pair.

    Enumerates all 2^(l-2) strings on the full register; meant for small l.
    """
    state = _prepare(spec)
    l = spec.l
    interior = list(range(1, l - 1))
    for bits in itertools.product((0, 1), repeat=len(interior)):
        rho = state
        weight = 1.0
        for idx, bit in zip(interior, bits):
            branch = noisy_measure(rho, idx, spec.noise.eta)[bit]
            weight *= branch.probability
            if branch.state is None:
                break
            rho = branch.state
        record = MeasurementRecord(bits)
        if weight <= 0:
            yield record, 0.0, None
            continue
        end = partial_trace(rho, [0, l - 1])
        yield record, weight, _correct(end, parity_completion(record))


def sample_bus_trajectories(spec: BusSpec, shots: int, seed: int) -> DensityMatrix:
    """Monte Carlo estimate of the corrected end pair (spot checks only)."""
    rng = np.random.default_rng(seed)
    state = _prepare(spec)
    acc = np.zeros((4, 4), dtype=complex)
    for _ in range(shots):
        rho = state
        bits = []
        for idx in range(1, spec.l - 1):
            branches = noisy_measure(rho, idx, spec.noise.eta)
            probs = np.array([max(b.probability, 0.0) for b in branches])
            pick = int(rng.choice(2, p=probs / probs.sum()))
            bits.append(pick)
            rho = branches[pick].state
        record = MeasurementRecord(tuple(bits))
        end = partial_trace(rho, [0, spec.l - 1])
        acc += _correct(end, parity_completion(record)).mat
    return DensityMatrix(acc / shots)


@dataclass(frozen=True)
class BellDiagonal:
    """Weights on |Psi^{0,0}>, |Psi^{1,0}>, |Psi^{0,1}>, |Psi^{1,1}>.

    The weights sum to one except after leakage, where the deficit is the
    lost population.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        w = self.as_array()
        if np.any(w < -1e-9) or w.sum() > 1 + 1e-9:
            raise ValueError(f"invalid Bell-diagonal weights {tuple(w)}")

    @classmethod
    def from_array(cls, w: Sequence[float]) -> BellDiagonal:
        return cls(*(float(x) for x in w))

    @classmethod
    def werner(cls, fidelity: float) -> BellDiagonal:
        rest = (1 - fidelity) / 3
        return cls(fidelity, rest, rest, rest)

    @classmethod
    def perfect(cls) -> BellDiagonal:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_density(cls, state: DensityMatrix) -> BellDiagonal:
        """Bell-basis populations of ``state`` (its twirled part)."""
        return cls.from_array([fidelity_with_bell(state, w) for w in PAULI_INDICES])

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=float)

    @property
    def fidelity(self) -> float:
        return self.a

    @property
    def total(self) -> float:
        return float(self.as_array().sum())

    def normalized(self) -> BellDiagonal:
        return BellDiagonal.from_array(self.as_array() / self.total)

    def to_density(self) -> DensityMatrix:
        B = bell_basis_matrix()
        return DensityMatrix(B @ np.diag(self.as_array()).astype(complex) @ B.conj().T)


def xor_convolve(*dists: Sequence[float]) -> np.ndarray:
    """Distribution of the XOR of independent Pauli labels.

    Each argument is indexed like :data:`PAULI_INDICES`.
    """
    out = np.array([1.0, 0.0, 0.0, 0.0])
    for dist in dists:
        new = np.zeros(4)
        for (u, wu), (v, wv) in itertools.product(zip(PAULI_INDICES, out), zip(PAULI_INDICES, dist)):
            k = PAULI_INDICES.index(PauliIndex(u.i ^ v.i, u.j ^ v.j))
            new[k] += wu * wv
        out = new
    return out


def misreport_distribution(eta: float) -> np.ndarray:
    """Pauli error on the end pair from one misread joint (two detectors)."""
    return np.array([eta * eta, eta * (1 - eta), (1 - eta) * eta, (1 - eta) ** 2])


@functools.lru_cache(maxsize=256)
def elementary_pair(noise: NoiseModel, error_model: ErrorModel = ErrorModel.DEP) -> BellDiagonal:
    """Bell-diagonal (twirled) state of one noisy l=2 link, from the exact simulator."""
    end = simulate_bus_exact(BusSpec(2, noise, error_model))
    return BellDiagonal.from_density(end)


def _join_exact(left: BellDiagonal, right: BellDiagonal, noise: NoiseModel, model: ErrorModel) -> BellDiagonal:
    # left pair (0,1), right pair (2,3), joint (1,2). A pair's Bell form
    # includes the layer-4 H on its first qubit, which in the circuit comes
    # after the joint CPHASE, so it is undone and redone around it.
    state = left.to_density().tensor(right.to_density())
    state = apply_unitary(state, H, [2])
    state = noisy_cphase(state, [1, 2], noise, model)
    state = apply_unitary(state, H, [2])
    state = apply_unitary(state, H, [1])
    # measured qubit 1 reads as an X flag, qubit 2 as a Z flag for the end pair
    out = np.zeros((4, 4), dtype=complex)
    for m_left in noisy_measure(state, 1, noise.eta):
        if m_left.probability <= 0:
            continue
        for m_right in noisy_measure(m_left.state, 2, noise.eta):
            if m_right.probability <= 0:
                continue
            weight = m_left.probability * m_right.probability
            end = partial_trace(m_right.state, [0, 3])
            fix = _JOINT_CORRECTION[(m_left.outcome, m_right.outcome)]
            out += weight * apply_unitary(end, fix, [0]).mat
    return BellDiagonal.from_density(twirl(DensityMatrix(out)))


def _joint_correction_table() -> dict[tuple[int, int], np.ndarray]:
    table = {}
    for m_left, m_right in itertools.product((0, 1), repeat=2):
        table[(m_left, m_right)] = pauli((m_left, m_right))
    return table


_JOINT_CORRECTION = _joint_correction_table()


def swap_recursion_step(
    left: BellDiagonal,
    right: BellDiagonal,
    noise: NoiseModel,
    error_model: ErrorModel = ErrorModel.DEP,
) -> BellDiagonal:
    """Join two Bell-diagonal pairs with one noisy joint of the bus protocol.

    For DEP (and CPE, whose twirled output coincides with DEP) the result
    is p * (left xor right xor misreport) + (1 - p) * 1/4. Leakage has no
    closed recursion; that case runs the four-qubit joint exactly and
    keeps the twirled part.
    """
    error_model = ErrorModel(error_model)
    if error_model is ErrorModel.CPE_LEAKAGE:
        return _join_exact(left, right, noise, error_model)
    total = left.total * right.total
    joined = xor_convolve(left.as_array(), right.as_array(), misreport_distribution(noise.eta))
    out = noise.p * joined + (1 - noise.p) * total / 4
    return BellDiagonal.from_array(out)


def bus_fast_path(l: int, noise: NoiseModel, error_model: ErrorModel = ErrorModel.DEP) -> BellDiagonal:
    """End pair of a length-l bus from the Bell-diagonal recursion."""
    _check_length(l)
    seed = elementary_pair(noise, ErrorModel(error_model))
    state = seed
    for _ in range(l // 2 - 1):
        state = swap_recursion_step(state, seed, noise, error_model)
    return state


class Exponents(str, Enum):
    """Which exponent of (2 eta - 1) the closed forms use.

    ``PRINTED`` keeps the published (l-1)/2 and l-1. ``ORACLE`` uses
    n = l/2 - 1 and 2n, one parity class of interior measurements each,
    which is what the exact simulation reproduces.
    """

    PRINTED = "printed"
    ORACLE = "oracle"


def _measurement_exponent(l: float, exponents: Exponents) -> float:
    if Exponents(exponents) is Exponents.PRINTED:
        return (l - 1) / 2
    return (l - 2) / 2


def closed_form_state(l: float, p: float, eta: float, exponents: Exponents = Exponents.ORACLE) -> BellDiagonal:
    """Bell-diagonal end pair p^(l-1) (a+, b, b, a-) + (1 - p^(l-1)) 1/4.

    Odd l is accepted with the printed exponents (the l=25 example).
    """
    x = 2 * eta - 1
    n = _measurement_exponent(l, exponents)
    a_plus = (1 + 2 * x**n + x ** (2 * n)) / 4
    a_minus = (1 - 2 * x**n + x ** (2 * n)) / 4
    b = (1 - a_plus - a_minus) / 2
    q = p ** (l - 1)
    return BellDiagonal.from_array(q * np.array([a_plus, b, b, a_minus]) + (1 - q) / 4)


def fidelity_closed_form(
    l: float, p: float, eta: float, gamma: float = 0.0, exponents: Exponents = Exponents.PRINTED
) -> float:
    """Closed-form end-pair fidelity; the leakage approximation when gamma > 0."""
    x = 2 * eta - 1
    n = _measurement_exponent(l, exponents)
    coherent = p ** (l - 1) * (2 * x**n + x ** (2 * n))
    if gamma == 0:
        return (1 + coherent) / 4
    return (4 * math.exp(-l * gamma) * coherent + 3 + math.exp(-2 * l * gamma)) / 16


def swap_chain_fidelity(l: int, p: float) -> float:
    """Bell-pair fidelity after moving one half l sites with noisy SWAPs.

    Register: reference qubit, then chain sites 0..l. The Bell pair starts
    on (reference, site 0) and the other sites hold |0>. Each SWAP is three
    CNOTs, each a CPHASE between Hadamards, and every CPHASE is depolarizing
    with success probability p.
    """
    from .noise import depolarizing_cphase

    if l < 1:
        raise ValueError(f"chain length must be >= 1, got {l}")
    n_qubits = l + 2
    if n_qubits > qmat.MAX_QUBITS:
        raise qmat.RegisterTooLarge(f"swap chain of length {l} needs {n_qubits} qubits")
    state = DensityMatrix.bell().tensor(DensityMatrix.basis("0" * l))

    def cnot(rho: DensityMatrix, c: int, t: int) -> DensityMatrix:
        rho = apply_unitary(rho, H, [t])
        rho = depolarizing_cphase(rho, [c, t], p)
        return apply_unitary(rho, H, [t])

    for site in range(1, l + 1):
        a, b = site, site + 1
        state = cnot(state, a, b)
        state = cnot(state, b, a)
        state = cnot(state, a, b)
    return fidelity_with_bell(partial_trace(state, [0, n_qubits - 1]))


class SwapChainResult(NamedTuple):
    fidelity: float
    bound: float

    @property
    def below_bound(self) -> bool:
        return self.fidelity < self.bound


def swap_chain_baseline(l: int, p: float) -> SwapChainResult:
    """Simulated swap-chain fidelity next to the bound p^(2l).

    Callers decide what to do when the bound is violated; see
    :attr:`SwapChainResult.below_bound`.
    """
    return SwapChainResult(swap_chain_fidelity(l, p), p ** (2 * l))


@dataclass(frozen=True)
class TimeModel:
    tau_1bit: float = 1.0
    tau_2bit: float = 1.0
    tau_meas: float = 1.0

    def __post_init__(self) -> None:
        for name in ("tau_1bit", "tau_2bit", "tau_meas"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


def protocol_times(l: int, tm: TimeModel) -> tuple[float, float]:
    """(parallel entanglement swapping time, serial SWAP time)."""
    if l < 2:
        raise ValueError(f"l must be >= 2, got {l}")
    t_entswap = 4 * tm.tau_1bit + 2 * tm.tau_2bit + tm.tau_meas
    t_swap = 2 * l * tm.tau_2bit
    return t_entswap, t_swap


def crossover_length(tm: TimeModel) -> int:
    """Smallest l for which serial swapping is strictly slower."""
    t_entswap, _ = protocol_times(2, tm)
    l = max(2, math.floor(t_entswap / (2 * tm.tau_2bit)) + 1)
    return l
