"""Two-qubit gate noise, inefficient detectors and the Bell twirl."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .qmat import (
    CPHASE,
    H,
    I2,
    X,
    Y,
    Z,
    Branch,
    DensityMatrix,
    _check_targets,
    _sandwich,
    apply_unitary,
    insert_qubits,
    partial_trace,
)

GAUSS_HERMITE_NODES = 41


class ErrorModel(str, Enum):
    DEP = "dep"
    CPE = "cpe"
    CPE_LEAKAGE = "cpe-leak"


@dataclass(frozen=True)
class Discrete:
    """Phase kick of 0 with probability p, pi otherwise (CPHASE skipped)."""

    p: float

    def __post_init__(self) -> None:
        _check_unit("Discrete.p", self.p)

    @property
    def mean_phase_factor(self) -> float:
        return 2 * self.p - 1


@dataclass(frozen=True)
class Gaussian:
    """Centred normal phase error with standard deviation sigma."""

    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma >= 0:
            raise ValueError(f"Gaussian.sigma must be >= 0, got {self.sigma}")

    @property
    def mean_phase_factor(self) -> float:
        return math.exp(-self.sigma**2 / 2)

    def to_discrete(self) -> Discrete:
        # channels agree when E[e^{i phi}] matches: 2p - 1 = exp(-sigma^2/2)
        return Discrete((1 + self.mean_phase_factor) / 2)


PhaseNoise = Union[Discrete, Gaussian]


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class NoiseModel:
    """All error parameters of the bus.

    ``p`` is the two-qubit gate success probability, ``eta`` the detector
    efficiency and ``gamma`` the effective leakage decay per CPHASE. When
    ``phase_noise`` is omitted the controlled-phase error uses
    ``Discrete(p)``.
    """

    p: float = 1.0
    eta: float = 1.0
    gamma: float = 0.0
    phase_noise: PhaseNoise | None = field(default=None)

    def __post_init__(self) -> None:
        _check_unit("p", self.p)
        if not 0.5 <= self.eta <= 1.0:
            raise ValueError(f"eta must be in [1/2, 1], got {self.eta}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def phase_distribution(self) -> PhaseNoise:
        return self.phase_noise if self.phase_noise is not None else Discrete(self.p)

    @classmethod
    def ideal(cls) -> NoiseModel:
        return cls()


def _pair(state: DensityMatrix, qubits: Sequence[int]) -> list[int]:
    qubits = _check_targets(qubits, state.num_qubits)
    if len(qubits) != 2:
        raise ValueError("a two-qubit channel needs exactly two qubits")
    return qubits


def depolarize(state: DensityMatrix, qubits: Sequence[int]) -> DensityMatrix:
    """Tr_{qubits}[rho] (x) 1/d on ``qubits``."""
    qubits = _check_targets(qubits, state.num_qubits)
    k = len(qubits)
    mixed = DensityMatrix.maximally_mixed(k)
    rest = [q for q in range(state.num_qubits) if q not in qubits]
    if not rest:
        return mixed.scaled(state.trace_weight)
    return insert_qubits(partial_trace(state, rest), mixed, qubits)


def depolarizing_gate(state: DensityMatrix, U: np.ndarray, qubits: Sequence[int], p: float) -> DensityMatrix:
    _check_unit("p", p)
    qubits = _pair(state, qubits)
    ideal = apply_unitary(state, U, qubits)
    if p == 1.0:
        return ideal
    return DensityMatrix(p * ideal.mat + (1 - p) * depolarize(state, qubits).mat)


def depolarizing_cphase(state: DensityMatrix, qubits: Sequence[int], p: float) -> DensityMatrix:
    return depolarizing_gate(state, CPHASE, qubits, p)


def _phase_operator(phi: complex, gamma: float = 0.0) -> np.ndarray:
    # |11> amplitude picks up -exp(i phi - gamma/2)
    corner = -np.exp(1j * phi - gamma / 2) if math.isfinite(gamma) else 0.0
    return np.diag([1, 1, 1, corner]).astype(complex)


def _gauss_hermite(sigma: float, nodes: int = GAUSS_HERMITE_NODES) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.hermite.hermgauss(nodes)
    return math.sqrt(2) * sigma * x, w / math.sqrt(math.pi)


def _phase_average(state: DensityMatrix, qubits: list[int], dist: PhaseNoise, gamma: float) -> DensityMatrix:
    n = state.num_qubits
    if isinstance(dist, Discrete):
        phis, weights = np.array([0.0, math.pi]), np.array([dist.p, 1 - dist.p])
    elif isinstance(dist, Gaussian):
        phis, weights = _gauss_hermite(dist.sigma)
    else:
        raise TypeError(f"unknown phase-noise description {dist!r}")
    out = np.zeros_like(state.mat)
    for phi, w in zip(phis, weights):
        if w == 0:
            continue
        K = _phase_operator(phi, gamma)
        out += w * _sandwich(state.mat, n, K, K, qubits)
    return DensityMatrix(out)


def cpe_cphase(state: DensityMatrix, qubits: Sequence[int], noise: NoiseModel) -> DensityMatrix:
    """CPHASE with a random extra phase on |11>, averaged over g(phi)."""
    return _phase_average(state, _pair(state, qubits), noise.phase_distribution, 0.0)


def cpe_leakage_cphase(state: DensityMatrix, qubits: Sequence[int], noise: NoiseModel) -> DensityMatrix:
    """Controlled-phase error plus loss of |11> population at rate gamma.

    The leaked part is discarded, so the returned trace drops.
    """
    return _phase_average(state, _pair(state, qubits), noise.phase_distribution, noise.gamma)


def noisy_cphase(state: DensityMatrix, qubits: Sequence[int], noise: NoiseModel, model: ErrorModel) -> DensityMatrix:
    model = ErrorModel(model)
    if model is ErrorModel.DEP:
        return depolarizing_cphase(state, qubits, noise.p)
    if model is ErrorModel.CPE:
        return cpe_cphase(state, qubits, noise)
    return cpe_leakage_cphase(state, qubits, noise)


def noisy_cnot(state: DensityMatrix, control: int, target: int, noise: NoiseModel, model: ErrorModel) -> DensityMatrix:
    """CNOT built as H_t CPHASE H_t; only the CPHASE is noisy."""
    state = apply_unitary(state, H, [target])
    state = noisy_cphase(state, [control, target], noise, model)
    return apply_unitary(state, H, [target])


def noisy_measure(state: DensityMatrix, qubit: int, eta: float) -> list[Branch]:
    """Z measurement whose reported bit is wrong with probability 1 - eta.

    Returns one branch per *reported* bit. Each post-state mixes the two
    true collapse results with weights eta and 1 - eta.
    """
    if not 0.5 <= eta <= 1.0:
        raise ValueError(f"eta must be in [1/2, 1], got {eta}")
    n = state.num_qubits
    (qubit,) = _check_targets([qubit], n)
    collapsed = []
    for outcome in (0, 1):
        P = np.zeros((2, 2), dtype=complex)
        P[outcome, outcome] = 1.0
        collapsed.append(_sandwich(state.mat, n, P, P, [qubit]))
    branches = []
    for reported in (0, 1):
        post = eta * collapsed[reported] + (1 - eta) * collapsed[1 - reported]
        prob = float(np.trace(post).real)
        branches.append(Branch(reported, prob, DensityMatrix(post / prob) if prob > 0 else None))
    return branches


_TWIRL_OPS = [np.kron(s, s) for s in (I2, X, Y, Z)]


def twirl(state: DensityMatrix) -> DensityMatrix:
    if state.num_qubits != 2:
        raise ValueError(f"twirl acts on 2-qubit states, got {state.num_qubits}")
    out = sum(K @ state.mat @ K.conj().T for K in _TWIRL_OPS) / 4
    return DensityMatrix(out)
