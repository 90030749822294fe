"""Nonlocal CNOT/CPHASE between memory qubits A and B over one bus pair."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bus import BellDiagonal
from .noise import ErrorModel, NoiseModel, noisy_cnot, noisy_measure
from .qmat import CNOT, CPHASE, H, X, Z, DensityMatrix, apply_unitary, ket, partial_trace

# register: memory A, bus end 1, bus end l, memory B
QA, Q1, QL, QB = 0, 1, 2, 3

TARGET_GATES = {"CNOT": CNOT, "CPHASE": CPHASE}


class ResourceOrderWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GateJob:
    resource: BellDiagonal
    noise: NoiseModel = NoiseModel()
    target_gate: str = "CNOT"
    input_state: DensityMatrix | None = None
    error_model: ErrorModel = ErrorModel.DEP

    def __post_init__(self) -> None:
        if self.target_gate not in TARGET_GATES:
            raise ValueError(f"target_gate must be one of {sorted(TARGET_GATES)}, got {self.target_gate!r}")
        if self.input_state is None:
            object.__setattr__(self, "input_state", default_input(self.target_gate))
        if self.input_state.num_qubits != 2:
            raise ValueError("input_state must be a 2-qubit state on (A, B)")
        object.__setattr__(self, "error_model", ErrorModel(self.error_model))


def default_input(target_gate: str) -> DensityMatrix:
    """Product input the ideal gate maps to a maximally entangled state."""
    plus = (ket("0") + ket("1")) / np.sqrt(2)
    if target_gate == "CNOT":
        return DensityMatrix.from_ket(np.kron(plus, ket("0")))
    return DensityMatrix.from_ket(np.kron(plus, plus))


class GateBranch(NamedTuple):
    m1: int
    ml: int
    probability: float
    state: DensityMatrix | None


def teleported_gate_branches(job: GateJob) -> list[GateBranch]:
    """Corrected (A, B) state for each pair of reported bits (m1, ml)."""
    cphase = job.target_gate == "CPHASE"
    state = job.input_state.tensor(job.resource.to_density())
    state = DensityMatrix(_reorder_ab12(state.mat))
    if cphase:
        state = apply_unitary(state, H, [QB])
    state = noisy_cnot(state, QA, Q1, job.noise, job.error_model)
    out = []
    for b1 in noisy_measure(state, Q1, job.noise.eta):
        if b1.state is None:
            out.extend(GateBranch(b1.outcome, ml, 0.0, None) for ml in (0, 1))
            continue
        rho = b1.state
        if b1.outcome:
            rho = apply_unitary(rho, X, [QL])
        rho = noisy_cnot(rho, QL, QB, job.noise, job.error_model)
        rho = apply_unitary(rho, H, [QL])
        for bl in noisy_measure(rho, QL, job.noise.eta):
            if bl.state is None:
                out.append(GateBranch(b1.outcome, bl.outcome, 0.0, None))
                continue
            final = bl.state
            if bl.outcome:
                final = apply_unitary(final, Z, [QA])
            if cphase:
                final = apply_unitary(final, H, [QB])
            ab = partial_trace(final, [QA, QB])
            out.append(GateBranch(b1.outcome, bl.outcome, b1.probability * bl.probability, ab))
    return out


def _reorder_ab12(mat: np.ndarray) -> np.ndarray:
    # input is (A, B, 1, l); the circuit wants (A, 1, l, B)
    t = mat.reshape((2,) * 8)
    order = [0, 2, 3, 1]
    t = t.transpose(order + [4 + q for q in order])
    return t.reshape(16, 16)


def teleported_gate(job: GateJob) -> DensityMatrix:
    """Output on (A, B) averaged over the reported measurement branches."""
    out = np.zeros((4, 4), dtype=complex)
    for branch in teleported_gate_branches(job):
        if branch.state is not None:
            out += branch.probability * branch.state.mat
    return DensityMatrix(out)


def ideal_output(job: GateJob) -> DensityMatrix:
    return apply_unitary(job.input_state, TARGET_GATES[job.target_gate], [0, 1])


def simulated_gate_fidelity(job: GateJob) -> float:
    """Overlap of the teleported output with the ideal gate output.

    Equals the state fidelity when ``job.input_state`` is pure.
    """
    rho = teleported_gate(job)
    return float(np.trace(rho.mat @ ideal_output(job).mat).real)


def gate_fidelity_closed_form(resource: BellDiagonal, p: float, eta: float) -> float:
    a, b, c, d = resource.as_array()
    if not (a > b and a > c and a > d):
        warnings.warn(
            f"closed form assumes a > b, c, d; got {resource}", ResourceOrderWarning, stacklevel=2
        )
    coherent = a * eta**2 + (b + c) * eta * (1 - eta) + d * (1 - eta) ** 2
    return p**2 * coherent + (1 - p**2) / 4
