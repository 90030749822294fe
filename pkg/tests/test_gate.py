import itertools
import warnings

import numpy as np
import pytest

from qbus.bus import BellDiagonal
from qbus.gate import (
    GateJob,
    ResourceOrderWarning,
    gate_fidelity_closed_form,
    ideal_output,
    simulated_gate_fidelity,
    teleported_gate,
    teleported_gate_branches,
)
from qbus.noise import NoiseModel
from qbus.qmat import DensityMatrix, fidelity_with_bell, random_unitary


def random_product(rng) -> DensityMatrix:
    a = random_unitary(2, rng)[:, 0]
    b = random_unitary(2, rng)[:, 0]
    return DensityMatrix.from_ket(np.kron(a, b))


def test_perfect_cnot_makes_bell_pair():
    out = teleported_gate(GateJob(BellDiagonal.perfect()))
    assert fidelity_with_bell(out) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("a", [1.0, 0.9, 0.75, 0.5])
def test_werner_resource_ideal_ops_gives_a(a):
    assert simulated_gate_fidelity(GateJob(BellDiagonal.werner(a))) == pytest.approx(a, abs=1e-12)


def test_fully_noisy_gates():
    job = GateJob(BellDiagonal.werner(0.9), NoiseModel(p=0.0, eta=0.9))
    assert simulated_gate_fidelity(job) == pytest.approx(0.25, abs=1e-12)


def test_closed_form_examples():
    assert gate_fidelity_closed_form(BellDiagonal.perfect(), 1, 1) == 1
    r = BellDiagonal(0.7, 0.1, 0.15, 0.05)
    assert gate_fidelity_closed_form(r, 1, 1) == pytest.approx(0.7)
    r = BellDiagonal(0.985, 0.005, 0.005, 0.005)
    expected = 0.995**2 * (0.985 * 0.99**2 + 0.01 * 0.99 * 0.01 + 0.005 * 0.01**2) + (1 - 0.995**2) / 4
    assert gate_fidelity_closed_form(r, 0.995, 0.99) == pytest.approx(expected, abs=1e-15)
    assert simulated_gate_fidelity(GateJob(r, NoiseModel(p=0.995, eta=0.99))) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("target", ["CNOT", "CPHASE"])
def test_circuit_matches_closed_form_on_grid(target):
    resources = [BellDiagonal(0.8, 0.1, 0.06, 0.04), BellDiagonal(0.7, 0.05, 0.15, 0.1), BellDiagonal.werner(0.9)]
    for r, p, eta in itertools.product(resources, (1.0, 0.99, 0.9), (1.0, 0.99, 0.9)):
        job = GateJob(r, NoiseModel(p=p, eta=eta), target_gate=target)
        assert abs(simulated_gate_fidelity(job) - gate_fidelity_closed_form(r, p, eta)) <= 1e-9


@pytest.mark.parametrize("target", ["CNOT", "CPHASE"])
def test_ideal_teleportation_equals_gate(target, rng):
    for _ in range(20):
        job = GateJob(BellDiagonal.perfect(), target_gate=target, input_state=random_product(rng))
        out = teleported_gate(job)
        assert np.abs(out.mat - ideal_output(job).mat).max() <= 1e-10
        assert simulated_gate_fidelity(job) == pytest.approx(1, abs=1e-10)


def test_branch_independence(rng):
    job = GateJob(BellDiagonal.perfect(), input_state=random_product(rng))
    branches = teleported_gate_branches(job)
    assert len(branches) == 4
    assert sum(b.probability for b in branches) == pytest.approx(1)
    for b in branches:
        assert b.probability == pytest.approx(0.25)
        assert np.abs(b.state.mat - branches[0].state.mat).max() <= 1e-12


def test_outputs_valid_on_grid():
    for a, p, eta in itertools.product((1.0, 0.8, 0.4), (1.0, 0.9, 0.0), (1.0, 0.75, 0.5)):
        out = teleported_gate(GateJob(BellDiagonal.werner(a), NoiseModel(p=p, eta=eta)))
        assert out.is_valid()
        assert out.trace_weight == pytest.approx(1, abs=1e-12)


def test_ordering_warning():
    with pytest.warns(ResourceOrderWarning):
        value = gate_fidelity_closed_form(BellDiagonal(0.3, 0.5, 0.1, 0.1), 1, 1)
    assert value == pytest.approx(0.3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gate_fidelity_closed_form(BellDiagonal.werner(0.9), 1, 1)


def test_job_validation():
    with pytest.raises(ValueError):
        GateJob(BellDiagonal.perfect(), target_gate="SWAP")
    with pytest.raises(ValueError):
        GateJob(BellDiagonal.perfect(), input_state=DensityMatrix.basis("0"))
