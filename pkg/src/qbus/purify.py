"""Deutsch-protocol purification and a simple nested repeater schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bus import (
    BellDiagonal,
    TimeModel,
    bus_fast_path,
    protocol_times,
    swap_recursion_step,
)
from .noise import ErrorModel, NoiseModel, noisy_cnot, noisy_measure
from .qmat import CNOT, I2, X, DensityMatrix, apply_unitary, measure_qubit, partial_trace

MAX_ROUNDS = 32

# Alice rotates by Rx(pi/2), Bob by Rx(-pi/2)
RX_PLUS = (I2 - 1j * X) / math.sqrt(2)
RX_MINUS = (I2 + 1j * X) / math.sqrt(2)

# register order for one round: control pair (A1, B1), target pair (A2, B2)
A1, B1, A2, B2 = 0, 1, 2, 3


@dataclass(frozen=True)
class PurifyConfig:
    rounds: int = 6
    noisy_ops: bool = False
    noise: NoiseModel = NoiseModel()
    nesting_depth: int = 0
    error_model: ErrorModel = ErrorModel.DEP
    time_model: TimeModel = TimeModel()

    def __post_init__(self) -> None:
        if not 0 <= self.rounds <= MAX_ROUNDS:
            raise ValueError(f"rounds must be in [0, {MAX_ROUNDS}], got {self.rounds}")
        if not 0 <= self.nesting_depth <= MAX_ROUNDS:
            raise ValueError(f"nesting_depth must be in [0, {MAX_ROUNDS}], got {self.nesting_depth}")
        object.__setattr__(self, "error_model", ErrorModel(self.error_model))


@dataclass(frozen=True)
class PurifyOutcome:
    """Result of a purification or repeater run.

    ``pairs_consumed`` counts elementary pairs when every round succeeds;
    ``expected_pairs`` divides by the success probabilities instead.
    """

    state: BellDiagonal
    success_prob_per_round: tuple[float, ...] = ()
    pairs_consumed: int = 1
    expected_pairs: float = 1.0
    expected_time: float = 0.0
    best_fidelity: float = 0.0
    exhausted: bool = False

    @property
    def rounds_used(self) -> int:
        return len(self.success_prob_per_round)

    @property
    def fidelity(self) -> float:
        return self.state.a


def round_time(tm: TimeModel) -> float:
    """Local rotation, bilateral CNOT, then target measurement."""
    return tm.tau_1bit + tm.tau_2bit + tm.tau_meas


def _round_register(pair: BellDiagonal) -> DensityMatrix:
    rho = pair.to_density()
    return rho.tensor(rho)


def _bilateral(state: DensityMatrix, config: PurifyConfig) -> DensityMatrix:
    for q in (A1, A2):
        state = apply_unitary(state, RX_PLUS, [q])
    for q in (B1, B2):
        state = apply_unitary(state, RX_MINUS, [q])
    for control, target in ((A1, A2), (B1, B2)):
        if config.noisy_ops:
            state = noisy_cnot(state, control, target, config.noise, config.error_model)
        else:
            state = apply_unitary(state, CNOT, [control, target])
    return state


def deutsch_round(pair: BellDiagonal, config: PurifyConfig) -> tuple[BellDiagonal, float]:
    """One round on two copies of ``pair``; returns (kept pair, success probability).

    The kept pair is reported by its Bell-basis populations. For
    Bell-diagonal inputs the round maps to Bell-diagonal outputs, so
    nothing is lost by that projection.
    """
    if pair.total <= 0:
        raise ValueError("input pair has no population")
    pair = pair.normalized()
    state = _bilateral(_round_register(pair), config)
    eta = config.noise.eta if config.noisy_ops else 1.0
    kept = np.zeros((4, 4), dtype=complex)
    for a in noisy_measure(state, A2, eta):
        if a.probability <= 0:
            continue
        for b in noisy_measure(a.state, B2, eta):
            if b.probability <= 0 or b.outcome != a.outcome:
                continue
            kept += a.probability * b.probability * partial_trace(b.state, [A1, B1]).mat
    p_success = float(np.trace(kept).real)
    if p_success <= 0:
        raise ValueError("purification round cannot succeed for this input")
    out = BellDiagonal.from_density(DensityMatrix(kept / p_success))
    return out, p_success


def deutsch_round_projective(pair: BellDiagonal, config: PurifyConfig) -> tuple[DensityMatrix, float]:
    """Ideal-detector round by explicit coincidence projectors.

    Returns the full kept 2-qubit state (not just its Bell populations).
    """
    state = _bilateral(_round_register(pair.normalized()), config)
    kept = np.zeros((4, 4), dtype=complex)
    for a in measure_qubit(state, A2):
        if a.state is None:
            continue
        for b in measure_qubit(a.state, B2):
            if b.state is not None and b.outcome == a.outcome:
                kept += a.probability * b.probability * partial_trace(b.state, [A1, B1]).mat
    p_success = float(np.trace(kept).real)
    return DensityMatrix(kept / p_success), p_success


def purify_to_target(pair: BellDiagonal, config: PurifyConfig, target_fidelity: float) -> PurifyOutcome:
    """Repeat Deutsch rounds until ``target_fidelity`` or the round budget.

    Hitting the budget first gives ``exhausted=True``; ``state`` is then
    the last round's output and ``best_fidelity`` the best seen.
    """
    state = pair
    probs: list[float] = []
    best = state.a
    t_round = round_time(config.time_model)
    while state.a < target_fidelity and len(probs) < config.rounds:
        state, p_success = deutsch_round(state, config)
        probs.append(p_success)
        best = max(best, state.a)
    k = len(probs)
    return PurifyOutcome(
        state=state,
        success_prob_per_round=tuple(probs),
        pairs_consumed=2**k,
        expected_pairs=_expected_pairs(probs),
        expected_time=k * t_round,
        best_fidelity=best,
        exhausted=state.a < target_fidelity,
    )


def _expected_pairs(probs: list[float]) -> float:
    # round r needs two outputs of round r-1, each obtained after 1/p tries
    pairs = 1.0
    for p_success in probs:
        pairs = 2 * pairs / p_success
    return pairs


def nested_repeater(l: int, segments: int, config: PurifyConfig, stage_target: float | None = None) -> PurifyOutcome:
    """Swap-and-purify nesting over ``segments`` equal pieces of a length-l bus.

    Each segment is a length l/segments bus pair from the Bell-diagonal
    fast path. Adjacent pairs are joined level by level; after each join
    at a level below ``config.nesting_depth`` the new pair is purified
    back towards ``stage_target`` (default: the segment-pair fidelity),
    capped at ``config.rounds``. The final pair is purified the same way
    unless ``config.nesting_depth`` is 0 and there is nothing to nest,
    in which case a single purification stage runs on it.
    """
    if l < 2 or l % 2:
        raise ValueError(f"bus length must be an even integer >= 2, got {l}")
    if segments < 1 or (l // 2) % segments:
        raise ValueError(f"{segments} segments do not divide the {l // 2} elementary pairs of a length-{l} bus")
    seg_len = l // segments
    tm = config.time_model
    t_entswap, _ = protocol_times(seg_len, tm)
    t_join = tm.tau_2bit + 2 * tm.tau_1bit + tm.tau_meas
    t_round = round_time(tm)

    seg_pair = bus_fast_path(seg_len, config.noise, config.error_model)
    target = seg_pair.a if stage_target is None else stage_target
    # (state, all-succeed pair count, expected pair count, success probs)
    level = [(seg_pair, 1, 1.0, ())] * segments
    elapsed = t_entswap
    depth = 0
    while len(level) > 1:
        joined = []
        for i in range(0, len(level) - 1, 2):
            (s1, n1, e1, p1), (s2, n2, e2, p2) = level[i], level[i + 1]
            s = swap_recursion_step(s1, s2, config.noise, config.error_model)
            joined.append((s, n1 + n2, e1 + e2, p1 + p2))
        if len(level) % 2:
            joined.append(level[-1])
        elapsed += t_join
        if depth < config.nesting_depth and config.rounds > 0:
            joined, rounds = _purify_level(joined, config, target)
            elapsed += rounds * t_round
        level = joined
        depth += 1

    state, n_pairs, e_pairs, probs = level[0]
    if config.nesting_depth == 0 and config.rounds > 0:
        out = purify_to_target(state, config, target if segments > 1 else 1.0)
        state = out.state
        n_pairs *= out.pairs_consumed
        e_pairs *= out.expected_pairs
        probs = probs + out.success_prob_per_round
        elapsed += out.expected_time
    return PurifyOutcome(
        state=state,
        success_prob_per_round=tuple(probs),
        pairs_consumed=n_pairs,
        expected_pairs=e_pairs,
        expected_time=elapsed,
        best_fidelity=state.a,
        exhausted=state.a < target,
    )


def _purify_level(level, config: PurifyConfig, target: float):
    out = []
    rounds_here = 0
    for state, n_pairs, e_pairs, probs in level:
        res = purify_to_target(state, config, target)
        rounds_here = max(rounds_here, res.rounds_used)
        out.append(
            (
                res.state,
                n_pairs * res.pairs_consumed,
                e_pairs * res.expected_pairs,
                probs + res.success_prob_per_round,
            )
        )
    return out, rounds_here


def reference_point_variants(l: float = 25, p: float = 0.995, eta: float = 0.99, rounds: int = 6) -> dict[str, PurifyOutcome]:
    """Six-round purification of the long-bus pair under four assumptions.

    Keys combine the input ("exact" Bell-diagonal or "twirled", a Werner
    state of the same fidelity) with the local operations ("noisy" or
    "ideal").
    """
    from .bus import Exponents, closed_form_state

    exact = closed_form_state(l, p, eta, Exponents.PRINTED)
    inputs = {"exact": exact, "twirled": BellDiagonal.werner(exact.a)}
    noise = NoiseModel(p=p, eta=eta)
    out = {}
    for in_name, pair in inputs.items():
        for ops_name, noisy in (("noisy", True), ("ideal", False)):
            config = PurifyConfig(rounds=rounds, noisy_ops=noisy, noise=noise)
            out[f"{in_name}/{ops_name}"] = purify_to_target(pair, config, 1.0)
    return out
