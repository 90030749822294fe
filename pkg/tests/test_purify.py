import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbus.bus import BellDiagonal, Exponents, TimeModel, bus_fast_path, closed_form_state, fidelity_closed_form
from qbus.noise import NoiseModel
from qbus.purify import (
    PurifyConfig,
    deutsch_round,
    deutsch_round_projective,
    nested_repeater,
    reference_point_variants,
    purify_to_target,
    round_time,
)

IDEAL = PurifyConfig()
NOISY = PurifyConfig(noisy_ops=True, noise=NoiseModel(p=0.995, eta=0.99))


def literature_recurrence(w):
    """Textbook Deutsch map on (Phi+, Phi-, Psi+, Psi-) populations."""
    a, b, c, d = w
    A, B, C, D = a, d, c, b  # Phi+, Psi-, Psi+, Phi-
    N = (A + B) ** 2 + (C + D) ** 2
    return np.array([A * A + B * B, 2 * A * B, C * C + D * D, 2 * C * D]) / N, N


def test_perfect_pair_is_fixed_point():
    out, p_success = deutsch_round(BellDiagonal.perfect(), IDEAL)
    assert np.allclose(out.as_array(), [1, 0, 0, 0], atol=1e-12)
    assert p_success == pytest.approx(1)


@pytest.mark.parametrize("a", [0.55, 0.65, 0.74, 0.75, 0.85, 0.95])
def test_werner_improves_above_half(a):
    out, p_success = deutsch_round(BellDiagonal.werner(a), IDEAL)
    assert out.a > a
    assert 0 < p_success <= 1


def test_below_threshold_runs():
    out, p_success = deutsch_round(BellDiagonal.werner(0.45), IDEAL)
    assert 0 < p_success <= 1
    assert out.total == pytest.approx(1)
    # no improvement guarantee below 1/2; record the direction
    assert out.a < 0.45


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.001, 1), min_size=4, max_size=4))
def test_matches_literature_recurrence(weights):
    w = np.array(weights) / sum(weights)
    out, p_success = deutsch_round(BellDiagonal.from_array(w), IDEAL)
    expected, N = literature_recurrence(w)
    assert np.abs(out.as_array() - expected).max() <= 1e-12
    assert p_success == pytest.approx(N, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.001, 1), min_size=4, max_size=4))
def test_projective_branches_agree(weights):
    w = BellDiagonal.from_array(np.array(weights) / sum(weights))
    merged, p1 = deutsch_round(w, IDEAL)
    full, p2 = deutsch_round_projective(w, IDEAL)
    assert p1 == pytest.approx(p2, abs=1e-12)
    assert np.abs(merged.to_density().mat - full.mat).max() <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.001, 1), min_size=4, max_size=4), st.floats(0.8, 1), st.floats(0.8, 1))
def test_outputs_are_valid(weights, p, eta):
    w = BellDiagonal.from_array(np.array(weights) / sum(weights))
    config = PurifyConfig(noisy_ops=True, noise=NoiseModel(p=p, eta=eta))
    out, p_success = deutsch_round(w, config)
    assert out.as_array().min() >= -1e-12
    assert out.total == pytest.approx(1, abs=1e-10)
    assert 0 < p_success <= 1


def test_reference_point_reproduced():
    start = closed_form_state(25, 0.995, 0.99, Exponents.PRINTED)
    assert start.a == pytest.approx(0.734, abs=1e-3)
    out = purify_to_target(start, PurifyConfig(rounds=6, noisy_ops=True, noise=NoiseModel(p=0.995, eta=0.99)), 1.0)
    assert out.rounds_used == 6
    assert out.fidelity == pytest.approx(0.985, abs=0.01)
    assert out.pairs_consumed == 64


def test_reference_point_variants():
    variants = reference_point_variants()
    assert set(variants) == {"exact/noisy", "exact/ideal", "twirled/noisy", "twirled/ideal"}
    for name, out in variants.items():
        assert out.rounds_used == 6
        assert out.fidelity == pytest.approx(0.985, abs=0.016), name
    assert variants["exact/ideal"].fidelity >= 0.985


def test_target_already_met():
    w = BellDiagonal.werner(0.9)
    out = purify_to_target(w, NOISY, 0.8)
    assert out.rounds_used == 0
    assert out.state == w
    assert out.pairs_consumed == 1 and not out.exhausted


def test_budget_exhausted():
    out = purify_to_target(BellDiagonal.werner(0.74), PurifyConfig(rounds=2), 0.999)
    assert out.exhausted
    assert out.rounds_used == 2
    assert out.best_fidelity == pytest.approx(out.fidelity)


def test_ideal_rounds_monotone_and_accounted():
    w = BellDiagonal.werner(0.74)
    fidelities = [purify_to_target(w, PurifyConfig(rounds=k), 1.0).fidelity for k in range(7)]
    assert all(b > a for a, b in zip(fidelities, fidelities[1:]))
    out = purify_to_target(w, PurifyConfig(rounds=6), 1.0)
    assert out.pairs_consumed == 64
    assert out.expected_pairs >= 64
    assert out.expected_time == pytest.approx(6 * round_time(TimeModel()))


def test_expected_pairs_recursion():
    out = purify_to_target(BellDiagonal.werner(0.8), PurifyConfig(rounds=2), 1.0)
    p1, p2 = out.success_prob_per_round
    assert out.expected_pairs == pytest.approx(2 * (2 / p1) / p2)


def test_config_bounds():
    with pytest.raises(ValueError):
        PurifyConfig(rounds=33)
    with pytest.raises(ValueError):
        PurifyConfig(nesting_depth=-1)


def test_nested_single_segment_no_rounds():
    config = PurifyConfig(rounds=0, noise=NoiseModel(p=0.99, eta=0.99))
    out = nested_repeater(12, 1, config)
    assert np.abs(out.state.as_array() - bus_fast_path(12, config.noise).as_array()).max() <= 1e-12
    assert out.pairs_consumed == 1


@pytest.mark.parametrize("segments", [2, 3, 6])
def test_nested_without_purification_is_flat(segments):
    config = PurifyConfig(rounds=0, noise=NoiseModel(p=0.995, eta=0.99), nesting_depth=3)
    out = nested_repeater(12, segments, config)
    assert np.abs(out.state.as_array() - bus_fast_path(12, config.noise).as_array()).max() <= 1e-12
    assert out.pairs_consumed == segments


def test_nested_ideal_two_segments():
    out = nested_repeater(8, 2, PurifyConfig(rounds=0))
    assert out.fidelity == pytest.approx(1)


def test_nested_purified_beats_direct():
    noise = NoiseModel(p=0.995, eta=0.99)
    config = PurifyConfig(rounds=1, noisy_ops=True, noise=noise, nesting_depth=1)
    out = nested_repeater(24, 2, config)
    direct = fidelity_closed_form(24, 0.995, 0.99, 0, Exponents.ORACLE)
    assert out.fidelity > direct
    assert out.rounds_used >= 1
    assert out.pairs_consumed == 4


def test_nested_time_accounting():
    tm = TimeModel(1, 2, 5)
    config = PurifyConfig(rounds=1, noise=NoiseModel(p=0.99), nesting_depth=1, time_model=tm)
    out = nested_repeater(8, 2, config)
    t_entswap = 4 * 1 + 2 * 2 + 5
    t_join = 2 + 2 * 1 + 5
    assert out.rounds_used == 1
    assert out.expected_time == pytest.approx(t_entswap + t_join + round_time(tm))


def test_nested_rejects_bad_segments():
    with pytest.raises(ValueError):
        nested_repeater(12, 4, IDEAL)
    with pytest.raises(ValueError):
        nested_repeater(7, 1, IDEAL)
