"""Command-line front end: ``qbus {verify,sweep,compare,purify,gate}``.

Exit codes: 0 success, 1 a check failed, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import acceptance
from .bus import (
    BellDiagonal,
    BusSpec,
    Exponents,
    TimeModel,
    bus_fast_path,
    closed_form_state,
    sample_bus_trajectories,
    simulate_bus_exact,
)
from .gate import GateJob, gate_fidelity_closed_form, simulated_gate_fidelity
from .noise import ErrorModel, NoiseModel
from .purify import PurifyConfig, reference_point_variants, purify_to_target
from .qmat import fidelity_with_bell
from .report import ConfigError, SweepSpec, run_compare_baselines, run_sweep

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

LIST_KEYS = {"lengths", "p", "eta", "gamma"}
KNOWN_KEYS = LIST_KEYS | {"model", "rounds", "noisy_ops", "seed", "tau1", "tau2", "taum", "out", "workers"}


def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment, lists are comma-separated."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}", f"expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KNOWN_KEYS:
            raise ConfigError(key, f"unknown config key in {path}")
        values[key] = value
    return values


def _floats(name: str, text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(name, f"expected comma-separated numbers, got {text!r}") from None


def _ints(name: str, text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = part.split("..", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(name, f"expected integers, got {part!r}") from None
    return tuple(out)


def _bool(name: str, text: str) -> bool:
    lowered = str(text).lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(name, f"expected a boolean, got {text!r}")


def _settings(args: argparse.Namespace) -> dict[str, Any]:
    settings: dict[str, Any] = {}
    if args.config:
        try:
            settings.update(read_config(args.config))
        except OSError as exc:
            raise ConfigError("config", str(exc)) from exc
    for key in KNOWN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def build_spec(settings: dict[str, Any], default_lengths: str = "2,4,6,8") -> SweepSpec:
    s = {k: str(v) for k, v in settings.items()}
    try:
        model = ErrorModel(s.get("model", "dep"))
    except ValueError:
        raise ConfigError("model", f"expected one of dep, cpe, cpe-leak, got {s['model']!r}") from None
    p_values = _floats("p", s.get("p", "1"))
    eta_values = _floats("eta", s.get("eta", "1"))
    time_model = None
    if any(k in s for k in ("tau1", "tau2", "taum")):
        try:
            time_model = TimeModel(
                float(s.get("tau1", 1)), float(s.get("tau2", 1)), float(s.get("taum", 1))
            )
        except ValueError as exc:
            raise ConfigError("tau", str(exc)) from None
    purify = None
    if "rounds" in s:
        rounds = _ints("rounds", s["rounds"])
        try:
            purify = PurifyConfig(rounds=rounds[0], noisy_ops=_bool("noisy_ops", s.get("noisy_ops", "false")))
        except (ValueError, IndexError) as exc:
            raise ConfigError("rounds", str(exc)) from None
    try:
        seed = int(s.get("seed", "0"))
        workers = int(s.get("workers", "1"))
    except ValueError as exc:
        raise ConfigError("seed", str(exc)) from None
    return SweepSpec(
        lengths=_ints("lengths", s.get("lengths", default_lengths)),
        p_values=p_values,
        eta_values=eta_values,
        gamma_values=_floats("gamma", s.get("gamma", "0")),
        error_model=model,
        purify=purify,
        time_model=time_model,
        seed=seed,
        workers=workers,
    )


def monte_carlo_spot_check(seed: int, shots: int = 2000) -> tuple[bool, str]:
    """Sampled trajectories at l=4 must land within 5 standard errors of the exact fidelity."""
    spec = BusSpec(4, NoiseModel(p=0.99, eta=0.9))
    exact = fidelity_with_bell(simulate_bus_exact(spec))
    sampled = fidelity_with_bell(sample_bus_trajectories(spec, shots, seed))
    # per-shot fidelity is bounded in [0, 1], so sd <= 1/2
    err = 0.5 / shots**0.5
    ok = abs(sampled - exact) <= 5 * err
    return ok, f"monte carlo (seed {seed}, {shots} shots, l=4): {sampled:.4f} vs exact {exact:.4f}"


def cmd_verify(args: argparse.Namespace) -> int:
    results = acceptance.run_all()
    width = max(len(r.name) for r in results)
    print(f"{'check':<{width}}  status  measured    tolerance")
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status:<6}  {r.measured:<10.3e}  {r.tolerance:.1e}")
        if r.detail:
            print(f"{'':<{width}}    {r.detail}")
    f_ref = results[0].extra["fidelity"]
    print(f"\nl=25 reference point: {f_ref:.3f} (published as 0.74, rounded from {f_ref:.4f})")
    failed = [r.name for r in results if not r.passed]
    total = len(results)
    if args.seed is not None:
        try:
            seed = int(args.seed)
        except ValueError:
            raise ConfigError("seed", f"expected an integer, got {args.seed!r}") from None
        ok, line = monte_carlo_spot_check(seed)
        total += 1
        print(line)
        if not ok:
            failed.append("monte carlo spot check")
    print(f"{total - len(failed)}/{total} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    settings = _settings(args)
    spec = build_spec(settings)
    out = settings.get("out") or "sweep.csv"
    csv_path, json_path = run_sweep(spec, out)
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    settings = _settings(args)
    spec = build_spec(settings, default_lengths="2..6")
    out = settings.get("out") or "compare.csv"
    rows, csv_path, json_path = run_compare_baselines(spec, out)
    for r in rows:
        mark = "" if r.chain_below_bound else "  <-- chain not below p^(2l)"
        print(
            f"l={r.l:<3} p={r.p:<6} F_bus={r.f_resource:.5f} F_chain={r.f_chain:.5f} "
            f"bound={r.chain_bound:.5f} t_entswap={r.t_entswap:g} t_swap={r.t_swap:g}{mark}"
        )
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK if all(r.chain_below_bound for r in rows) else EXIT_FAIL


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _pair_for(l: int, noise: NoiseModel, model: ErrorModel) -> BellDiagonal:
    if l % 2 == 0:
        return bus_fast_path(l, noise, model)
    return closed_form_state(l, noise.p, noise.eta, Exponents.PRINTED)


def cmd_purify(args: argparse.Namespace) -> int:
    settings = {"p": "0.995", "eta": "0.99", **_settings(args)}
    spec = build_spec(settings, default_lengths="25")
    l, p, eta = spec.lengths[0], spec.p_values[0], spec.eta_values[0]
    noise = NoiseModel(p=p, eta=eta)
    rounds = spec.purify.rounds if spec.purify else 6
    noisy = spec.purify.noisy_ops if spec.purify else True
    pair = _pair_for(l, noise, spec.error_model)
    outcome = purify_to_target(pair, PurifyConfig(rounds=rounds, noisy_ops=noisy, noise=noise, error_model=spec.error_model), 1.0)
    payload = {
        "l": l,
        "p": p,
        "eta": eta,
        "input_fidelity": pair.a,
        "final_state": outcome.state.as_array().tolist(),
        "final_fidelity": outcome.fidelity,
        "success_prob_per_round": list(outcome.success_prob_per_round),
        "pairs_consumed": outcome.pairs_consumed,
        "expected_pairs": outcome.expected_pairs,
    }
    if l == 25:
        payload["variants"] = {k: v.fidelity for k, v in reference_point_variants(l, p, eta, rounds).items()}
    _emit(payload, settings.get("out"))
    return EXIT_OK


def cmd_gate(args: argparse.Namespace) -> int:
    settings = _settings(args)
    spec = build_spec(settings, default_lengths="2")
    l, p, eta = spec.lengths[0], spec.p_values[0], spec.eta_values[0]
    noise = NoiseModel(p=p, eta=eta)
    pair = _pair_for(l, noise, spec.error_model).normalized()
    if spec.purify:
        config = PurifyConfig(rounds=spec.purify.rounds, noisy_ops=spec.purify.noisy_ops, noise=noise)
        pair = purify_to_target(pair, config, 1.0).state
    payload = {
        "l": l,
        "p": p,
        "eta": eta,
        "resource": pair.as_array().tolist(),
        "f_gate_closed": gate_fidelity_closed_form(pair, p, eta),
        "f_gate_simulated": simulated_gate_fidelity(GateJob(pair, noise)),
    }
    _emit(payload, settings.get("out"))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file; flags override it")
    common.add_argument("--out", help="output path (CSV for sweep/compare, JSON otherwise)")
    common.add_argument("--lengths", help="comma list of bus lengths, ranges as lo..hi")
    common.add_argument("--p", help="comma list of two-qubit gate success probabilities")
    common.add_argument("--eta", help="comma list of detector efficiencies")
    common.add_argument("--gamma", help="comma list of leakage rates")
    common.add_argument("--model", choices=[m.value for m in ErrorModel])
    common.add_argument("--rounds", help="purification rounds")
    common.add_argument("--noisy-ops", dest="noisy_ops", action="store_const", const="true")
    common.add_argument("--seed", help="64-bit seed for Monte Carlo spot checks")
    common.add_argument("--tau1", help="one-qubit gate time")
    common.add_argument("--tau2", help="two-qubit gate time")
    common.add_argument("--taum", help="measurement time")
    common.add_argument("--workers", help="worker processes for sweeps")

    parser = argparse.ArgumentParser(prog="qbus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_text in (
        ("verify", cmd_verify, "run the acceptance checks"),
        ("sweep", cmd_sweep, "fidelity sweep to CSV + JSON"),
        ("compare", cmd_compare, "bus swapping vs SWAP chain"),
        ("purify", cmd_purify, "purify a bus pair"),
        ("gate", cmd_gate, "nonlocal gate fidelity over a bus pair"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
