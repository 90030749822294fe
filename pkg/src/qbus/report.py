"""Parameter sweeps and baseline comparisons written as CSV + JSON."""
from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from . import qmat
from .bus import (
    BellDiagonal,
    BusSpec,
    Exponents,
    TimeModel,
    bus_fast_path,
    crossover_length,
    closed_form_state,
    fidelity_closed_form,
    protocol_times,
    simulate_bus_exact,
    swap_chain_baseline,
)
from .gate import GateJob, simulated_gate_fidelity
from .noise import ErrorModel, NoiseModel
from .purify import PurifyConfig, purify_to_target
from .qmat import fidelity_with_bell

EXACT_MAX_LENGTH = 10


class ConfigError(ValueError):
    """Invalid sweep settings; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ReportError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    lengths: tuple[int, ...]
    p_values: tuple[float, ...] = (1.0,)
    eta_values: tuple[float, ...] = (1.0,)
    gamma_values: tuple[float, ...] = (0.0,)
    error_model: ErrorModel = ErrorModel.DEP
    purify: PurifyConfig | None = None
    time_model: TimeModel | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        for name in ("lengths", "p_values", "eta_values", "gamma_values"):
            values = tuple(getattr(self, name))
            if not values:
                raise ConfigError(name, "must not be empty")
            object.__setattr__(self, name, values)
        for l in self.lengths:
            if int(l) != l or l < 2:
                raise ConfigError("lengths", f"bus length must be an integer >= 2, got {l}")
        for p in self.p_values:
            if not 0 <= p <= 1:
                raise ConfigError("p", f"must be in [0, 1], got {p}")
        for eta in self.eta_values:
            if not 0.5 <= eta <= 1:
                raise ConfigError("eta", f"must be in [1/2, 1], got {eta}")
        for gamma in self.gamma_values:
            if not gamma >= 0:
                raise ConfigError("gamma", f"must be >= 0, got {gamma}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be a 64-bit unsigned integer, got {self.seed}")
        try:
            object.__setattr__(self, "error_model", ErrorModel(self.error_model))
        except ValueError:
            raise ConfigError("model", f"unknown error model {self.error_model!r}") from None

    def tuples(self) -> list[tuple[int, float, float, float]]:
        return list(itertools.product(self.lengths, self.p_values, self.eta_values, self.gamma_values))

    def to_json(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["error_model"] = self.error_model.value
        if self.purify is not None:
            out["purify"]["error_model"] = self.purify.error_model.value
        return out


@dataclass(frozen=True)
class ReportRow:
    l: int
    p: float
    eta: float
    gamma: float
    error_model: str
    f_closed_paper: float | None = None
    f_closed_oracle_convention: float | None = None
    f_exact: float | None = None
    f_after_purify: float | None = None
    rounds_used: int | None = None
    pairs_consumed: int | None = None
    t_entswap: float | None = None
    t_swap: float | None = None
    f_gate: float | None = None


ROW_FIELDS = [f.name for f in dataclasses.fields(ReportRow)]
FIDELITY_FIELDS = [name for name in ROW_FIELDS if name.startswith("f_")]
_INT_FIELDS = {"l", "rounds_used", "pairs_consumed"}
NULL = "null"


def _check_row(row: ReportRow) -> ReportRow:
    for name in FIDELITY_FIELDS:
        value = getattr(row, name)
        if value is None:
            continue
        if not (-1e-12 <= value <= 1 + 1e-12) or math.isnan(value):
            raise ReportError(f"{name}={value!r} outside [0, 1] for l={row.l}, p={row.p}, eta={row.eta}, gamma={row.gamma}")
    return row


def _source_pair(l: int, noise: NoiseModel, model: ErrorModel) -> BellDiagonal:
    if l % 2 == 0:
        return bus_fast_path(l, noise, model)
    # odd lengths only exist in the printed closed form
    return closed_form_state(l, noise.p, noise.eta, Exponents.PRINTED)


def evaluate_row(spec: SweepSpec, l: int, p: float, eta: float, gamma: float) -> ReportRow:
    noise = NoiseModel(p=p, eta=eta, gamma=gamma)
    model = spec.error_model
    values: dict[str, Any] = {
        "f_closed_paper": fidelity_closed_form(l, p, eta, gamma, Exponents.PRINTED),
        "f_closed_oracle_convention": fidelity_closed_form(l, p, eta, gamma, Exponents.ORACLE),
    }
    if l % 2 == 0 and l <= min(EXACT_MAX_LENGTH, qmat.MAX_QUBITS):
        values["f_exact"] = fidelity_with_bell(simulate_bus_exact(BusSpec(l, noise, model)))
    resource = None
    if model is not ErrorModel.CPE_LEAKAGE or l % 2 == 0:
        resource = _source_pair(l, noise, model).normalized()
    if spec.purify is not None and resource is not None:
        config = dataclasses.replace(spec.purify, noise=noise, error_model=model)
        outcome = purify_to_target(resource, config, 1.0)
        resource = outcome.state
        values.update(
            f_after_purify=outcome.fidelity,
            rounds_used=outcome.rounds_used,
            pairs_consumed=outcome.pairs_consumed,
        )
    if spec.time_model is not None:
        values["t_entswap"], values["t_swap"] = protocol_times(l, spec.time_model)
    if resource is not None:
        values["f_gate"] = simulated_gate_fidelity(GateJob(resource, noise))
    return _check_row(ReportRow(l, p, eta, gamma, model.value, **values))


def _evaluate(args):
    return evaluate_row(*args)


def sweep_rows(spec: SweepSpec) -> list[ReportRow]:
    jobs = [(spec, *t) for t in spec.tuples()]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(_evaluate, jobs))
    return [_evaluate(job) for job in jobs]


def _fmt(value: Any) -> str:
    if value is None:
        return NULL
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: Sequence[Any], fields: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in fields])
    return buf.getvalue()


def _parse(name: str, text: str) -> Any:
    if text == NULL:
        return None
    if name in _INT_FIELDS:
        return int(text)
    if name == "error_model":
        return text
    return float(text)


def parse_report_csv(text: str) -> list[ReportRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != ROW_FIELDS:
        raise ReportError(f"unexpected header {header}")
    return [ReportRow(**{k: _parse(k, v) for k, v in zip(header, line)}) for line in reader]


def _write(out_path: Path, csv_text: str, payload: dict) -> tuple[Path, Path]:
    out_path = Path(out_path)
    json_path = out_path.with_suffix(".json")
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(csv_text)
        json_path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")
    except OSError as exc:
        raise ConfigError("out", f"cannot write {out_path}: {exc}") from exc
    return out_path, json_path


def run_sweep(spec: SweepSpec, out_path: str | Path) -> tuple[Path, Path]:
    """Write one row per parameter tuple to ``out_path`` (CSV) plus a JSON twin."""
    rows = sweep_rows(spec)
    payload = {
        "spec": spec.to_json(),
        # f_exact under leakage is the overlap of the trace-reduced state, not renormalized
        "leakage_normalization": "unnormalized",
        "rows": [dataclasses.asdict(r) for r in rows],
    }
    return _write(Path(out_path), rows_to_csv(rows, ROW_FIELDS), payload)


@dataclass(frozen=True)
class CompareRow:
    l: int
    p: float
    f_resource: float
    f_resource_source: str
    f_chain: float
    chain_bound: float
    chain_below_bound: bool
    fidelity_ratio: float
    t_entswap: float
    t_swap: float


COMPARE_FIELDS = [f.name for f in dataclasses.fields(CompareRow)]


def compare_rows(spec: SweepSpec) -> list[CompareRow]:
    tm = spec.time_model or TimeModel()
    eta = spec.eta_values[0]
    rows = []
    for l, p in itertools.product(spec.lengths, spec.p_values):
        noise = NoiseModel(p=p, eta=eta)
        if l % 2 == 0 and l <= EXACT_MAX_LENGTH:
            f_res = fidelity_with_bell(simulate_bus_exact(BusSpec(l, noise, spec.error_model)))
            source = "exact"
        else:
            f_res = fidelity_closed_form(l, p, eta, 0.0, Exponents.PRINTED)
            source = "closed-printed"
        chain = swap_chain_baseline(l, p)
        t_es, t_sw = protocol_times(l, tm)
        rows.append(CompareRow(l, p, f_res, source, chain.fidelity, chain.bound, chain.below_bound, chain.fidelity / f_res, t_es, t_sw))
    return rows


def run_compare_baselines(spec: SweepSpec, out_path: str | Path) -> tuple[list[CompareRow], Path, Path]:
    rows = compare_rows(spec)
    tm = spec.time_model or TimeModel()
    payload = {
        "spec": spec.to_json(),
        "crossover_length": crossover_length(tm),
        "rows": [dataclasses.asdict(r) for r in rows],
    }
    csv_path, json_path = _write(Path(out_path), rows_to_csv(rows, COMPARE_FIELDS), payload)
    return rows, csv_path, json_path
