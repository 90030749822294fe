import json

import pytest

from qbus import acceptance, bus
from qbus.bus import TimeModel
from qbus.cli import main, read_config
from qbus.noise import ErrorModel
from qbus.purify import PurifyConfig
from qbus.report import (
    ROW_FIELDS,
    ConfigError,
    ReportError,
    ReportRow,
    SweepSpec,
    _check_row,
    evaluate_row,
    parse_report_csv,
    run_compare_baselines,
    run_sweep,
    rows_to_csv,
    sweep_rows,
)


def small_spec(**kw):
    base = dict(
        lengths=(2, 4, 25),
        p_values=(0.995,),
        eta_values=(0.99, 1.0),
        purify=PurifyConfig(rounds=6, noisy_ops=True),
        time_model=TimeModel(),
    )
    base.update(kw)
    return SweepSpec(**base)


def test_csv_round_trip(tmp_path):
    spec = small_spec()
    csv_path, json_path = run_sweep(spec, tmp_path / "out.csv")
    text = csv_path.read_text()
    assert text.splitlines()[0] == ",".join(ROW_FIELDS)
    assert parse_report_csv(text) == sweep_rows(spec)
    payload = json.loads(json_path.read_text())
    assert payload["spec"]["lengths"] == [2, 4, 25]
    assert len(payload["rows"]) == 6


def test_sweep_is_deterministic(tmp_path):
    spec = small_spec(seed=123)
    a, _ = run_sweep(spec, tmp_path / "a.csv")
    b, _ = run_sweep(spec, tmp_path / "b.csv")
    assert a.read_text() == b.read_text()


def test_parallel_sweep_keeps_order():
    spec = small_spec(lengths=(8, 2, 6, 4))
    parallel = sweep_rows(SweepSpec(**{**spec.__dict__, "workers": 2}))
    assert parallel == sweep_rows(spec)
    assert [r.l for r in parallel][::2] == [8, 2, 6, 4]


def test_reference_row():
    row = evaluate_row(small_spec(), 25, 0.995, 0.99, 0.0)
    assert row.f_closed_paper == pytest.approx(0.734, abs=1e-3)
    assert row.f_closed_oracle_convention != row.f_closed_paper
    assert row.f_exact is None
    assert row.f_after_purify == pytest.approx(0.985, abs=0.01)
    assert (row.rounds_used, row.pairs_consumed) == (6, 64)
    assert (row.t_entswap, row.t_swap) == (7, 50)


def test_short_bus_row():
    row = evaluate_row(small_spec(purify=None), 2, 1.0, 1.0, 0.0)
    assert row.f_exact == pytest.approx(1)
    assert row.f_gate == pytest.approx(1)
    assert row.f_after_purify is None


def test_leakage_row():
    spec = small_spec(error_model=ErrorModel.CPE_LEAKAGE, purify=None)
    row = evaluate_row(spec, 4, 0.999, 0.999, 1e-3)
    assert row.error_model == "cpe-leak"
    assert 0.9 < row.f_exact < 1


def test_out_of_range_fidelity_aborts():
    with pytest.raises(ReportError):
        _check_row(ReportRow(2, 1.0, 1.0, 0.0, "dep", f_exact=1.5))


@pytest.mark.parametrize(
    "kwargs,field",
    [
        (dict(lengths=(3,)), None),
        (dict(lengths=(1,)), "lengths"),
        (dict(p_values=(1.2,)), "p"),
        (dict(eta_values=(0.3,)), "eta"),
        (dict(gamma_values=(-1.0,)), "gamma"),
        (dict(seed=-1), "seed"),
        (dict(error_model="bogus"), "model"),
        (dict(lengths=()), "lengths"),
    ],
)
def test_spec_validation(kwargs, field):
    if field is None:
        small_spec(**kwargs)
        return
    with pytest.raises(ConfigError) as info:
        small_spec(**kwargs)
    assert info.value.field == field


def test_compare_report(tmp_path):
    spec = SweepSpec(lengths=(2, 3, 4), p_values=(0.99,))
    rows, csv_path, json_path = run_compare_baselines(spec, tmp_path / "cmp.csv")
    assert [r.f_resource_source for r in rows] == ["exact", "closed-printed", "exact"]
    assert all(r.t_entswap == 7 for r in rows)
    assert json.loads(json_path.read_text())["crossover_length"] == 4
    assert csv_path.read_text().count("\n") == 4


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nlengths = 2, 4\np = 0.99\neta=0.99\nmodel = cpe\n")
    assert read_config(cfg)["lengths"] == "2, 4"
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", str(cfg), "--p", "0.9", "--out", str(out)]) == 0
    rows = parse_report_csv(out.read_text())
    assert [r.l for r in rows] == [2, 4]
    assert {r.p for r in rows} == {0.9}
    assert {r.error_model for r in rows} == {"cpe"}


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--p", "1.5"],
        ["sweep", "--eta", "abc"],
        ["sweep", "--lengths", "1"],
        ["sweep", "--model", "nope"],
        ["sweep", "--tau1", "-1"],
        ["sweep", "--config", "/nonexistent/file.cfg"],
        ["frobnicate"],
    ],
)
def test_config_errors_exit_2(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["sweep", "--config", str(cfg)]) == 2


def test_purify_and_gate_commands(tmp_path):
    out = tmp_path / "purify.json"
    assert main(["purify", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["final_fidelity"] == pytest.approx(0.985, abs=0.01)
    assert set(payload["variants"]) == {"exact/noisy", "exact/ideal", "twirled/noisy", "twirled/ideal"}

    out = tmp_path / "gate.json"
    assert main(["gate", "--lengths", "4", "--p", "0.99", "--eta", "0.99", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["f_gate_simulated"] == pytest.approx(payload["f_gate_closed"], abs=1e-9)


def test_compare_flags_chain_bound(tmp_path, capsys):
    code = main(["compare", "--lengths", "2..3", "--p", "0.9", "--out", str(tmp_path / "c.csv")])
    text = capsys.readouterr().out
    # p^(3l) + (1 - p^(3l))/4 exceeds p^(2l) at l=3, p=0.9
    assert code == 1
    assert "not below" in text


def test_verify_reports_failures(capsys):
    code = main(["verify", "--seed", "5"])
    text = capsys.readouterr().out
    assert "l=25 reference point: 0.734" in text
    assert "monte carlo (seed 5" in text
    expected_red = any(not r.passed for r in acceptance.run_all())
    assert code == (1 if expected_red else 0)


def test_verify_catches_exponent_mutation(monkeypatch):
    assert acceptance.check_reference_point().passed
    monkeypatch.setattr(bus, "_measurement_exponent", lambda l, exponents: (l - 2) / 2)
    assert not acceptance.check_reference_point().passed


def test_rows_to_csv_nulls():
    text = rows_to_csv([ReportRow(2, 1.0, 1.0, 0.0, "dep")], ROW_FIELDS)
    assert text.splitlines()[1].endswith("null,null")
    assert parse_report_csv(text)[0].f_exact is None
