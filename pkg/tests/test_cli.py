import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eitcool import cli, io, rates
from eitcool.params import CouplingParams, DriveParams, ResonatorParams


def run(argv, tmp_path):
    return cli.parse_and_dispatch(list(argv) + ["--out", str(tmp_path)])


def outputs(tmp_path, sub):
    csv_path = next(tmp_path.glob(f"{sub}-*.csv"))
    return csv_path, csv_path.with_suffix(".json")


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def test_rates_prints_oracle_values(tmp_path, capsys):
    rc = run(["rates", "--set", "delta=-3", "--set", "nu=0.25", "--set", "eta_ld=0.0566"],
             tmp_path)
    assert rc == 0
    om = math.sqrt(0.25 * 3.25 / 2)
    rr = rates.rate_result(DriveParams.resonant(om, om, -3.0),
                           CouplingParams.from_eta_ld(0.0566), ResonatorParams(n_i=16.0))
    out = capsys.readouterr().out
    assert f"A+ = {rr.a_plus:.6g}" in out and f"A- = {rr.a_minus:.6g}" in out
    assert f"W = {rr.w:.6g}" in out and f"n_ss = {rr.n_ss:.6g}" in out
    header, rows = read_csv(outputs(tmp_path, "rates")[0])
    assert float(rows[0]["a_minus"]) == pytest.approx(rr.a_minus, rel=1e-11)


def test_spectrum_minimum_at_carrier(tmp_path):
    assert run(["spectrum"], tmp_path) == 0
    header, rows = read_csv(outputs(tmp_path, "spectrum")[0])
    assert header == ["delta_g", "absorption"]
    x = np.array([float(r["delta_g"]) for r in rows])
    y = np.array([float(r["absorption"]) for r in rows])
    assert x[np.argmin(y)] == -3.0
    assert y.min() <= 1e-10 * y.max()


def test_missing_config_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.ini"
    assert run(["rates", "--config", str(missing)], tmp_path) == 2
    assert str(missing) in capsys.readouterr().err


def test_unknown_key(tmp_path, capsys):
    assert run(["rates", "--set", "detuning=-3"], tmp_path) == 2
    assert "'detuning'" in capsys.readouterr().err


def test_bad_value_and_conflicting_units(tmp_path, capsys):
    assert run(["rates", "--set", "nu=fast"], tmp_path) == 2
    assert run(["rates", "--set", "n_i=1", "--set", "temperature=0.02"], tmp_path) == 2
    cfg = tmp_path / "c.json"
    cfg.write_text('{"units": "si"}')
    assert run(["rates", "--config", str(cfg), "--units", "gamma"], tmp_path) == 2
    assert "conflicting units" in capsys.readouterr().err


def test_config_formats(tmp_path):
    js = tmp_path / "a.json"
    js.write_text(json.dumps({"drive": {"delta": -4.0}, "n_i": 2.0}))
    ini = tmp_path / "b.ini"
    ini.write_text("[drive]\ndelta = -4.0\n[resonator]\nn_i = 2.0\n")
    flat = tmp_path / "c.cfg"
    flat.write_text("delta = -4.0\nn_i = 2.0\n")
    rows = []
    for i, path in enumerate((js, ini, flat)):
        out = tmp_path / str(i)
        assert cli.parse_and_dispatch(["rates", "--config", str(path), "--out", str(out)]) == 0
        rows.append(outputs(out, "rates")[0].read_text())
    assert rows[0] == rows[1] == rows[2]


def test_byte_identical_outputs(tmp_path):
    args = ["cool", "--engine", "traj", "--set", "n_i=0.5", "--set", "n_max=4",
            "--set", "eta_ld=0.2", "--set", "t_final=20", "--set", "n_points=3",
            "--set", "n_traj=100", "--seed", "5"]
    assert run(args, tmp_path / "a") == 0
    assert run(args, tmp_path / "b") == 0
    for sub in ("a", "b"):
        assert len(list((tmp_path / sub).glob("cool-*.csv"))) == 1
    ca, ja = outputs(tmp_path / "a", "cool")
    cb, jb = outputs(tmp_path / "b", "cool")
    assert ca.name == cb.name
    assert ca.read_bytes() == cb.read_bytes()
    ja_text = ja.read_text().replace(str(tmp_path / "a"), "OUT")
    jb_text = jb.read_text().replace(str(tmp_path / "b"), "OUT")
    assert ja_text == jb_text


def test_seed_changes_filename(tmp_path):
    assert run(["rates", "--seed", "1"], tmp_path) == 0
    assert run(["rates", "--seed", "2"], tmp_path) == 0
    assert len(list(tmp_path.glob("rates-*.csv"))) == 2


def test_json_round_trip(tmp_path):
    cfg = cli.RunConfig("rates", {"delta": "-2.5", "n_i": "3"}, None, str(tmp_path), 9,
                        "analytic", "si")
    _, json_path = cli.run(cfg)
    assert cli.read_summary(json_path) == cfg
    meta = json.loads(json_path.read_text())
    assert meta["si"]["gamma_si_rad_per_s"] == pytest.approx(2 * math.pi * 1e8)
    assert meta["parameters"]["delta"] == -2.5


def test_sweep_row_count(tmp_path):
    rc = run(["sweep", "--engine", "analytic", "--set", "grid=0.1,1,4,16"], tmp_path)
    assert rc == 0
    header, rows = read_csv(outputs(tmp_path, "sweep")[0])
    assert header == list(cli.ex.ComparisonReport.COLUMNS)
    assert len(rows) == 4
    both = tmp_path / "both"
    assert run(["sweep", "--set", "grid=0.1,1"], both) == 0
    assert len(read_csv(outputs(both, "sweep")[0])[1]) == 4
    meta = json.loads(outputs(both, "sweep")[1].read_text())
    assert all(b["pass"] for b in meta["summary"]["bands"])


def test_detuning_sweep(tmp_path):
    rc = run(["sweep", "--engine", "analytic", "--set", "axis=detuning",
              "--set", "grid=-1,-2,-4,-8"], tmp_path)
    assert rc == 0
    meta = json.loads(outputs(tmp_path, "sweep")[1].read_text())
    assert meta["summary"]["analytic_decreasing_in_|delta|"]


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.parse_and_dispatch(["rates", "--out", str(blocker / "sub")]) == 3


def test_non_finite_aborts_before_writing(tmp_path, monkeypatch):
    monkeypatch.setitem(cli.COMMANDS, "rates",
                        lambda cfg, p: (("x",), [[float("nan")]], {}))
    assert run(["rates"], tmp_path) == 3
    assert not list(tmp_path.glob("*"))


def test_numerical_failure_exit_code(tmp_path):
    # drives off with Gamma = 0: no unique steady state
    rc = run(["steady", "--set", "omega_g=0", "--set", "omega_e=0", "--set", "n_max=3",
              "--set", "n_i=0.5"], tmp_path)
    assert rc == 3


def test_other_subcommands(tmp_path):
    assert run(["qubit", "--set", "f_min=0.5005", "--set", "f_max=0.502",
                "--set", "f_points=2"], tmp_path) == 0
    header, rows = read_csv(outputs(tmp_path, "qubit")[0])
    assert len(rows) == 2 and float(rows[0]["omega_eg_ghz"]) == pytest.approx(4.89, rel=0.01)
    assert run(["cool", "--set", "n_i=2"], tmp_path) == 0
    assert run(["steady", "--set", "n_i=0.1", "--set", "big_gamma=0.02"], tmp_path) == 0
    assert run(["steady", "--engine", "analytic"], tmp_path) == 0
    assert run(["twomode", "--engine", "analytic"], tmp_path) == 0
    assert run(["twomode", "--engine", "me"], tmp_path) == 3
    assert run(["converge", "--set", "n_i=0.1", "--set", "n_max_grid=8,12,16"], tmp_path) == 0


def test_help_exits_cleanly(capsys):
    assert cli.parse_and_dispatch(["--help"]) == 0
    assert cli.parse_and_dispatch(["bogus"]) == 2


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips_to_twelve_digits(x):
    back = float(io.fmt(x))
    assert back == pytest.approx(x, rel=1e-11, abs=0.0) or back == x


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20))
def test_csv_text_deterministic(values):
    rows = [[v, i] for i, v in enumerate(values)]
    assert io.csv_text(("v", "i"), rows) == io.csv_text(("v", "i"), rows)
    assert io.csv_text(("v", "i"), rows).count("\n") == len(values) + 1


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.sampled_from(sorted(cli.SCHEMA)), st.text(max_size=5),
                       max_size=4), st.integers(0, 2**31))
def test_run_config_round_trip(overrides, seed):
    cfg = cli.RunConfig("rates", overrides, None, "out", seed, None, None)
    assert cli.RunConfig.from_dict(json.loads(io.json_text(cfg.to_dict()))) == cfg
