import json
from importlib.resources import files

import pytest
import yaml

from macc import harness
from macc.cli import main
from macc.errors import ConfigError, UnknownExample
from macc.harness import CSV_COLUMNS, format_rows, load_config, parse_config, reproduce_example, run_sweep

from conftest import GOLDEN

CONFIGS = files("macc") / "configs"

BASE = {
    "params": {"c": 4, "r": 2, "N": 9, "K": 9, "M": 3, "F": 256},
    "profile": {"vector": [2, 2, 2, 1, 1, 1]},
    "demand": "distinct",
    "trials": 2,
    "seed": 0,
}


def _config(**changes):
    raw = json.loads(json.dumps(BASE))
    for key, value in changes.items():
        if value is None:
            raw.pop(key, None)
        else:
            raw[key] = value
    return raw


def _write(tmp_path, raw, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return str(path)


@pytest.mark.parametrize("name", harness.EXAMPLES)
def test_reproduce_matches_golden(name):
    assert reproduce_example(name) == (GOLDEN / f"{name}.txt").read_text()


def test_unknown_example():
    with pytest.raises(UnknownExample):
        reproduce_example("example9")


@pytest.mark.parametrize(
    "change,path",
    [
        ({"profile": None}, "profile"),
        ({"params": {"c": 4, "r": 2, "N": 9, "M": 10}}, "params.M"),
        ({"params": {"c": 4, "r": 5, "N": 9}}, "params.r"),
        ({"params": {"N": 9}}, "params.c"),
        ({"trials": -1}, "trials"),
        ({"demand": [1, 2]}, "demand"),
        ({"demand": "all"}, "demand"),
        ({"profile": {"vector": [1, 2]}}, "profile"),
        ({"profile": [{"subset": [1, 2, 3], "count": 1}]}, "profile"),
        ({"profile": [{"subset": [1, 2]}]}, "profile[0]"),
        ({"profile": "zigzag"}, "profile"),
        ({"sweep": {"var": "N", "values": [1]}}, "sweep.var"),
        ({"sweep": {"var": "M", "values": [1, 12]}}, "sweep.values[1]"),
        ({"sweep": {"var": "M"}}, "sweep"),
        ({"colour": "red"}, "colour"),
    ],
)
def test_config_errors_name_the_field(change, path):
    raw = _config(**change)
    with pytest.raises(ConfigError) as err:
        parse_config(raw)
    assert err.value.path == path


def test_K_mismatch_reported():
    raw = _config()
    raw["params"]["K"] = 8
    with pytest.raises(ConfigError) as err:
        parse_config(raw)
    assert err.value.path == "params.K"


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("params: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.iterdir() if p.name.endswith(".yaml")))
def test_bundled_configs_parse(name):
    config = load_config(CONFIGS / name)
    assert config.c >= 1


def test_example_sweep_curves():
    config = parse_config(_config(sweep={"var": "M", "values": list(range(10))}, trials=0))
    rows = run_sweep(config)
    rate = [float(r["rate_pu"]) for r in rows]
    lb = [float(r["lb_pu"]) for r in rows]
    assert all(a >= b - 1e-12 for a, b in zip(rate, lb))
    assert all(x > y for x, y in zip(rate, rate[1:]))
    assert all(x > y for x, y in zip(lb, lb[1:]))
    assert rate[0] == lb[0] == 1 and rate[-1] == lb[-1] == 0
    assert all(rate[k] > lb[k] for k in range(1, 9))
    g = 1 / 3
    expected = (2 * g**2 * (1 - g) ** 2 + 7 * g * (1 - g) ** 3 + 9 * (1 - g) ** 4) / 9
    assert rate[3] == pytest.approx(expected, rel=1e-12)
    assert all(r["decode_ok"] == "" and r["closed_form_pu"] == "" for r in rows)


def test_large_profile_sweep():
    rows = run_sweep(load_config(CONFIGS / "large_profile.yaml"))
    assert len(rows) == 31
    assert all(float(r["rate_pu"]) >= float(r["lb_pu"]) - 1e-12 for r in rows)


@pytest.mark.parametrize("M", ["3", "9/4"])
def test_access_degree_sweep(M):
    raw = yaml.safe_load((CONFIGS / "r_sweep_third.yaml").read_text())
    raw["params"]["M"] = M
    raw["trials"] = 1
    raw["params"]["F"] = 2048
    rows = run_sweep(parse_config(raw))
    for row in rows:
        r = int(float(row["value"]))
        rate, lb = float(row["rate_pu"]), float(row["lb_pu"])
        if r == 2:
            assert rate > lb
            assert row["closed_form_pu"] == ""
        else:
            assert rate == lb == float(row["closed_form_pu"])
        assert row["decode_ok"] == "true"


def test_sweep_is_reproducible():
    config = parse_config(_config(sweep={"var": "M", "values": [1, 4]}, trials=3))
    first = format_rows(run_sweep(config), "csv", CSV_COLUMNS)
    assert first == format_rows(run_sweep(config), "csv", CSV_COLUMNS)
    assert first == format_rows(run_sweep(config, jobs=2), "csv", CSV_COLUMNS)
    assert first.splitlines()[0] == ",".join(CSV_COLUMNS)


def test_trials_use_consecutive_seeds():
    config = parse_config(_config(seed=10, trials=2))
    params, table, demands = config.point()
    a = harness.simulate_trial(params, table, demands, 10)
    b = harness.simulate_trial(params, table, demands, 11)
    mean = (a["rate_pu"] + b["rate_pu"]) / 2
    assert float(run_sweep(config)[0]["emp_rate_pu_mean"]) == pytest.approx(mean, rel=1e-15)
    assert a["decode_ok"] and a["payload_bits"] >= a["alpha_bits"]


def test_json_output():
    config = parse_config(_config(trials=1))
    rows = json.loads(format_rows(run_sweep(config), "json", CSV_COLUMNS))
    assert list(rows[0]) == list(CSV_COLUMNS) and rows[0]["decode_ok"] == "true"


def test_cli_commands(tmp_path, capsys):
    cfg = _write(tmp_path, _config())
    assert main(["rate", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "rate_pu" in out and "[(0,4):9 (1,3):7 (2,2):2]/9" in out
    assert main(["lower-bound", "--config", cfg, "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)[0]["polynomial"] == "[(0,4):9 (1,3):6 (2,2):2]/9"
    assert main(["transmissions", "--config", cfg, "--symbolic"]) == 0
    assert capsys.readouterr().out == (GOLDEN / "example2_transmissions.txt").read_text()
    assert main(["transmissions", "--config", cfg]) == 0
    assert capsys.readouterr().out.startswith("# transmissions c=4 r=2 bits")
    out_csv = tmp_path / "verify.csv"
    assert main(["verify", "--config", cfg, "--trials", "2", "--out", str(out_csv)]) == 0
    assert out_csv.read_text().count("true") == 2


def test_cli_sweep_and_reproduce(tmp_path, capsys):
    cfg = _write(tmp_path, _config(sweep={"var": "M", "values": [0, 3, 9]}, trials=1))
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--seed", "4"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 4
    assert main(["reproduce", "all", "--out", str(tmp_path / "ex")]) == 0
    for name in harness.EXAMPLES:
        assert (tmp_path / "ex" / f"{name}.txt").read_text() == (GOLDEN / f"{name}.txt").read_text()


def test_cli_exit_codes(tmp_path, capsys, monkeypatch):
    bad = _write(tmp_path, _config(trials=-3))
    assert main(["rate", "--config", bad]) == 2
    assert "trials" in capsys.readouterr().err
    assert main(["rate"]) == 2
    assert main(["sweep", "--config", _write(tmp_path, _config(), "plain.yaml")]) == 2

    def broken(params, table, demands, seed):
        return {"seed": seed, "rate_pu": 0.0, "payload_bits": 0, "decode_ok": False, "failed_users": [(1, 1)]}

    monkeypatch.setattr("macc.cli.simulate_trial", broken)
    assert main(["verify", "--config", _write(tmp_path, _config())]) == 1
    assert "decoding failed" in capsys.readouterr().err
