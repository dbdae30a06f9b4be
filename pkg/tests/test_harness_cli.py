import copy
import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from arealaw import cli, harness
from arealaw.fcs import aklt_generator, channel_to_json

SHIPPED = sorted(p.name for p in (harness.Path(__file__).resolve().parents[1] / "configs").glob("*.json"))

AREA = {"schema_version": 1, "experiment": "classical-area", "models": ["ising-ring-8"], "beta_grid": [0.5]}


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


def run_cli(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


# -- config validation ---------------------------------------------------------------------


def test_minimal_config_gets_default_tolerances():
    cfg = harness.validate_config(AREA)
    assert cfg["tolerances"] == harness.DEFAULT_TOLERANCES


@pytest.mark.parametrize(
    "patch",
    [
        {"betagrid": [1]},  # unknown key
        {"schema_version": 2},
        {"experiment": "nope"},
        {"beta_grid": []},
        {"tolerances": {"check": 1e-9, "typo": 1}},
        {"output": {"path": "x", "format": "xml"}},
    ],
    ids=["unknown-key", "version", "experiment", "empty-grid", "tolerance-key", "format"],
)
def test_schema_rejections(patch):
    with pytest.raises(harness.ConfigError):
        harness.validate_config({**AREA, **patch})


def test_missing_required_key():
    cfg = dict(AREA)
    del cfg["beta_grid"]
    with pytest.raises(harness.ConfigError, match="beta_grid"):
        harness.validate_config(cfg)


def test_random_channel_needs_seed():
    cfg = {"schema_version": 1, "experiment": "fcs-decay", "channel": {"preset": "random"},
           "block": {"n_a": 1, "n_b": 1}, "L_grid": [1, 2]}
    with pytest.raises(harness.ConfigError, match="seed"):
        harness.validate_config(cfg)
    harness.validate_config({**cfg, "seed": 3})


def test_bad_fit_window():
    cfg = {"schema_version": 1, "experiment": "fcs-decay", "channel": "aklt",
           "block": {"n_a": 1, "n_b": 1}, "L_grid": [1, 2], "fit_window": [5, 2]}
    with pytest.raises(harness.ConfigError):
        harness.validate_config(cfg)


def test_digest_ignores_execution_keys():
    base = harness.config_digest(AREA)
    assert harness.config_digest({**AREA, "workers": 4, "output": {"path": "x"}}) == base
    assert harness.config_digest({**AREA, "beta_grid": [0.6]}) != base


def test_unknown_preset_is_config_error():
    with pytest.raises(harness.ConfigError):
        harness.run(harness.validate_config({**AREA, "models": ["no-such-model"]}))


# -- seeding and dispatch ------------------------------------------------------------------------


def test_task_streams_reproducible_and_distinct():
    a = harness.task_rng(7, 0).normal(size=4)
    assert np.array_equal(a, harness.task_rng(7, 0).normal(size=4))
    assert not np.array_equal(a, harness.task_rng(7, 1).normal(size=4))
    assert not np.array_equal(a, harness.task_rng(8, 0).normal(size=4))
    assert 0 <= harness.task_seed(7, 3) < 2**63


def _square(x):
    return x * x


def test_ordered_map_keeps_order_with_workers():
    assert harness.ordered_map(_square, range(20), workers=3) == [x * x for x in range(20)]


# -- presets ------------------------------------------------------------------------------------------


def test_catalog_contents():
    cat = harness.list_presets()
    channels = {c["name"]: c for c in cat["channels"]}
    assert channels["aklt"]["bond_dim"] == 2 and channels["aklt"]["phys_dim"] == 3
    assert "ising-ring-8" in {m["name"] for m in cat["models"]}
    assert cat["custom"] == []


def test_empty_custom_directory_gives_builtins_only(tmp_path):
    assert harness.list_presets(tmp_path) == harness.list_presets()


def test_custom_channel_preset_is_usable(tmp_path):
    spec = {"name": "my-aklt", "kind": "channel", "spec": channel_to_json(aklt_generator())}
    (tmp_path / "my.json").write_text(json.dumps(spec))
    assert {"name": "my-aklt", "kind": "channel"} in harness.list_presets(tmp_path)["custom"]
    cfg = {"schema_version": 1, "experiment": "fcs-decay", "channel": "my-aklt",
           "block": {"n_a": 1, "n_b": 1}, "L_grid": [1, 2, 3]}
    rep = harness.run(harness.validate_config(cfg), tmp_path)
    assert rep.passed


def test_malformed_custom_preset(tmp_path):
    (tmp_path / "bad.json").write_text(json.dumps({"name": "x", "kind": "model"}))
    with pytest.raises(harness.ConfigError):
        harness.load_custom_presets(tmp_path)


def test_custom_preset_dir_from_environment(tmp_path, monkeypatch):
    spec = {"name": "env-aklt", "kind": "channel", "spec": channel_to_json(aklt_generator())}
    (tmp_path / "a.json").write_text(json.dumps(spec))
    monkeypatch.setenv(harness.PRESET_DIR_ENV, str(tmp_path))
    assert [c["name"] for c in harness.list_presets()["custom"]] == ["env-aklt"]


# -- reports -----------------------------------------------------------------------------------------


def test_fcs_decay_csv_header(tmp_path):
    cfg = {"schema_version": 1, "experiment": "fcs-decay", "channel": "aklt",
           "block": {"n_a": 2, "n_b": 2}, "L_grid": list(range(0, 6))}
    rep = harness.run(harness.validate_config(cfg))
    paths = harness.emit(rep, tmp_path / "decay", "csv")
    text = paths[0].read_text()
    assert text.splitlines()[0] == "L,trace_distance,mutual_information,bound"
    assert [int(r["L"]) for r in csv.DictReader(io.StringIO(text))] == list(range(6))


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_configs_round_trip_through_schema(name, configs_dir):
    rep = harness.run(harness.validate_config(harness.load_config(configs_dir / name)))
    obj = json.loads(rep.json_text())
    harness.validate_report(obj)
    assert obj["summary"]["fail_count"] == 0
    assert obj["schema_version"] == harness.SCHEMA_VERSION


def test_report_schema_rejects_unknown_fields():
    rep = harness.run(harness.validate_config(AREA))
    obj = json.loads(rep.json_text())
    obj["extra"] = 1
    with pytest.raises(Exception):
        harness.validate_report(obj)


def test_non_finite_values_serialized_as_strings():
    cfg = {"schema_version": 1, "experiment": "singlet-scaling", "profile": {"family": "lorentzian", "parameter": 1},
           "R_grid": [50, 100, 200], "L_grid": [0, 2, 5], "expect": {"area_law": "violated", "xi_m_finite": False}}
    obj = json.loads(harness.run(harness.validate_config(cfg)).json_text())
    assert obj["summary"]["fits"]["xi_m"] == "inf"


# -- CLI ---------------------------------------------------------------------------------------------


def test_cli_pass_exit_code(tmp_path, capsys):
    code, out, err = run_cli(["run", write(tmp_path, AREA)], capsys)
    assert code == 0 and "PASS" in err
    assert json.loads(out)["experiment"] == "classical-area"


def test_cli_failure_exit_code(tmp_path, capsys):
    # a state that never saturates, declared to saturate at L0 = 2
    cfg = {"schema_version": 1, "experiment": "saturation", "models": ["tfim-ring-8"], "beta_grid": [0.5],
           "expect": {"saturation": 2}}
    code, _, err = run_cli(["run", write(tmp_path, cfg)], capsys)
    assert code == 1 and "FAIL" in err


@pytest.mark.parametrize(
    "payload",
    [{**AREA, "surprise": True}, "{not json", [1, 2], {**AREA, "models": ["missing-model"]}],
    ids=["unknown-key", "bad-json", "not-object", "unknown-preset"],
)
def test_cli_config_error_exit_code(tmp_path, capsys, payload):
    code, _, err = run_cli(["run", write(tmp_path, payload)], capsys)
    assert code == 2 and "config error" in err


def test_cli_missing_file(tmp_path, capsys):
    assert run_cli(["run", str(tmp_path / "absent.json")], capsys)[0] == 2


def test_cli_cap_override(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, AREA)
    monkeypatch.setenv("AREALAW_CONFIG_CAP", "16")
    code, _, err = run_cli(["run", path], capsys)
    assert code == 2 and "exceed" in err
    monkeypatch.setenv("AREALAW_CONFIG_CAP", str(2**24))
    assert run_cli(["run", path], capsys)[0] == 0


def test_cli_non_commuting_input_is_config_error(tmp_path, capsys):
    x = [[0, 1], [1, 0]]
    z = [[1, 0], [0, -1]]
    xx_z = (np.kron(x, x) + np.kron(z, np.eye(2))).tolist()
    cfg = {"schema_version": 1, "experiment": "gibbs-peps",
           "peps": {"horizontal": {"matrix": xx_z, "local_dim": 2}, "geometry": {"kind": "ring", "n": 4}},
           "beta_grid": [1.0]}
    code, _, err = run_cli(["run", write(tmp_path, cfg)], capsys)
    assert code == 2 and "commute" in err


def test_cli_usage_error(capsys):
    assert run_cli(["fuzz", "quantum-area"], capsys)[0] == 2  # --seed missing
    assert run_cli(["fuzz", "quantum-area", "--seed", "1", "--draws", "0"], capsys)[0] == 2


def test_cli_presets(capsys):
    code, out, _ = run_cli(["presets", "--json"], capsys)
    assert code == 0 and "ising-ring-8" in {m["name"] for m in json.loads(out)["models"]}
    code, out, _ = run_cli(["presets"], capsys)
    assert code == 0 and "aklt" in out


def test_cli_out_writes_both_formats(tmp_path, capsys):
    code, _, _ = run_cli(["run", write(tmp_path, AREA), "--out", str(tmp_path / "r")], capsys)
    assert code == 0
    assert (tmp_path / "r.csv").exists() and (tmp_path / "r.json").exists()


def test_run_twice_byte_identical(tmp_path, capsys):
    path = write(tmp_path, AREA)
    run_cli(["run", path, "--out", str(tmp_path / "a")], capsys)
    run_cli(["run", path, "--out", str(tmp_path / "b")], capsys)
    for ext in ("csv", "json"):
        assert (tmp_path / f"a.{ext}").read_bytes() == (tmp_path / f"b.{ext}").read_bytes()


@pytest.mark.parametrize("experiment", harness.FUZZ_EXPERIMENTS)
def test_fuzz_deterministic_across_worker_counts(tmp_path, capsys, experiment):
    outs = []
    for workers in (1, 2):
        code, _, _ = run_cli(["fuzz", experiment, "--seed", "11", "--draws", "3", "--workers", str(workers),
                              "--out", str(tmp_path / f"w{workers}")], capsys)
        assert code == 0
        outs.append(tuple((tmp_path / f"w{workers}.{ext}").read_bytes() for ext in ("csv", "json")))
    assert outs[0] == outs[1]


def test_fuzz_seed_changes_output(capsys):
    a = run_cli(["fuzz", "correlator-bound", "--seed", "1", "--draws", "3"], capsys)[1]
    b = run_cli(["fuzz", "correlator-bound", "--seed", "2", "--draws", "3"], capsys)[1]
    assert a != b


def test_installed_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "arealaw.cli", "run", write(tmp_path, AREA)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
