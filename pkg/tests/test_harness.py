"""Config validation, run manifests, artifact determinism, and the CLI."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from recur2d import cli
from recur2d.errors import ConfigInvalid
from recur2d.harness import (KINDS, canonical_json, digest_of, jsonable,
                             load_config, manifest_digest, pretty_json,
                             run_experiment, validate_config)
from recur2d.llt import DEFAULT_MEMORY_BUDGET
from recur2d.toy import HeavyTailReturnSampler


def _spectral_doc(**over):
    doc = {"kind": "spectral", "seed": 5, "system": {"name": "lazy5"},
           "params": {"grid_points": 16}}
    doc.update(over)
    return doc


def _hirata_doc():
    return {"kind": "hirata", "seed": 11, "system": {"name": "golden-mean"},
            "params": {"k": 1, "n_samples": 200}}


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------

def test_jsonable_normalizes_numpy_and_nonfinite():
    out = jsonable({
        "f": np.float64(1.5), "i": np.int32(-3), "b": np.bool_(True),
        "arr": np.arange(4).reshape(2, 2), "t": (1, 2.0),
        "nan": float("nan"), "inf": np.float64("inf"), 7: "key",
    })
    assert out["f"] == 1.5 and isinstance(out["f"], float)
    assert out["i"] == -3 and isinstance(out["i"], int)
    assert out["b"] is True
    assert out["arr"] == [[0, 1], [2, 3]]
    assert out["t"] == [1, 2.0]
    assert out["nan"] is None and out["inf"] is None
    assert out["7"] == "key"


def test_jsonable_rejects_foreign_objects():
    with pytest.raises(TypeError):
        jsonable({"x": object()})


def test_canonical_json_ignores_key_order():
    a = {"b": 1, "a": [2, {"y": 3.5, "x": None}]}
    b = {"a": [2, {"x": None, "y": 3.5}], "b": 1}
    assert canonical_json(a) == canonical_json(b)
    assert " " not in canonical_json(a)
    assert digest_of(a) == digest_of(b)


def test_pretty_json_round_trips():
    text = pretty_json({"x": np.float64(0.1), "y": [1, 2]})
    assert text.endswith("\n")
    assert json.loads(text) == {"x": 0.1, "y": [1, 2]}


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_validate_fills_defaults():
    cfg = validate_config({"kind": "spectral", "seed": 3,
                           "system": {"name": "lazy5"}})
    assert cfg == {"kind": "spectral", "seed": 3, "workers": 1,
                   "system": {"name": "lazy5"},
                   "params": {"grid_points": 64, "fd_step": 1e-3}}


def test_validate_keeps_explicit_values():
    cfg = validate_config(_spectral_doc(workers=8))
    assert cfg["workers"] == 8
    assert cfg["params"]["grid_points"] == 16
    assert cfg["params"]["fd_step"] == 1e-3


def test_validate_llt_modes():
    track = validate_config({
        "kind": "llt", "seed": 0, "system": {"name": "lazy5"},
        "params": {"mode": "track", "n": 12}})
    assert track["params"]["max_bytes"] == DEFAULT_MEMORY_BUDGET
    cond = validate_config({
        "kind": "llt", "seed": 0, "system": {"name": "lazy5"},
        "params": {"mode": "conditioned", "n": 40, "k": 3,
                   "window_a": ["E", "N", "W"], "window_b": ["S"]}})
    assert cond["params"]["window_a"] == ["E", "N", "W"]
    assert cond["params"]["k"] == 3


def test_validate_toy_sampler_forms():
    by_path = validate_config({
        "kind": "toy", "seed": 0,
        "params": {"delta": 0.01, "t_list": [1.0], "n_trials": 10,
                   "sampler": {"path": "s.npz"}}})
    assert by_path["params"]["sampler"] == {"path": "s.npz"}
    inline = validate_config({
        "kind": "toy", "seed": 0,
        "params": {"delta": 0.01, "t_list": [1.0], "n_trials": 10,
                   "sampler": {"cap": 2000, "n_samples": 50, "seed": 4}}})
    assert inline["params"]["sampler"]["cap"] == 2000


_BAD_DOCS = [
    ({}, "kind"),
    ({"kind": "warp", "seed": 0}, "kind"),
    ({"kind": "spectral", "system": {"name": "lazy5"}}, "seed"),
    ({"kind": "spectral", "seed": -1, "system": {"name": "lazy5"}}, "seed"),
    ({"kind": "spectral", "seed": 0, "workers": 0,
      "system": {"name": "lazy5"}}, "workers"),
    ({"kind": "spectral", "seed": 0}, "system"),
    ({"kind": "spectral", "seed": 0, "system": {"name": "lazy5", "extra": 1}},
     "system.extra"),
    ({"kind": "toy", "seed": 0, "system": {"name": "lazy5"}, "params": {}},
     "system"),
    ({"kind": "spectral", "seed": 0, "system": {"name": "lazy5"},
      "params": {"bogus": 1}}, "params.bogus"),
    ({"kind": "spectral", "seed": 0, "system": {"name": "lazy5"}, "x": 1},
     "x"),
    ({"kind": "clt", "seed": 0, "system": {"name": "markov5"},
      "params": {"k": True, "n_samples": 10}}, "params.k"),
    ({"kind": "llt", "seed": 0, "system": {"name": "lazy5"},
      "params": {"mode": "sideways", "n": 5}}, "params.mode"),
    ({"kind": "llt", "seed": 0, "system": {"name": "lazy5"},
      "params": {"mode": "track", "n": 5, "k": 2}}, "params.k"),
    ({"kind": "tau-tail", "seed": 0, "system": {"name": "lazy5"},
      "params": {"k": 1, "t_list": [0.1, "x"], "n_traj": 5}},
     "params.t_list[1]"),
    ({"kind": "planar-prob", "seed": 0,
      "params": {"law": {"tag": "levy"}, "n_list": [10],
                 "eps_list": [0.5], "n_trials": 5}}, "params.law.tag"),
    ({"kind": "planar-prob", "seed": 0,
      "params": {"law": {"tag": "gaussian", "param": -1.0}, "n_list": [10],
                 "eps_list": [0.5], "n_trials": 5}}, "params.law.param"),
    ({"kind": "planar-tau", "seed": 0,
      "params": {"eps_list": [0.5], "n_trials": 5}}, "params.law"),
    ({"kind": "toy", "seed": 0,
      "params": {"delta": 1.5, "t_list": [1.0], "n_trials": 5,
                 "sampler": {"path": "s.npz"}}}, "params.delta"),
    ({"kind": "toy", "seed": 0,
      "params": {"delta": 0.1, "t_list": [1.0], "n_trials": 5,
                 "sampler": {"path": "s.npz", "cap": 9}}},
     "params.sampler.cap"),
    ({"kind": "sampler-build", "seed": 0,
      "params": {"cap": 0, "n_samples": 5}}, "params.cap"),
]


@pytest.mark.parametrize("doc,path", _BAD_DOCS,
                         ids=[p for _, p in _BAD_DOCS])
def test_invalid_config_reports_dotted_path(doc, path):
    with pytest.raises(ConfigInvalid) as err:
        validate_config(doc)
    assert err.value.path == path
    assert path in str(err.value)


def test_load_config_reads_and_validates(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(_spectral_doc()))
    cfg = load_config(p)
    assert cfg["kind"] == "spectral"
    assert cfg["params"]["fd_step"] == 1e-3


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigInvalid, match="cannot read"):
        load_config(tmp_path / "absent.json")


def test_load_config_rejects_bad_json(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("{not json")
    with pytest.raises(ConfigInvalid, match="not valid JSON"):
        load_config(p)


# ---------------------------------------------------------------------------
# run_experiment: manifests and determinism
# ---------------------------------------------------------------------------

def test_spectral_run_is_reproducible(tmp_path):
    m1 = run_experiment(_spectral_doc(), tmp_path / "a")
    m2 = run_experiment(_spectral_doc(), tmp_path / "b")
    assert m1.digest == m2.digest
    assert (tmp_path / "a" / "report.json").read_bytes() == \
           (tmp_path / "b" / "report.json").read_bytes()
    assert m1.files == ("report.json", "manifest.json")
    assert m1.data["schema_version"] == 1
    assert m1.data["kind"] == "spectral"
    assert "workers" not in m1.data["config"]
    assert m1.results["beta"] == pytest.approx(5.0 / (4.0 * math.pi))


def test_manifest_digest_survives_reserialization(tmp_path):
    man = run_experiment(_spectral_doc(), tmp_path)
    loaded = json.loads((tmp_path / "manifest.json").read_text())
    assert loaded["digest"] == man.digest
    assert manifest_digest(loaded) == loaded["digest"]
    assert loaded["config_digest"] == digest_of(loaded["config"])
    assert "wall_time_s" in loaded and "workers" in loaded


def test_worker_count_does_not_change_results(tmp_path):
    m1 = run_experiment(_hirata_doc(), tmp_path / "w1", workers=1)
    m5 = run_experiment(_hirata_doc(), tmp_path / "w5", workers=5)
    assert m1.digest == m5.digest
    assert (tmp_path / "w1" / "records.csv").read_bytes() == \
           (tmp_path / "w5" / "records.csv").read_bytes()
    assert m5.data["workers"] == 5


def test_seed_override_is_recorded_and_changes_digest(tmp_path):
    base = run_experiment(_hirata_doc(), tmp_path / "a")
    other = run_experiment(_hirata_doc(), tmp_path / "b", seed=99)
    assert other.data["seed"] == 99
    assert other.data["config"]["seed"] == 99
    assert other.digest != base.digest


def test_override_validation(tmp_path):
    with pytest.raises(ConfigInvalid) as err:
        run_experiment(_spectral_doc(), tmp_path, seed=-3)
    assert err.value.path == "seed"
    with pytest.raises(ConfigInvalid) as err:
        run_experiment(_spectral_doc(), tmp_path, workers=0)
    assert err.value.path == "workers"


def test_tau_tail_run_writes_both_csv_artifacts(tmp_path):
    doc = {"kind": "tau-tail", "seed": 23, "system": {"name": "lazy5"},
           "params": {"k": 1, "t_list": [0.02, 0.05], "n_traj": 300}}
    man = run_experiment(doc, tmp_path)
    assert man.files == ("records.csv", "rows.csv", "manifest.json")
    records = (tmp_path / "records.csv").read_text().splitlines()
    assert records[0] == "kind,k,index,value,budget,log_start_measure,seed"
    assert len(records) == 301
    cells = [line.split(",") for line in records[1:]]
    censored = [c for c in cells if c[3] == ""]
    returned = [c for c in cells if c[3] != ""]
    assert censored and returned
    assert all(int(c[3]) >= 1 for c in returned)
    rows = (tmp_path / "rows.csv").read_text().splitlines()
    assert rows[0] == "t,empirical,stderr,limit"
    assert len(rows) == 3
    assert man.results["rows"][0]["t"] == 0.02


def test_sampler_build_digest_ignores_container_bytes(tmp_path):
    doc = {"kind": "sampler-build", "seed": 7,
           "params": {"cap": 2000, "n_samples": 400}}
    m1 = run_experiment(doc, tmp_path / "a")
    m2 = run_experiment(doc, tmp_path / "b")
    assert m1.digest == m2.digest
    assert m1.data["artifacts"] == m2.data["artifacts"]
    assert set(m1.data["artifacts"]) == {"sampler.npz"}
    loaded = HeavyTailReturnSampler.load(tmp_path / "a" / "sampler.npz")
    assert loaded.cap == 2000
    assert loaded.n_total == 400
    assert loaded.seed == 7
    assert m1.results["n_uncensored"] == loaded.n_uncensored


def test_sampler_build_honors_file_name(tmp_path):
    doc = {"kind": "sampler-build", "seed": 7,
           "params": {"cap": 2000, "n_samples": 60, "file_name": "s.npz"}}
    man = run_experiment(doc, tmp_path)
    assert (tmp_path / "s.npz").exists()
    assert man.files == ("s.npz", "manifest.json")


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_runs_experiment(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(_spectral_doc()))
    out = tmp_path / "out"
    assert cli.main(["spectral", "-c", str(cfg), "--out", str(out)]) == 0
    assert (out / "manifest.json").exists()
    stdout = capsys.readouterr().out
    assert "digest=" in stdout
    assert "report.json" in stdout


def test_cli_rejects_kind_mismatch(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(_spectral_doc()))
    code = cli.main(["llt", "-c", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_cli_missing_config_file(tmp_path, capsys):
    code = cli.main(["spectral", "-c", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")])
    assert code == 2


def test_cli_accept_single_criterion(tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code = cli.main(["accept", "--only", "12", "--out", str(report_path)])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert [c["id"] for c in report["criteria"]] == [12]
    assert report["criteria"][0]["passed"] is True
    assert report["all_passed"] is True
    assert "[PASS] 12" in capsys.readouterr().out


def test_cli_accept_fails_on_unmet_tolerance(tmp_path, capsys):
    from recur2d.acceptance import load_criteria_config
    cfg = load_criteria_config()
    cfg["criteria"]["12"]["ks_tol"] = -1.0
    mod = tmp_path / "criteria.json"
    mod.write_text(json.dumps(cfg))
    code = cli.main(["accept", "-c", str(mod), "--only", "12"])
    assert code == 1
    assert "[FAIL] 12" in capsys.readouterr().out


def test_cli_accept_rejects_bad_only_token(capsys):
    assert cli.main(["accept", "--only", "1,x"]) == 2
    assert "--only" in capsys.readouterr().err


def test_cli_help_lists_every_kind(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for kind in KINDS:
        assert kind in text
    assert "accept" in text
