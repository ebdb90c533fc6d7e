"""Experiment orchestration: validated configs, deterministic artifacts, manifests.

One JSON document describes one run.  `run_experiment` validates it (strict
schema, unknown keys rejected with their dotted path), dispatches to the
owning module, writes the artifacts and a manifest, and returns the manifest.

Determinism contract: with a fixed config and master seed, CSV and JSON
artifact bodies are byte-identical at any worker count, and the manifest
digest (sha256 over the canonically serialized, digest-covered fields) is
equal.  Wall time and the worker count live outside the digest.

CSV column sets, by experiment kind:
  records (hirata, tau-tail):  kind,k,index,value,budget,log_start_measure,seed
    (`value` empty = censored at `budget`)
  rows (tau-tail, toy):        t,empirical,stderr,limit
  track (llt mode=track):      n,probability,n_probability
  table (llt mode=table):      v1,v2,end_symbol,probability
  samples (clt):               index,value
  qmatrix:                     from_symbol,to_symbol,q,alpha
  cells (planar-prob):         n,eps,probability
  rows (planar-tau):           eps,median_tau,median_ratio,censored_fraction
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigInvalid
from .gibbs import asymptotic_variance_scalar, clt_fluctuation_samples
from .llt import (DEFAULT_MEMORY_BUDGET, displacement_distribution,
                  llt_conditional_check, return_probability_track)
from .planar import PlanarWalkLaw, planar_return_prob, planar_tau_trend
from .returns import (STEP_CEILING, cylinder_return_samples, hirata_budget,
                      q_matrix, recurrence_beta, rescaled_return_values,
                      tau_lower_tail)
from .sft import Window
from .spectral import spectral_report
from .stats import Ecdf, ReferenceCdf, ks_distance
from .systems import get_system
from .toy import HeavyTailReturnSampler, build_return_sampler, toy_tau_cdf, toy_direct_vs_decomposed

SCHEMA_VERSION = 1

KINDS = ("spectral", "llt", "hirata", "tau-tail", "clt", "qmatrix", "toy",
         "toy-verify", "planar-prob", "planar-tau", "sampler-build")

_SYSTEM_KINDS = {"spectral", "llt", "hirata", "tau-tail", "clt", "qmatrix"}


# ---------------------------------------------------------------------------
# canonical JSON and digests
# ---------------------------------------------------------------------------

def jsonable(obj: Any) -> Any:
    """Recursively convert to plain JSON types; non-finite floats become None."""
    if obj is None or isinstance(obj, (str, int)) and not isinstance(obj, bool):
        return obj
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj)!r}")


def canonical_json(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def digest_of(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def pretty_json(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=1) + "\n"


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def _fail(path: str, msg: str):
    raise ConfigInvalid(msg, path=path)


def _as_map(value, path) -> dict:
    if not isinstance(value, Mapping):
        _fail(path, "must be an object")
    return dict(value)


def _no_unknown(doc: Mapping, allowed: Sequence[str], path: str) -> None:
    for key in doc:
        if key not in allowed:
            _fail(f"{path}.{key}" if path else str(key), "unknown key")


def _get(doc, key, path, kind, *, required=True, default=None):
    if key not in doc:
        if required:
            _fail(f"{path}.{key}" if path else key, "missing required key")
        return default
    value = doc[key]
    here = f"{path}.{key}" if path else key
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(here, "must be an integer")
    elif kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(here, "must be a number")
        value = float(value)
    elif kind == "str":
        if not isinstance(value, str):
            _fail(here, "must be a string")
    elif kind == "bool":
        if not isinstance(value, bool):
            _fail(here, "must be a boolean")
    elif kind == "list":
        if not isinstance(value, list):
            _fail(here, "must be a list")
    return value


def _num_list(doc, key, path, *, required=True, default=None,
              element="number", min_len=1):
    raw = _get(doc, key, path, "list", required=required, default=None)
    if raw is None:
        return default
    here = f"{path}.{key}" if path else key
    if len(raw) < min_len:
        _fail(here, f"needs at least {min_len} elements")
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _fail(f"{here}[{i}]", f"must be a {element}")
        if element == "int" and not isinstance(v, int):
            _fail(f"{here}[{i}]", "must be an integer")
        out.append(v if element == "int" else float(v))
    return out


def _str_list(doc, key, path, *, required=True, default=None):
    raw = _get(doc, key, path, "list", required=required, default=None)
    if raw is None:
        return default
    here = f"{path}.{key}" if path else key
    out = []
    for i, v in enumerate(raw):
        if not isinstance(v, str):
            _fail(f"{here}[{i}]", "must be a string")
        out.append(v)
    return out


def _positive(value, path, strict=True):
    if (value <= 0) if strict else (value < 0):
        _fail(path, "must be positive")
    return value


def _validate_params(kind: str, raw: Mapping) -> dict:
    p = "params"
    doc = _as_map(raw, p)
    out: dict = {}
    if kind == "spectral":
        _no_unknown(doc, ("grid_points", "fd_step"), p)
        out["grid_points"] = _positive(_get(doc, "grid_points", p, "int",
                                            required=False, default=64), f"{p}.grid_points")
        out["fd_step"] = _positive(_get(doc, "fd_step", p, "number",
                                        required=False, default=1e-3), f"{p}.fd_step")
    elif kind == "llt":
        _no_unknown(doc, ("mode", "n", "k", "window_a", "window_b",
                          "max_bytes"), p)
        mode = _get(doc, "mode", p, "str")
        if mode not in ("track", "table", "conditioned"):
            _fail(f"{p}.mode", "must be one of track, table, conditioned")
        out["mode"] = mode
        out["n"] = _positive(_get(doc, "n", p, "int"), f"{p}.n")
        out["max_bytes"] = _positive(_get(doc, "max_bytes", p, "int",
                                          required=False,
                                          default=DEFAULT_MEMORY_BUDGET),
                                     f"{p}.max_bytes")
        if mode == "conditioned":
            out["k"] = _positive(_get(doc, "k", p, "int"), f"{p}.k")
            out["window_a"] = _str_list(doc, "window_a", p)
            out["window_b"] = _str_list(doc, "window_b", p)
        elif "k" in doc or "window_a" in doc or "window_b" in doc:
            _fail(f"{p}.k", "only valid with mode=conditioned")
    elif kind == "hirata":
        _no_unknown(doc, ("k", "n_samples", "horizon", "window"), p)
        out["k"] = _positive(_get(doc, "k", p, "int"), f"{p}.k")
        out["n_samples"] = _positive(_get(doc, "n_samples", p, "int"),
                                     f"{p}.n_samples")
        out["horizon"] = _positive(_get(doc, "horizon", p, "number",
                                        required=False, default=20.0),
                                   f"{p}.horizon")
        out["window"] = _str_list(doc, "window", p, required=False,
                                  default=None)
    elif kind == "tau-tail":
        _no_unknown(doc, ("k", "t_list", "n_traj", "ceiling"), p)
        out["k"] = _positive(_get(doc, "k", p, "int"), f"{p}.k")
        out["t_list"] = _num_list(doc, "t_list", p)
        out["n_traj"] = _positive(_get(doc, "n_traj", p, "int"), f"{p}.n_traj")
        out["ceiling"] = _positive(_get(doc, "ceiling", p, "int",
                                        required=False, default=STEP_CEILING),
                                   f"{p}.ceiling")
    elif kind == "clt":
        _no_unknown(doc, ("k", "n_samples", "boundary_corrected"), p)
        out["k"] = _positive(_get(doc, "k", p, "int"), f"{p}.k")
        out["n_samples"] = _positive(_get(doc, "n_samples", p, "int"),
                                     f"{p}.n_samples")
        out["boundary_corrected"] = _get(doc, "boundary_corrected", p, "bool",
                                         required=False, default=True)
    elif kind == "qmatrix":
        _no_unknown(doc, ("k_range", "sample_windows", "enumeration_limit"), p)
        out["k_range"] = _num_list(doc, "k_range", p, element="int")
        out["sample_windows"] = _positive(
            _get(doc, "sample_windows", p, "int", required=False, default=64),
            f"{p}.sample_windows")
        out["enumeration_limit"] = _positive(
            _get(doc, "enumeration_limit", p, "int", required=False,
                 default=20000), f"{p}.enumeration_limit")
    elif kind == "toy":
        _no_unknown(doc, ("delta", "t_list", "n_trials", "sampler"), p)
        out["delta"] = _get(doc, "delta", p, "number")
        if not 0.0 < out["delta"] < 1.0:
            _fail(f"{p}.delta", "must lie in (0, 1)")
        out["t_list"] = _num_list(doc, "t_list", p)
        out["n_trials"] = _positive(_get(doc, "n_trials", p, "int"),
                                    f"{p}.n_trials")
        out["sampler"] = _validate_sampler_ref(doc.get("sampler"),
                                               f"{p}.sampler")
    elif kind == "toy-verify":
        _no_unknown(doc, ("epsilon", "n_trials", "budget"), p)
        out["epsilon"] = _positive(_get(doc, "epsilon", p, "number"),
                                   f"{p}.epsilon")
        out["n_trials"] = _positive(_get(doc, "n_trials", p, "int"),
                                    f"{p}.n_trials")
        out["budget"] = _positive(_get(doc, "budget", p, "int",
                                       required=False, default=10**6),
                                  f"{p}.budget")
    elif kind == "planar-prob":
        _no_unknown(doc, ("law", "n_list", "eps_list", "n_trials",
                          "estimator"), p)
        out["law"] = _validate_law(doc.get("law"), f"{p}.law")
        out["n_list"] = [_positive(v, f"{p}.n_list") for v in
                         _num_list(doc, "n_list", p, element="int")]
        out["eps_list"] = [_positive(v, f"{p}.eps_list") for v in
                           _num_list(doc, "eps_list", p)]
        out["n_trials"] = _positive(_get(doc, "n_trials", p, "int"),
                                    f"{p}.n_trials")
        est = _get(doc, "estimator", p, "str", required=False,
                   default="conditional")
        if est not in ("conditional", "indicator"):
            _fail(f"{p}.estimator", "must be conditional or indicator")
        out["estimator"] = est
    elif kind == "planar-tau":
        _no_unknown(doc, ("law", "eps_list", "n_trials", "budget"), p)
        out["law"] = _validate_law(doc.get("law"), f"{p}.law")
        out["eps_list"] = [_positive(v, f"{p}.eps_list") for v in
                           _num_list(doc, "eps_list", p)]
        out["n_trials"] = _positive(_get(doc, "n_trials", p, "int"),
                                    f"{p}.n_trials")
        out["budget"] = _positive(_get(doc, "budget", p, "int",
                                       required=False, default=10**9),
                                  f"{p}.budget")
    elif kind == "sampler-build":
        _no_unknown(doc, ("cap", "n_samples", "file_name"), p)
        out["cap"] = _positive(_get(doc, "cap", p, "int"), f"{p}.cap")
        out["n_samples"] = _positive(_get(doc, "n_samples", p, "int"),
                                     f"{p}.n_samples")
        out["file_name"] = _get(doc, "file_name", p, "str", required=False,
                                default="sampler.npz")
    else:  # pragma: no cover - guarded by the kind check
        _fail("kind", f"unknown kind {kind!r}")
    return out


def _validate_sampler_ref(raw, path) -> dict:
    if raw is None:
        _fail(path, "missing required key")
    doc = _as_map(raw, path)
    if "path" in doc:
        _no_unknown(doc, ("path",), path)
        return {"path": _get(doc, "path", path, "str")}
    _no_unknown(doc, ("cap", "n_samples", "seed"), path)
    return {
        "cap": _positive(_get(doc, "cap", path, "int"), f"{path}.cap"),
        "n_samples": _positive(_get(doc, "n_samples", path, "int"),
                               f"{path}.n_samples"),
        "seed": _get(doc, "seed", path, "int"),
    }


def _validate_law(raw, path) -> dict:
    if raw is None:
        _fail(path, "missing required key")
    doc = _as_map(raw, path)
    _no_unknown(doc, ("tag", "param"), path)
    tag = _get(doc, "tag", path, "str")
    if tag not in ("gaussian", "uniform-disc", "lattice-simple"):
        _fail(f"{path}.tag",
              "must be one of gaussian, uniform-disc, lattice-simple")
    return {"tag": tag,
            "param": _positive(_get(doc, "param", path, "number",
                                    required=False, default=1.0),
                               f"{path}.param")}


def validate_config(doc: Mapping) -> dict:
    """Validate and normalize a config document; defaults are filled in.

    The returned dict is the canonical form covered by the config digest.
    Raises ConfigInvalid with the dotted path of the first offending key.
    """
    doc = _as_map(doc, "")
    _no_unknown(doc, ("kind", "seed", "workers", "system", "params"), "")
    kind = _get(doc, "kind", "", "str")
    if kind not in KINDS:
        _fail("kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    seed = _get(doc, "seed", "", "int")
    if seed < 0:
        _fail("seed", "must be nonnegative")
    workers = _get(doc, "workers", "", "int", required=False, default=1)
    if not 1 <= workers <= 256:
        _fail("workers", "must lie in 1..256")
    out = {"kind": kind, "seed": seed, "workers": workers}
    if kind in _SYSTEM_KINDS:
        if "system" not in doc:
            _fail("system", "missing required key")
        system = _as_map(doc["system"], "system")
        _no_unknown(system, ("name",), "system")
        out["system"] = {"name": _get(system, "name", "system", "str")}
    elif "system" in doc:
        _fail("system", f"not accepted by kind {kind!r}")
    out["params"] = _validate_params(kind, doc.get("params", {}))
    return out


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config file: {exc}", path=str(path))
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"not valid JSON: {exc}", path=str(path))
    return validate_config(doc)


# ---------------------------------------------------------------------------
# artifact helpers
# ---------------------------------------------------------------------------

def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _records_csv(kind: str, k: int, values, budgets, log_masses,
                 seed: int) -> str:
    rows = []
    for i in range(len(values)):
        v = int(values[i])
        b = int(budgets[i]) if np.ndim(budgets) else int(budgets)
        rows.append([kind, k, i, v if v > 0 else None, b,
                     float(log_masses[i]), seed])
    return _csv_text(
        ["kind", "k", "index", "value", "budget", "log_start_measure",
         "seed"], rows)


def _rows_csv(rows) -> str:
    return _csv_text(["t", "empirical", "stderr", "limit"],
                     [[r["t"], r["empirical"], r["stderr"], r["limit"]]
                      for r in rows])


# ---------------------------------------------------------------------------
# runners (kind -> results dict + text artifacts)
# ---------------------------------------------------------------------------

def _system_parts(cfg: dict, need_walk: bool):
    bundle = get_system(cfg["system"]["name"])
    if need_walk and bundle.observable is None:
        raise ConfigInvalid(
            f"system {bundle.name!r} carries no lattice step function",
            path="system.name")
    return bundle.measure, bundle.observable


def _run_spectral(cfg):
    m, phi = _system_parts(cfg, need_walk=True)
    rep = spectral_report(m, phi, grid_n=cfg["params"]["grid_points"],
                          step=cfg["params"]["fd_step"])
    results = rep.to_dict()
    return results, [("report.json", pretty_json(results))]


def _run_llt(cfg):
    m, phi = _system_parts(cfg, need_walk=True)
    p = cfg["params"]
    if p["mode"] == "track":
        track = return_probability_track(m, phi, p["n"],
                                         max_bytes=p["max_bytes"])
        ns = np.arange(1, p["n"] + 1)
        rows = [[int(n), float(pr), float(n * pr)]
                for n, pr in zip(ns, track)]
        results = {
            "mode": "track", "n": p["n"],
            "final_n_probability": float(p["n"] * track[-1]),
            "beta": recurrence_beta(m, phi),
        }
        return results, [("track.csv", _csv_text(
            ["n", "probability", "n_probability"], rows))]
    if p["mode"] == "table":
        table = displacement_distribution(m, phi, p["n"],
                                          max_bytes=p["max_bytes"])
        results = {
            "mode": "table", "n": p["n"],
            "mass_check": table.mass_check,
            "return_probability": table.return_probability(),
            "max_norm": table.max_norm,
        }
        return results, [("table.csv", table.csv_text())]
    wa = Window(m.sft, tuple(p["window_a"]))
    wb = Window(m.sft, tuple(p["window_b"]), one_sided=True)
    results = dict(llt_conditional_check(m, phi, wa, wb, p["n"], p["k"],
                                         max_bytes=p["max_bytes"]))
    results["mode"] = "conditioned"
    return results, [("check.json", pretty_json(results))]


def _run_hirata(cfg):
    m, _ = _system_parts(cfg, need_walk=False)
    p = cfg["params"]
    window = None
    if p["window"] is not None:
        window = Window(m.sft, tuple(p["window"]))
    budget = hirata_budget(m, p["k"], horizon=p["horizon"])
    batch = cylinder_return_samples(m, p["k"], p["n_samples"], cfg["seed"],
                                    budget=budget, window=window,
                                    workers=cfg["workers"])
    vals, thresholds = rescaled_return_values(batch)
    ecdf = Ecdf(vals, thresholds)
    ks = ks_distance(ecdf, ReferenceCdf.exponential1())
    results = {
        "k": p["k"], "n_samples": p["n_samples"], "budget": budget,
        "conditioned": p["window"] is not None,
        "censored_fraction": float(batch["censored"].mean()),
        "ks": ks.statistic, "coverage": ks.coverage,
    }
    rec = _records_csv("cylinder-return", p["k"], batch["values"],
                       budget, batch["log_masses"], cfg["seed"])
    return results, [("records.csv", rec)]


def _run_tau_tail(cfg):
    m, phi = _system_parts(cfg, need_walk=True)
    p = cfg["params"]
    out = tau_lower_tail(m, phi, p["k"], p["t_list"], p["n_traj"],
                         cfg["seed"], ceiling=p["ceiling"],
                         workers=cfg["workers"])
    batch = out["samples"]
    results = {
        "k": p["k"], "n_traj": p["n_traj"], "beta": out["beta"],
        "censored_fraction": out["censored_fraction"],
        "rows": out["rows"],
    }
    rec = _records_csv("extension-return", p["k"], batch["values"],
                       batch["budgets"], batch["log_masses"], cfg["seed"])
    return results, [("records.csv", rec), ("rows.csv", _rows_csv(out["rows"]))]


def _run_clt(cfg):
    m, _ = _system_parts(cfg, need_walk=False)
    p = cfg["params"]
    samples = clt_fluctuation_samples(m, p["k"], p["n_samples"], cfg["seed"],
                                      boundary_corrected=p["boundary_corrected"],
                                      workers=cfg["workers"])
    mask = m.sft.transition.astype(bool)
    log_pi = np.where(mask, m.log_stochastic, 0.0)
    sigma_h2 = asymptotic_variance_scalar(m, log_pi)
    ks = ks_distance(Ecdf(samples, np.empty(0)),
                     ReferenceCdf.normal(2.0 * sigma_h2))
    results = {
        "k": p["k"], "n_samples": p["n_samples"],
        "boundary_corrected": p["boundary_corrected"],
        "sigma_h2": sigma_h2,
        "sample_mean": float(samples.mean()),
        "sample_variance": float(samples.var()),
        "ks": ks.statistic,
    }
    rows = [[i, float(v)] for i, v in enumerate(samples)]
    return results, [("samples.csv", _csv_text(["index", "value"], rows))]


def _run_qmatrix(cfg):
    m, _ = _system_parts(cfg, need_walk=False)
    p = cfg["params"]
    rep = q_matrix(m, tuple(p["k_range"]), sample_windows=p["sample_windows"],
                   seed=cfg["seed"], enumeration_limit=p["enumeration_limit"])
    results = {
        "k_range": list(rep.k_range),
        "constancy_deviation": rep.constancy_deviation,
        "q": rep.q, "alpha": rep.alpha, "symbols": list(rep.symbols),
    }
    rows = [[a, b, float(rep.q[i, j]), float(rep.alpha[i, j])]
            for i, a in enumerate(rep.symbols)
            for j, b in enumerate(rep.symbols)]
    return results, [("qmatrix.csv", _csv_text(
        ["from_symbol", "to_symbol", "q", "alpha"], rows))]


def _sampler_from_ref(ref: dict, workers: int) -> HeavyTailReturnSampler:
    if "path" in ref:
        return HeavyTailReturnSampler.load(ref["path"])
    return build_return_sampler(ref["cap"], ref["n_samples"], ref["seed"],
                                workers=workers)


def _sampler_summary(sampler: HeavyTailReturnSampler) -> dict:
    return {
        "cap": sampler.cap, "n_total": sampler.n_total,
        "n_uncensored": sampler.n_uncensored,
        "censored_fraction": sampler.censored_fraction,
        "tail_weight": sampler.tail_weight, "seed": sampler.seed,
    }


def _run_toy(cfg):
    p = cfg["params"]
    sampler = _sampler_from_ref(p["sampler"], cfg["workers"])
    out = toy_tau_cdf(p["delta"], p["t_list"], p["n_trials"], sampler,
                      cfg["seed"], workers=cfg["workers"])
    results = {
        "delta": p["delta"], "n_trials": p["n_trials"],
        "uses_tail_model": out["uses_tail_model"],
        "sampler": _sampler_summary(sampler),
        "rows": out["rows"],
    }
    return results, [("rows.csv", _rows_csv(out["rows"]))]


def _run_toy_verify(cfg):
    p = cfg["params"]
    out = toy_direct_vs_decomposed(p["epsilon"], p["n_trials"], cfg["seed"],
                                   budget=p["budget"],
                                   workers=cfg["workers"])
    results = {k: out[k] for k in
               ("ks", "coverage", "censored_direct", "censored_decomposed",
                "boundary_flags")}
    results.update(epsilon=p["epsilon"], n_trials=p["n_trials"],
                   budget=p["budget"])
    return results, [("summary.json", pretty_json(results))]


def _run_planar_prob(cfg):
    p = cfg["params"]
    law = PlanarWalkLaw(p["law"]["tag"], p["law"]["param"])
    out = planar_return_prob(law, p["n_list"], p["eps_list"], p["n_trials"],
                             cfg["seed"], estimator=p["estimator"],
                             workers=cfg["workers"])
    results = {k: out[k] for k in
               ("slope_log_n", "slope_log_n_stderr", "slope_log_eps",
                "slope_log_eps_stderr")}
    results.update(law=p["law"], estimator=p["estimator"],
                   n_trials=p["n_trials"], cramer_ok=law.cramer_ok)
    rows = [[c["n"], c["eps"], c["probability"]] for c in out["cells"]]
    return results, [("cells.csv", _csv_text(["n", "eps", "probability"],
                                             rows))]


def _run_planar_tau(cfg):
    p = cfg["params"]
    law = PlanarWalkLaw(p["law"]["tag"], p["law"]["param"])
    out = planar_tau_trend(law, p["eps_list"], p["n_trials"], cfg["seed"],
                           budget=p["budget"], workers=cfg["workers"])
    results = {"law": p["law"], "n_trials": p["n_trials"],
               "budget": p["budget"], "rows": out["rows"]}
    rows = [[r["eps"], r["median_tau"], r["median_ratio"],
             r["censored_fraction"]] for r in out["rows"]]
    return results, [("rows.csv", _csv_text(
        ["eps", "median_tau", "median_ratio", "censored_fraction"], rows))]


_RUNNERS = {
    "spectral": _run_spectral,
    "llt": _run_llt,
    "hirata": _run_hirata,
    "tau-tail": _run_tau_tail,
    "clt": _run_clt,
    "qmatrix": _run_qmatrix,
    "toy": _run_toy,
    "toy-verify": _run_toy_verify,
    "planar-prob": _run_planar_prob,
    "planar-tau": _run_planar_tau,
}


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunManifest:
    """A finished run: digest-covered content plus timing, written to disk."""

    data: dict
    out_dir: Path
    files: tuple[str, ...]

    @property
    def digest(self) -> str:
        return self.data["digest"]

    @property
    def results(self) -> dict:
        return self.data["results"]


def manifest_digest(data: Mapping) -> str:
    """Digest of the covered fields; stable under re-serialization."""
    covered = {k: data[k] for k in
               ("schema_version", "code_version", "kind", "config",
                "config_digest", "seed", "results", "artifacts")}
    return digest_of(covered)


def run_experiment(config: Mapping | str | Path, out_dir: str | Path, *,
                   seed: Optional[int] = None,
                   workers: Optional[int] = None) -> RunManifest:
    """Validate, run, and persist one experiment.

    `seed` and `workers` override the config document (the override is what
    the digest sees).  Artifacts and `manifest.json` land in `out_dir`.
    """
    if isinstance(config, (str, Path)):
        cfg = load_config(config)
    else:
        cfg = validate_config(config)
    if seed is not None:
        if seed < 0:
            raise ConfigInvalid("must be nonnegative", path="seed")
        cfg["seed"] = int(seed)
    if workers is not None:
        if not 1 <= workers <= 256:
            raise ConfigInvalid("must lie in 1..256", path="workers")
        cfg["workers"] = int(workers)
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    start = time.monotonic()
    if cfg["kind"] == "sampler-build":
        results, artifacts = _run_sampler_build(cfg, out_path)
    else:
        results, artifacts = _RUNNERS[cfg["kind"]](cfg)
        for name, text in artifacts:
            (out_path / name).write_text(text)
        artifacts = {name: hashlib.sha256(text.encode()).hexdigest()
                     for name, text in artifacts}
    wall = time.monotonic() - start
    digest_cfg = {k: v for k, v in cfg.items() if k != "workers"}
    data = {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "kind": cfg["kind"],
        "config": digest_cfg,
        "config_digest": digest_of(digest_cfg),
        "seed": cfg["seed"],
        "results": jsonable(results),
        "artifacts": artifacts,
    }
    data["digest"] = manifest_digest(data)
    data["workers"] = cfg["workers"]
    data["wall_time_s"] = round(wall, 3)
    (out_path / "manifest.json").write_text(pretty_json(data))
    return RunManifest(data=data, out_dir=out_path,
                       files=tuple(sorted(artifacts)) + ("manifest.json",))


def _run_sampler_build(cfg, out_path: Path):
    p = cfg["params"]
    sampler = build_return_sampler(p["cap"], p["n_samples"], cfg["seed"],
                                   workers=cfg["workers"])
    file_name = p["file_name"]
    sampler.save(str(out_path / file_name))
    results = _sampler_summary(sampler)
    # npz bytes carry zip timestamps; hash the content, not the container
    content_digest = digest_of({
        "cap": sampler.cap, "n_total": sampler.n_total,
        "seed": sampler.seed,
        "log_values_sha256": hashlib.sha256(
            np.ascontiguousarray(sampler.log_values).tobytes()).hexdigest(),
    })
    return results, {file_name: content_digest}
