"""Pinned verification suite.

Fifteen numbered criteria exercise the package end to end: exact spectral
identities, the displacement-probability constant with and without window
conditioning, the arithmetic obstruction, the rescaled return laws, the
decomposition cross-check, the ball-hit shape, the cylinder-mass CLT, the
endpoint-matrix structure, worker-count reproducibility, and the slow
recurrence trends.  Every tolerance, size, seed, and window lives in the
criteria config (the packaged ``configs/acceptance.json`` by default), never
in this module.

Each criterion function returns (passed, details); `run_acceptance` times
them, echoes one line per criterion, and assembles the report consumed by the
CLI `accept` subcommand and the test suite.
"""

from __future__ import annotations

import json
import math
import tempfile
import time
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .errors import ConfigInvalid
from .gibbs import asymptotic_variance_scalar, clt_fluctuation_samples
from .harness import digest_of, jsonable, run_experiment, validate_config
from .llt import llt_conditional_check, return_probability_track
from .planar import PlanarWalkLaw, planar_return_prob, planar_tau_trend
from .returns import (cylinder_return_samples, hirata_budget,
                      nested_extension_returns, q_matrix, recurrence_beta,
                      rescaled_return_values, tau_lower_tail)
from .sft import Window
from .spectral import hessian_check, nonarithmeticity_scan, twisted_eigenvalue
from .stats import Ecdf, ReferenceCdf, ks_distance
from .systems import build_full_shift, get_system
from .toy import (build_return_sampler, toy_direct_vs_decomposed, toy_tau_cdf,
                  toy_tau_trend)


def load_criteria_config(path: Optional[str] = None) -> dict:
    """The criteria config: the packaged default, or the file at `path`."""
    if path is None:
        text = resources.files("recur2d").joinpath(
            "configs/acceptance.json").read_text()
        origin = "packaged acceptance config"
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigInvalid(f"cannot read criteria config: {exc}",
                                path=str(path))
        origin = str(path)
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"not valid JSON: {exc}", path=origin)
    if not isinstance(cfg, dict) or "criteria" not in cfg:
        raise ConfigInvalid("missing 'criteria' section", path=origin)
    missing = [str(i) for i in range(1, 16) if str(i) not in cfg["criteria"]]
    if missing:
        raise ConfigInvalid(f"criteria absent: {', '.join(missing)}",
                            path=origin)
    return cfg


# ---------------------------------------------------------------------------
# shared state
# ---------------------------------------------------------------------------

class _Context:
    """Lazily built artifacts shared between criteria (the big sampler)."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self._sampler = None

    def sampler(self):
        if self._sampler is None:
            s = self.cfg["shared_sampler"]
            self._sampler = build_return_sampler(s["cap"], s["n_samples"],
                                                 s["seed"])
        return self._sampler


def _walk_system(name: str):
    bundle = get_system(name)
    return bundle.measure, bundle.observable


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def _c01_spectral_exactness(block, ctx):
    m, phi = _walk_system(block["system"])
    n = block["grid_points"]
    us = -np.pi + 2.0 * np.pi * np.arange(n) / n
    worst = 0.0
    for u1 in us:
        for u2 in us:
            lam = twisted_eigenvalue(m, phi, (u1, u2))
            closed = (1.0 + 2.0 * math.cos(u1) + 2.0 * math.cos(u2)) / 5.0
            worst = max(worst, abs(lam - closed))
    hc = hessian_check(m, phi, step=block["fd_step"])
    beta = recurrence_beta(m, phi)
    beta_target = 5.0 / (4.0 * math.pi)
    beta_dev = abs(beta - beta_target)
    passed = (worst <= block["eigen_tol"]
              and hc["deviation"] <= block["hessian_tol"]
              and beta_dev <= block["beta_tol"])
    return passed, {
        "grid_points": n * n,
        "max_eigen_dev": worst,
        "hessian_dev": hc["deviation"],
        "beta": beta,
        "beta_dev": beta_dev,
    }


def _c02_variance_vs_hessian(block, ctx):
    m, phi = _walk_system(block["system"])
    hc = hessian_check(m, phi, step=block["fd_step"])
    passed = hc["deviation"] <= block["tol"]
    return passed, {
        "deviation": hc["deviation"],
        "sigma": hc["sigma_phi2"].tolist(),
    }


def _c03_llt_unconditioned(block, ctx):
    m, phi = _walk_system(block["system"])
    beta = recurrence_beta(m, phi)
    track = return_probability_track(m, phi, block["n"])

    def rel(n: int) -> float:
        return abs(n * float(track[n - 1]) - beta) / beta

    n_lo, n_hi = block["decay_pair"]
    r_check = rel(block["check_n"])
    passed = r_check <= block["rel_tol"] and rel(n_hi) < rel(n_lo)
    return passed, {
        "beta": beta,
        "rel_dev_at_check": r_check,
        "rel_dev_pair": [rel(n_lo), rel(n_hi)],
        "n_probability": {str(n): float(n * track[n - 1])
                          for n in (n_lo, block["check_n"], n_hi)},
    }


def _c04_llt_conditioned(block, ctx):
    m, phi = _walk_system(block["system"])
    wa = Window(m.sft, tuple(block["window_start"]))
    wb = Window(m.sft, tuple(block["window_land"]), one_sided=True)
    out = llt_conditional_check(m, phi, wa, wb, block["n"], block["k"])
    lo, hi = block["ratio_range"]
    passed = lo <= out["ratio"] <= hi
    return passed, {
        "ratio": out["ratio"],
        "exact": out["exact"],
        "main_term": out["main_term"],
        "range": [lo, hi],
    }


def _c05_arithmetic_obstruction(block, ctx):
    m, phi = _walk_system(block["system"])
    lam = twisted_eigenvalue(m, phi, (math.pi, math.pi))
    point_margin = 1.0 - abs(lam)
    scan = nonarithmeticity_scan(m, phi, grid_n=block["grid_points"])
    tol = block["margin_tol"]
    corner = all(abs(abs(c) - math.pi) <= 1e-9 for c in scan["argmax"])
    track = return_probability_track(m, phi, block["n"])
    n_even = block["n"] if block["n"] % 2 == 0 else block["n"] - 1
    even_val = n_even * float(track[n_even - 1])
    even_rel = abs(even_val - block["even_value"]) / block["even_value"]
    odd_max = float(np.max(track[0::2]))  # track[j-1] = P(S_j = 0), j odd
    passed = (abs(point_margin) <= tol and abs(scan["margin"]) <= tol
              and corner and even_rel <= block["even_rel_tol"]
              and odd_max <= block["odd_max_tol"])
    return passed, {
        "point_margin": point_margin,
        "scan_margin": scan["margin"],
        "scan_argmax": list(scan["argmax"]),
        "even_n_probability": even_val,
        "even_rel_dev": even_rel,
        "odd_max_probability": odd_max,
    }


def _c06_cylinder_return_law(block, ctx):
    m, _ = _walk_system(block["system"])
    ks_by_k = {}
    for k_str, letters in sorted(block["windows"].items(), key=lambda p: int(p[0])):
        k = int(k_str)
        window = Window(m.sft, tuple(letters))
        budget = hirata_budget(m, k, horizon=block["horizon"])
        batch = cylinder_return_samples(m, k, block["n_samples"],
                                        block["seed"], budget, window=window)
        vals, thresholds = rescaled_return_values(batch)
        ks = ks_distance(Ecdf(vals, thresholds), ReferenceCdf.exponential1())
        ks_by_k[k] = ks.statistic
    main = block["main_k"]
    ks_sorted = sorted(ks_by_k)
    passed = (ks_by_k[main] <= block["main_ks_tol"]
              and ks_by_k[ks_sorted[-1]] <= ks_by_k[ks_sorted[0]])
    return passed, {
        "ks_by_k": {str(k): v for k, v in ks_by_k.items()},
        "main_k": main,
        "main_ks_tol": block["main_ks_tol"],
    }


def _c07_lower_tail(block, ctx):
    m, phi = _walk_system(block["system"])
    out = tau_lower_tail(m, phi, block["k"], block["t_list"],
                         block["n_traj"], block["seed"])
    diffs = [abs(r["empirical"] - r["limit"]) for r in out["rows"]]
    empirical = [r["empirical"] for r in out["rows"]]
    monotone = all(a <= b for a, b in zip(empirical, empirical[1:]))
    passed = max(diffs) <= block["abs_tol"] and monotone
    return passed, {
        "rows": [{k: r[k] for k in ("t", "empirical", "limit")}
                 for r in out["rows"]],
        "max_abs_diff": max(diffs),
        "monotone": monotone,
        "censored_fraction": out["censored_fraction"],
    }


def _c08_toy_rescaled_law(block, ctx):
    sampler = ctx.sampler()
    out = toy_tau_cdf(block["delta"], block["t_list"], block["n_trials"],
                      sampler, block["seed"])
    diffs = [abs(r["empirical"] - r["limit"]) for r in out["rows"]]
    passed = max(diffs) <= block["abs_tol"]
    return passed, {
        "rows": [{k: r[k] for k in ("t", "empirical", "limit")}
                 for r in out["rows"]],
        "max_abs_diff": max(diffs),
        "sampler_cap": sampler.cap,
        "sampler_n": sampler.n_total,
    }


def _c09_gap_tail_level(block, ctx):
    sampler = ctx.sampler()
    below = int(np.searchsorted(sampler.log_values,
                                math.log(block["threshold"]), side="right"))
    phat = 1.0 - below / sampler.n_total
    dev = abs(phat - block["target"])
    passed = dev <= block["abs_tol"]
    return passed, {
        "empirical_tail": phat,
        "target": block["target"],
        "abs_dev": dev,
        "abs_tol": block["abs_tol"],
        "n_samples": sampler.n_total,
    }


def _c10_direct_vs_decomposed(block, ctx):
    out = toy_direct_vs_decomposed(block["epsilon"], block["n_trials"],
                                   block["seed"], budget=block["budget"])
    passed = out["ks"] <= block["ks_tol"]
    return passed, {
        "ks": out["ks"],
        "coverage": out["coverage"],
        "censored_direct": out["censored_direct"],
        "censored_decomposed": out["censored_decomposed"],
        "boundary_flags": out["boundary_flags"],
    }


def _c11_ball_hit_shape(block, ctx):
    law = PlanarWalkLaw(block["law"]["tag"], block["law"]["param"])
    out = planar_return_prob(law, block["n_list"], block["eps_list"],
                             block["n_trials"], block["seed"],
                             estimator=block["estimator"])
    dev_n = abs(out["slope_log_n"] - block["slope_n"])
    dev_e = abs(out["slope_log_eps"] - block["slope_eps"])
    passed = dev_n <= block["slope_tol"] and dev_e <= block["slope_tol"]
    return passed, {
        "slope_log_n": out["slope_log_n"],
        "slope_log_eps": out["slope_log_eps"],
        "targets": [block["slope_n"], block["slope_eps"]],
        "tol": block["slope_tol"],
    }


def _c12_mass_fluctuation_clt(block, ctx):
    m, _ = _walk_system(block["system"])
    samples = clt_fluctuation_samples(m, block["k"], block["n_samples"],
                                      block["seed"],
                                      boundary_corrected=block["boundary_corrected"])
    mask = m.sft.transition.astype(bool)
    log_pi = np.where(mask, m.log_stochastic, 0.0)
    sigma_h2 = asymptotic_variance_scalar(m, log_pi)
    ks = ks_distance(Ecdf(samples, np.empty(0)),
                     ReferenceCdf.normal(2.0 * sigma_h2))
    passed = ks.statistic <= block["ks_tol"]
    return passed, {
        "ks": ks.statistic,
        "sigma_h2": sigma_h2,
        "sample_variance": float(samples.var()),
        "boundary_corrected": block["boundary_corrected"],
    }


def _c13_endpoint_matrix(block, ctx):
    m, _ = _walk_system(block["system"])
    rep = q_matrix(m, tuple(block["k_range"]),
                   sample_windows=block["sample_windows"], seed=block["seed"])
    full_devs = {}
    for size in block["full_shift_sizes"]:
        mf = build_full_shift(size).measure
        repf = q_matrix(mf, tuple(block["full_shift_k_range"]),
                        sample_windows=block["sample_windows"],
                        seed=block["seed"])
        full_devs[str(size)] = float(np.abs(repf.q - 1.0).max())
    passed = (rep.constancy_deviation <= block["dev_tol"]
              and max(full_devs.values()) <= block["full_shift_q_tol"])
    return passed, {
        "constancy_deviation": rep.constancy_deviation,
        "q": rep.q.tolist(),
        "full_shift_q_dev": full_devs,
    }


def _c14_reproducibility(block, ctx):
    runs = []
    all_ok = True
    for doc in block["runs"]:
        cfg = validate_config(doc)
        digests = []
        texts = []
        for w in block["worker_counts"]:
            with tempfile.TemporaryDirectory() as tmp:
                man = run_experiment(doc, tmp, workers=w)
                digests.append(man.digest)
                texts.append({
                    name: (Path(tmp) / name).read_bytes()
                    for name in man.data["artifacts"]
                    if name.endswith((".csv", ".json"))})
        same_digest = len(set(digests)) == 1
        same_bodies = all(t == texts[0] for t in texts[1:])
        all_ok = all_ok and same_digest and same_bodies
        runs.append({
            "kind": cfg["kind"],
            "digest": digests[0][:16],
            "digests_equal": same_digest,
            "bodies_equal": same_bodies,
        })
    return all_ok, {"worker_counts": block["worker_counts"], "runs": runs}


def _c15_recurrence_trends(block, ctx):
    toy_cfg = block["toy"]
    trend = toy_tau_trend(toy_cfg["eps_list"], toy_cfg["n_trials"],
                          ctx.sampler(), toy_cfg["seed"])
    ratios = [r["median_ratio"] for r in trend["rows"]]
    limit = toy_cfg["limit"]
    devs = [abs(r - limit) for r in ratios]
    toy_ok = (all(a > b for a, b in zip(devs, devs[1:]))
              and devs[-1] <= toy_cfg["dev_tol"])

    pl = block["planar"]
    law = PlanarWalkLaw(pl["law"]["tag"], pl["law"]["param"])
    ptrend = planar_tau_trend(law, pl["eps_list"], pl["n_trials"],
                              pl["seed"], budget=pl["budget"])
    medians = [r["median_tau"] for r in ptrend["rows"]]
    planar_ok = (all(v is not None for v in medians)
                 and all(a < b for a, b in zip(medians, medians[1:])))

    ncfg = block["nested"]
    m, phi = _walk_system(ncfg["system"])
    nested = nested_extension_returns(m, phi, ncfg["kmax"], ncfg["n_traj"],
                                      ncfg["seed"], ncfg["budget"])
    taus = nested["taus"]
    first_zero = nested["first_zero"]
    violations = 0
    for i in range(taus.shape[0]):
        row = taus[i]
        for k in range(len(row) - 1):
            if row[k + 1] > 0 and (row[k] == 0 or row[k] > row[k + 1]):
                violations += 1
        if row[0] > 0 and not 0 < first_zero[i] <= row[0]:
            violations += 1
    observed = [int((taus[:, k] > 0).sum()) for k in range(taus.shape[1])]
    # demand enough uncensored shallow returns that the nesting check bites
    nested_ok = violations == 0 and observed[0] >= ncfg["min_observed_k1"]

    passed = toy_ok and planar_ok and nested_ok
    return passed, {
        "toy_ratios": ratios,
        "toy_ok": toy_ok,
        "planar_medians": medians,
        "planar_ok": planar_ok,
        "nested_violations": violations,
        "nested_observed": observed,
    }


_CRITERIA: list[tuple[int, Callable]] = [
    (1, _c01_spectral_exactness),
    (2, _c02_variance_vs_hessian),
    (3, _c03_llt_unconditioned),
    (4, _c04_llt_conditioned),
    (5, _c05_arithmetic_obstruction),
    (6, _c06_cylinder_return_law),
    (7, _c07_lower_tail),
    (8, _c08_toy_rescaled_law),
    (9, _c09_gap_tail_level),
    (10, _c10_direct_vs_decomposed),
    (11, _c11_ball_hit_shape),
    (12, _c12_mass_fluctuation_clt),
    (13, _c13_endpoint_matrix),
    (14, _c14_reproducibility),
    (15, _c15_recurrence_trends),
]


def _one_line(details: dict) -> str:
    parts = []
    for key, value in details.items():
        if isinstance(value, float):
            parts.append(f"{key}={value:.4g}")
        elif isinstance(value, (int, bool)):
            parts.append(f"{key}={value}")
        if len(parts) >= 4:
            break
    return " ".join(parts)


def run_acceptance(cfg: dict, only: Optional[set[int]] = None,
                   echo: Optional[Callable[[str], None]] = None) -> dict:
    """Run the criteria (all, or the ids in `only`) and build the report."""
    ctx = _Context(cfg)
    rows = []
    for cid, fn in _CRITERIA:
        if only is not None and cid not in only:
            continue
        block = cfg["criteria"][str(cid)]
        start = time.monotonic()
        passed, details = fn(block, ctx)
        runtime = time.monotonic() - start
        row = {
            "id": cid,
            "name": block["name"],
            "passed": bool(passed),
            "runtime_s": round(runtime, 2),
            "details": jsonable(details),
        }
        rows.append(row)
        if echo is not None:
            verdict = "PASS" if passed else "FAIL"
            echo(f"[{verdict}] {cid:2d} {block['name']} "
                 f"({runtime:.1f}s) {_one_line(details)}")
    n_pass = sum(r["passed"] for r in rows)
    if echo is not None:
        echo(f"{n_pass}/{len(rows)} criteria passed")
    return {
        "schema_version": 1,
        "code_version": __version__,
        "config_digest": digest_of(cfg),
        "criteria": rows,
        "all_passed": n_pass == len(rows),
    }
