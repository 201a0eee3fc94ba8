"""Experiment configuration, orchestration, and bit-stable result emission.

A run is reproducible from its config file alone: the config is canonicalized
(sorted keys, compact separators), hashed, and echoed into results.json; all
randomness derives from the master seed; CSV rows are merged in trial order so
the bytes do not depend on the worker count.

Subcommands: thresholds, monomial-z, nim-predict, simulate, regimes, tune,
mcmc, gse, frechet, ultrametric.  Global flags: --config PATH, --seed U64,
--out DIR, --workers N, --json.  Output schemas are documented in
docs/formats.md.  Exit codes: 0 success, 2 validation failure, 3 guard trip
(ESS collapse, critical coupling, MD tie).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, nim, phase, sampler, series, streams, tails
from . import model as fm

SCHEMA_VERSION = 1
EXPERIMENTS = ("thresholds", "monomial-z", "nim-predict", "simulate", "regimes",
               "tune", "mcmc", "gse", "frechet", "ultrametric")

_TOP_KEYS = {"experiment", "law", "profile", "n", "K", "seeds", "params"}
_LAW_KEYS = {"family", "alpha", "gamma"}
_PROFILE_KEYS = {"alphas", "beta"}
_SEED_KEYS = {"master", "trials"}


class ConfigError(ValueError):
    """Config failed validation; carries the error list."""

    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


class GuardTrip(RuntimeError):
    """A runtime guard fired (ESS floor, MD tie, critical coupling)."""


# ---------------------------------------------------------------------------
# config handling


def validate(cfg: dict) -> list[str]:
    errors = []
    if not isinstance(cfg, dict):
        return ["config must be a JSON object"]
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        errors.append(f"unknown top-level keys: {sorted(unknown)}")
    for key in ("experiment", "law", "profile", "n", "K", "seeds"):
        if key not in cfg:
            errors.append(f"missing key: {key}")
    if errors:
        return errors
    if cfg["experiment"] not in EXPERIMENTS:
        errors.append(f"unknown experiment {cfg['experiment']!r}")
    law = cfg["law"]
    if set(law) - _LAW_KEYS:
        errors.append(f"unknown law keys: {sorted(set(law) - _LAW_KEYS)}")
    alpha = law.get("alpha")
    if not isinstance(alpha, (int, float)) or not 0 < alpha < 2:
        errors.append("tail exponent out of (0,2)")
    if law.get("family") not in ("constant", "polylog"):
        errors.append("law family must be 'constant' or 'polylog'")
    if law.get("family") == "polylog" and "gamma" not in law:
        errors.append("polylog law needs gamma")
    prof = cfg["profile"]
    if set(prof) - _PROFILE_KEYS:
        errors.append(f"unknown profile keys: {sorted(set(prof) - _PROFILE_KEYS)}")
    alphas = prof.get("alphas", {})
    if not isinstance(alphas, dict) or not alphas:
        errors.append("no interactions: profile.alphas is empty")
    else:
        try:
            ps = [int(p) for p in alphas]
        except ValueError:
            ps = []
            errors.append("profile.alphas keys must be integer orders")
        if any(p < 2 for p in ps):
            errors.append("interaction orders must be >= 2")
        if isinstance(cfg.get("n"), int) and ps and max(ps) > cfg["n"]:
            errors.append(f"alpha support max order {max(ps)} exceeds n={cfg['n']}")
        if any(not isinstance(a, (int, float)) or a < 0 for a in alphas.values()):
            errors.append("alpha(p) must be nonnegative numbers")
    if not isinstance(prof.get("beta"), (int, float)) or prof.get("beta", 0) <= 0:
        errors.append("profile.beta must be positive")
    if not isinstance(cfg["n"], int) or cfg["n"] < 2:
        errors.append("n must be an integer >= 2")
    if not isinstance(cfg["K"], int) or cfg["K"] < 1:
        errors.append("K must be an integer >= 1")
    seeds = cfg["seeds"]
    if set(seeds) - _SEED_KEYS:
        errors.append(f"unknown seed keys: {sorted(set(seeds) - _SEED_KEYS)}")
    if not isinstance(seeds.get("master"), int):
        errors.append("seeds.master must be an integer")
    if not isinstance(seeds.get("trials", 1), int) or seeds.get("trials", 1) < 1:
        errors.append("seeds.trials must be a positive integer")
    if "params" in cfg and not isinstance(cfg["params"], dict):
        errors.append("params must be an object")
    return errors


def emit(cfg: dict) -> str:
    """Canonical config text: sorted keys, compact separators."""
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def parse(text: str) -> dict:
    return json.loads(text)


def config_digest(cfg: dict) -> str:
    return hashlib.sha256(emit(cfg).encode()).hexdigest()


def law_from(cfg: dict) -> tails.TailLaw:
    law = cfg["law"]
    return tails.TailLaw(alpha=float(law["alpha"]), family=law["family"],
                         gamma=float(law.get("gamma", 0.0)))


def profile_from(cfg: dict) -> fm.MixtureProfile:
    prof = cfg["profile"]
    return fm.MixtureProfile(alphas={int(p): float(a) for p, a in prof["alphas"].items()},
                             beta=float(prof["beta"]))


def _params(cfg, allowed: dict):
    """Validated params with defaults; unknown keys rejected."""
    raw = cfg.get("params", {})
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError([f"unknown params for {cfg['experiment']}: {sorted(unknown)}"])
    out = dict(allowed)
    out.update(raw)
    missing = [k for k, v in out.items() if v is _REQUIRED]
    if missing:
        raise ConfigError([f"missing params for {cfg['experiment']}: {missing}"])
    return out


_REQUIRED = object()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


@dataclass
class ExperimentResult:
    summary: dict
    columns: list[str]
    rows: list[dict]
    extra_csv: dict[str, tuple[list[str], list[dict]]] | None = None
    extra_json: dict[str, dict] | None = None
    extra_bytes: dict[str, bytes] | None = None
    exit_code: int = 0


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def write_results(result: ExperimentResult, cfg: dict, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    record = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg["experiment"],
        "tool_version": __version__,
        "config_digest": config_digest(cfg),
        "config": cfg,
        "summary": result.summary,
    }
    (out_dir / "results.json").write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")
    _write_csv(out_dir / "results.csv", result.columns, result.rows)
    for name, (cols, rows) in (result.extra_csv or {}).items():
        _write_csv(out_dir / name, cols, rows)
    for name, obj in (result.extra_json or {}).items():
        (out_dir / name).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    for name, blob in (result.extra_bytes or {}).items():
        (out_dir / name).write_bytes(blob)
    return record


def _map_indexed(fn, payloads, workers: int):
    """Order-preserving map; results are merged by index for any worker count."""
    if workers <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, payloads, chunksize=max(1, len(payloads) // (4 * workers))))


# ---------------------------------------------------------------------------
# experiments


def _exp_thresholds(cfg, workers):
    p = _params(cfg, {"p_max": _REQUIRED, "h_factor": 1.1, "curve_points": 0})
    rows = []
    for order in range(2, p["p_max"] + 1):
        hs = phase.h_star(order)
        h = hs * p["h_factor"]
        rows.append({
            "p": order, "h_min": phase.h_min(order), "h_star": hs,
            "lambda_above": phase.lambda_p(order, h),
            "f_above": phase.f_p(order, h),
            "t_above": phase.t_magnitude(order, h),
        })
    cols = ["p", "h_min", "h_star", "lambda_above", "f_above", "t_above"]
    extra = {}
    if p["curve_points"]:
        crows = []
        for order in range(2, p["p_max"] + 1):
            hs = phase.h_star(order)
            for x in np.linspace(1.02, 2.0, p["curve_points"]):
                h = hs * float(x)
                crows.append({"p": order, "H_over_hstar": float(x),
                              "f": phase.f_p(order, h),
                              "lam": phase.lambda_p(order, h)})
        extra["curves.csv"] = (["p", "H_over_hstar", "f", "lam"], crows)
    return ExperimentResult({"p_max": p["p_max"], "rows": len(rows)}, cols, rows,
                            extra_csv=extra or None)


def _exp_monomial_z(cfg, workers):
    p = _params(cfg, {"n": _REQUIRED, "p": _REQUIRED, "H": _REQUIRED,
                      "parity": "even", "eps": 0.1})
    prof = series.log_partition_series(p["n"], p["p"], float(p["H"]), parity=p["parity"])
    win = series.concentration_window(prof, eps=p["eps"])
    rows = [{"ell": int(l), "log_term": float(t)}
            for l, t in zip(prof.ells, prof.log_terms)]
    summary = {
        "log_sum": prof.log_sum,
        "argmax_ell": prof.argmax_ell,
        "lambda_pred": win.lambda_pred,
        "window_mass": win.window_mass,
        "phase": series.classify_phase(p["p"], float(p["H"])),
        "eps": p["eps"],
        "truncation_bound": prof.truncation_bound,
        "n": p["n"],
        "p": p["p"],
        "H": float(p["H"]),
    }
    return ExperimentResult(summary, ["ell", "log_term"], rows)


def _nim_spec_from(terms, n) -> nim.NimSpec:
    return nim.NimSpec.of([(float(t["coef"]), tuple(t["indices"])) for t in terms], n)


def _exp_nim_predict(cfg, workers):
    p = _params(cfg, {"terms": _REQUIRED, "eps": 0.1})
    prof = profile_from(cfg)
    spec = _nim_spec_from(p["terms"], cfg["n"])
    val = nim.validate_nim(spec)
    if not val.ok:
        raise ConfigError([f"intersecting terms: {v[:2]}" for v in val.violations])
    try:
        pred = nim.nim_free_energy_prediction(spec, prof.beta)
    except (nim.CriticalCouplingError, nim.MDTieError) as e:
        raise GuardTrip(str(e)) from e
    windows = nim.concentration_sets(spec, prof.beta, p["eps"])
    rows = []
    for t, (c, idx) in enumerate(spec.terms):
        order = len(idx)
        kind = series.classify_phase(order, prof.beta * c)
        rows.append({"term": t, "p": order, "coef": c,
                     "h_eff": prof.beta * c, "phase": kind,
                     "f_value": phase.f_p(order, prof.beta * c)})
    summary = {
        "kind": pred.kind, "p_min": pred.p_min, "log_z": pred.log_z,
        "log_z_scale": pred.log_z_scale,
        "free_energy_per_n": pred.free_energy_per_n,
        "dominant_term": pred.dominant_term,
        "windows": [w.__dict__ for w in windows],
    }
    if pred.kind == "dominant":
        geom = nim.geometry_prediction(spec, prof.beta)
        summary["geometry"] = {
            "t": geom.t, "p_dom": geom.p_dom,
            "component_count": geom.component_count,
            "overlap_support": list(geom.overlap_support),
            "restricted_overlap": geom.restricted_overlap,
            "rsb_level": geom.rsb_level,
            "ultrametric_violation_expected": geom.ultrametric_violation_expected,
        }
    else:
        summary["overlap_zero"] = nim.overlap_zero_prediction(spec, prof.beta).__dict__
    return ExperimentResult(summary, ["term", "p", "coef", "h_eff", "phase", "f_value"], rows)


def _tensor_from(cfg, params) -> fm.CouplingTensor:
    planted = params.get("planted")
    if planted:
        law = cfg.get("law", {})
        return fm.planted_tensor(
            cfg["n"], [(float(t["value"]), tuple(t["indices"])) for t in planted],
            law_alpha=float(law["alpha"]) if law else None)
    return fm.sample_model(profile_from(cfg), law_from(cfg), cfg["n"], cfg["K"],
                           cfg["seeds"]["master"])


def _geometry_dict(geom):
    if geom is None:
        return None
    return {"t": geom.t, "p_dom": geom.p_dom,
            "component_count": geom.component_count,
            "overlap_support": list(geom.overlap_support),
            "restricted_overlap": geom.restricted_overlap,
            "rsb_level": geom.rsb_level,
            "ultrametric_violation_expected": geom.ultrametric_violation_expected}


def _exp_simulate(cfg, workers):
    p = _params(cfg, {"planted": None, "guard": phase.CRITICAL_BAND,
                      "f_guard": None, "delta": 0.0})
    prof = profile_from(cfg)
    tensor = _tensor_from(cfg, p)
    report = fm.classify_regime(tensor, prof, guard=p["guard"], f_guard=p["f_guard"])
    rows = []
    for order in tensor.orders:
        if order not in prof.alphas:
            continue
        blk = tensor.block(order)
        h1 = blk.h1()
        he = prof.beta * prof.alphas[order] * h1
        rows.append({"p": order, "h1": h1, "h_eff": he,
                     "threshold_gap": report.threshold_gaps.get(order),
                     "f_value": report.f_values.get(order)})
    preds = report.predictions
    summary = {
        "kind": report.kind, "p": report.p_dom, "h_eff": report.h_eff,
        "dominant_index": list(report.dominant_index) if report.dominant_index else None,
        "f_gap": report.f_gap,
        "conditioning_delta": p["delta"],
        "predictions": {
            "free_energy_per_n": preds.free_energy_per_n,
            "log_z": preds.log_z,
            "log_z_scale": preds.log_z_scale,
            "gse_analytic": preds.gse_analytic,
            "fluctuation_scale": preds.fluctuation_scale,
            "fluctuation_value": preds.fluctuation_value,
            "geometry": _geometry_dict(preds.geometry),
        },
    }
    code = 3 if report.kind in ("MDTie", "Critical") else 0
    return ExperimentResult(summary, ["p", "h1", "h_eff", "threshold_gap", "f_value"],
                            rows, exit_code=code)


_REGIME_CHUNK = 50_000


def _regime_chunk(payload):
    alphas, beta, law_alpha, master, chunk_id, trials = payload
    prof = fm.MixtureProfile(alphas={int(p): a for p, a in alphas}, beta=beta)
    rng = streams.stream(master, streams.TAG_REGIME, chunk_id)
    probs = fm.regime_probabilities(prof, law_alpha, trials, rng)
    return probs.p1, probs.p_t


def _exp_regimes(cfg, workers):
    p = _params(cfg, {"trials": _REQUIRED})
    prof = profile_from(cfg)
    law = law_from(cfg)
    trials = int(p["trials"])
    master = cfg["seeds"]["master"]
    chunks = []
    done = 0
    cid = 0
    while done < trials:
        t = min(_REGIME_CHUNK, trials - done)
        chunks.append((tuple(prof.alphas.items()), prof.beta, law.alpha, master, cid, t))
        done += t
        cid += 1
    parts = _map_indexed(_regime_chunk, chunks, workers)
    weights = np.array([c[5] for c in chunks], dtype=float)
    weights /= weights.sum()
    p1 = float(np.dot(weights, [pt[0] for pt in parts]))
    p_t = {q: float(np.dot(weights, [pt[1][q] for pt in parts])) for q in prof.support}
    quad = fm.frechet_p1_quadrature(prof, law.alpha)
    rows = [{"regime": "p1", "p": None, "probability": p1}]
    rows += [{"regime": "p_t", "p": q, "probability": p_t[q]} for q in prof.support]
    summary = {"p1": p1, "p_t": {str(q): v for q, v in p_t.items()},
               "quadrature_p1": quad, "trials": trials}
    return ExperimentResult(summary, ["regime", "p", "probability"], rows)


def _exp_tune(cfg, workers):
    p = _params(cfg, {"targets": _REQUIRED, "tolerance": 0.02, "budget": 60,
                      "trials_per_eval": 20000})
    law = law_from(cfg)
    prof = profile_from(cfg)
    rng = streams.stream(cfg["seeds"]["master"], streams.TAG_REGIME, 999)
    res = fm.tune_profile({int(t): float(a) for t, a in p["targets"].items()},
                          law.alpha, prof.beta, p["tolerance"], p["budget"], rng,
                          trials_per_eval=p["trials_per_eval"])
    rows = [{"p": t, "target": a, "achieved": res.achieved.p_t.get(t, 0.0)}
            for t, a in sorted(res.targets.items())]
    profile_file = {"alphas": {str(q): v for q, v in res.profile.alphas.items()},
                    "beta": res.profile.beta}
    summary = {"converged": res.converged, "max_gap": res.max_gap,
               "evaluations": res.evaluations, "p1": res.achieved.p1,
               "p_t": {str(q): v for q, v in res.achieved.p_t.items()},
               "profile": profile_file}
    return ExperimentResult(summary, ["p", "target", "achieved"], rows,
                            extra_json={"profile.json": profile_file})


def _dominant_info(tensor, prof):
    report = fm.classify_regime(tensor, prof)
    if report.kind == "Fdom":
        geom = report.predictions.geometry
        return report, list(report.dominant_index), geom
    return report, None, None


def _frames_blob(batch: sampler.ReplicaBatch) -> bytes:
    """Binary frames: per record u32 n, u64 step, f64[n] coords (little-endian)."""
    n = batch.n
    out = bytearray()
    for c in range(batch.n_chains):
        for t in range(batch.samples.shape[1]):
            step = t * batch.thin
            out += np.uint32(n).tobytes()
            out += np.uint64(step).tobytes()
            out += batch.samples[c, t].astype("<f8").tobytes()
    return bytes(out)


def _exp_mcmc(cfg, workers):
    p = _params(cfg, {"steps": 20000, "chains": 4, "proposal_scale": 0.2,
                      "thin": 10, "planted": None, "save_frames": False,
                      "rounds": 1, "max_overlap_rows": 20000})
    prof = profile_from(cfg)
    tensor = _tensor_from(cfg, p)
    master = cfg["seeds"]["master"]
    report, dom, geom = _dominant_info(tensor, prof)
    rng0 = streams.stream(master, streams.TAG_MCMC, 10_000)
    if dom is not None:
        # stratified protocol: one chain per M+ component, started inside it
        # (nucleation from outside is exp(n)-slow)
        sign = 1 if report.h_eff >= 0 else -1
        patterns = nim.m_plus(len(dom), sign) * int(p["rounds"])
        inits = sampler.orthant_inits(tensor.n, dom, patterns, rng0,
                                      magnitude=math.sqrt(geom.t * tensor.n))
    else:
        inits = sampler.uniform_sphere_batch(tensor.n, int(p["chains"]), rng0)
    batch = sampler.run_chains(tensor, prof, int(p["steps"]), inits, master,
                               proposal_scale=float(p["proposal_scale"]),
                               thin=int(p["thin"]))
    rows = []
    for c in range(batch.n_chains):
        row = {"chain": c, "acceptance_rate": float(batch.acceptance_rates[c])}
        row["crossings"] = (sampler.component_crossings(batch.samples[c], dom)
                            if dom is not None else None)
        rows.append(row)
    exclude = len(dom) if dom is not None else 0
    ov = sampler.replica_overlaps(batch, exclude_first=exclude)
    cap = int(p["max_overlap_rows"])
    orow = [{"pair_sample": i, "overlap": float(a), "restricted_overlap": float(b)}
            for i, (a, b) in enumerate(zip(ov.overlaps[:cap], ov.restricted_overlaps[:cap]))]
    extra = {"overlaps.csv": (["pair_sample", "overlap", "restricted_overlap"], orow)}
    summary = {
        "kind": report.kind,
        "chains": batch.n_chains, "steps": batch.steps, "thin": batch.thin,
        "overlap_second_moment": ov.second_moment,
        "restricted_overlap_second_moment": ov.restricted_second_moment,
    }
    if dom is not None:
        occ = sampler.occupancy(batch, dom, 1 if report.h_eff >= 0 else -1)
        means, _ = sampler.spin_magnitude(batch, dom)
        extra["occupancy.csv"] = (["pattern", "frequency", "product_sign"],
                                  [{"pattern": "".join("+" if s > 0 else "-" for s in k),
                                    "frequency": f,
                                    "product_sign": int(math.prod(k))}
                                   for k, f in sorted(occ.frequencies.items())])
        summary.update({
            "t_predicted": geom.t,
            "dominant_indices": dom,
            "spin_magnitude_mean": [float(m) for m in means],
            "negative_product_mass": occ.negative_mass,
            "component_count_predicted": geom.component_count,
            "overlap_support": list(geom.overlap_support),
        })
    result = ExperimentResult(summary, ["chain", "acceptance_rate", "crossings"],
                              rows, extra_csv=extra)
    if p["save_frames"]:
        result.extra_bytes = {"chains.bin": _frames_blob(batch)}
        result.extra_json = {"chains.meta.json": {
            "n": batch.n, "chains": batch.n_chains,
            "samples_per_chain": int(batch.samples.shape[1]),
            "thin": batch.thin, "endianness": "little",
            "record_layout": "u32 n, u64 step, f64[n] coords",
            "chain_ids": list(batch.chain_ids)}}
    return result


def _exp_gse(cfg, workers):
    p = _params(cfg, {"restarts": 6, "tensors": None, "include_beta": False})
    prof = profile_from(cfg)
    master = cfg["seeds"]["master"]
    trials = cfg["seeds"].get("trials", 1)
    rows = []
    if p["tensors"] is not None:
        tensor_list = [fm.planted_tensor(cfg["n"],
                                         [(float(t["value"]), tuple(t["indices"]))
                                          for t in spec])
                       for spec in p["tensors"]]
    else:
        law = law_from(cfg)
        tensor_list = [fm.sample_model(prof, law, cfg["n"], cfg["K"], master + i)
                       for i in range(trials)]
    for i, tensor in enumerate(tensor_list):
        rng = streams.stream(master, streams.TAG_GSE, i)
        ana = fm.gse_analytic(tensor, prof, include_beta=p["include_beta"])
        opt = sampler.gse_optimize(tensor, prof, int(p["restarts"]), rng)
        gap = abs(opt.energy_per_n - ana.value) / ana.value if ana.value else 0.0
        mag_err = None
        if ana.index:
            planted = math.sqrt(tensor.n / ana.p)
            mags = np.abs(opt.config[list(ana.index)])
            mag_err = float(np.max(np.abs(mags - planted)) / planted)
        rows.append({"trial": i, "p_dom": ana.p, "gse_analytic": ana.value,
                     "gse_numeric": opt.energy_per_n, "rel_gap": gap,
                     "support_magnitude_err": mag_err, "restart": opt.restart})
    summary = {"tensors": len(rows),
               "max_rel_gap": max((r["rel_gap"] for r in rows), default=0.0)}
    return ExperimentResult(summary, ["trial", "p_dom", "gse_analytic", "gse_numeric",
                                      "rel_gap", "support_magnitude_err", "restart"], rows)


def _frechet_trial(payload):
    law_args, n, p, master, trial = payload
    law = tails.TailLaw(*law_args)
    rng = streams.stream(master, streams.TAG_TRIAL, trial)
    total = math.comb(n, p)
    b = tails.quantile_b(law, n, p)
    if total <= fm.EXACT_LIMIT:
        u = float(np.min(1.0 - rng.random(total)))
    else:
        e1 = rng.standard_exponential()
        u = float(e1 / rng.gamma(shape=float(total + 1), scale=1.0))
    return tails.quantile(law, max(u, 1e-300)) / b


def _exp_frechet(cfg, workers):
    p = _params(cfg, {"trials": 2000, "p": 2})
    law = law_from(cfg)
    master = cfg["seeds"]["master"]
    payloads = [((law.alpha, law.family, law.gamma), cfg["n"], int(p["p"]), master, t)
                for t in range(int(p["trials"]))]
    maxima = _map_indexed(_frechet_trial, payloads, workers)
    ks = tails.frechet_gof(maxima, law.alpha)
    rows = [{"trial": t, "max_rescaled": float(m)} for t, m in enumerate(maxima)]
    summary = {"ks": ks, "trials": len(maxima), "alpha": law.alpha,
               "log_comb": tails.log_comb(cfg["n"], int(p["p"]))}
    return ExperimentResult(summary, ["trial", "max_rescaled"], rows)


def _exp_ultrametric(cfg, workers):
    p = _params(cfg, {"steps": 20000, "rounds": 1, "margin_factor": 0.5,
                      "planted": _REQUIRED, "thin": 10, "margins": 8})
    prof = profile_from(cfg)
    tensor = _tensor_from(cfg, p)
    report, dom, geom = _dominant_info(tensor, prof)
    if dom is None:
        raise GuardTrip("ultrametric experiment needs a dominant above-threshold term")
    master = cfg["seeds"]["master"]
    rng0 = streams.stream(master, streams.TAG_MCMC, 10_001)
    sign = 1 if report.h_eff >= 0 else -1
    patterns = nim.m_plus(len(dom), sign) * int(p["rounds"])
    inits = sampler.orthant_inits(tensor.n, dom, patterns, rng0,
                                  magnitude=math.sqrt(geom.t * tensor.n))
    batch = sampler.run_chains(tensor, prof, int(p["steps"]), inits, master,
                               thin=int(p["thin"]))
    t = geom.t
    headline = sampler.ultrametric_test(batch, p["margin_factor"] * t,
                                        max_time_points=50)
    rows = []
    for m in np.linspace(0.0, 1.5 * t, int(p["margins"])):
        rep = sampler.ultrametric_test(batch, float(m), max_time_points=50)
        rows.append({"margin": float(m), "violation_frequency": rep.violation_frequency})
    summary = {"p_dom": geom.p_dom, "t": t,
               "margin": headline.margin,
               "violation_frequency": headline.violation_frequency,
               "evaluations": headline.n_evaluations,
               "floor_quarter_power": 0.5 / geom.component_count ** 2}
    return ExperimentResult(summary, ["margin", "violation_frequency"], rows)


_HANDLERS = {
    "thresholds": _exp_thresholds,
    "monomial-z": _exp_monomial_z,
    "nim-predict": _exp_nim_predict,
    "simulate": _exp_simulate,
    "regimes": _exp_regimes,
    "tune": _exp_tune,
    "mcmc": _exp_mcmc,
    "gse": _exp_gse,
    "frechet": _exp_frechet,
    "ultrametric": _exp_ultrametric,
}


def run(cfg: dict, out_dir: Path, workers: int = 1) -> tuple[dict, int]:
    """Validate, dispatch, write results.json / results.csv; returns (record, code)."""
    errors = validate(cfg)
    if errors:
        raise ConfigError(errors)
    try:
        result = _HANDLERS[cfg["experiment"]](cfg, workers)
    except (sampler.EssError, nim.CriticalCouplingError, nim.MDTieError, GuardTrip) as e:
        raise GuardTrip(str(e)) from e
    record = write_results(result, cfg, out_dir)
    return record, result.exit_code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="heavyspin",
        description="Heavy-tailed mixed p-spin spherical model experiments")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="experiment config file (JSON)")
    ap.add_argument("--seed", type=int, default=None, help="override seeds.master")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--json", action="store_true", help="print the summary to stdout")
    args = ap.parse_args(argv)
    try:
        cfg = parse(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if cfg.get("experiment") not in (None, args.experiment):
        print(f"config names experiment {cfg.get('experiment')!r}, "
              f"command line says {args.experiment!r}", file=sys.stderr)
        return 2
    cfg["experiment"] = args.experiment
    if args.seed is not None:
        cfg.setdefault("seeds", {})["master"] = args.seed
    try:
        record, code = run(cfg, Path(args.out), workers=args.workers)
    except ConfigError as e:
        for msg in e.errors:
            print(f"invalid config: {msg}", file=sys.stderr)
        return 2
    except GuardTrip as e:
        print(f"guard trip: {e}", file=sys.stderr)
        return 3
    if args.json:
        print(json.dumps(record["summary"], sort_keys=True, indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
