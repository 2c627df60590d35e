"""Command-line entry point: ``genlayer run`` and ``genlayer validate``.

Exit codes: 0 success, 2 configuration error, 3 scenario failure. Failures
print one JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import config as C
from . import experiments as X
from .codec import DEVIATION
from .errors import ConfigInvalid, FileUnreadable, GenLayerError, ScenarioFailed
from .modes import QUALITY, ModeConfig, Selection, select
from .protocol import (CostLedger, discover, contract_select, derive_seed, per_point_cost, probe,
                       run_learning, run_operational, trace_to_ndjson)
from .rq import fit_from_matrix

EXIT_OK, EXIT_CONFIG, EXIT_SCENARIO = 0, 2, 3


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


class _Out:
    def __init__(self, root: Path):
        self.root = root
        self.files: dict = {}

    def write(self, name: str, text: str):
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / name).write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------- scenarios

def _learn(cfg, out: _Out, base_dir):
    session = C.build_session(cfg, base_dir)
    est, ledger, trace = run_learning(session)
    out.write("trace.ndjson", trace_to_ndjson(trace))
    out.write("ledger.csv", ledger.to_csv())
    out.write("estimate.json", est.to_json() + "\n")
    return session, est, ledger


def _operate(cfg, out: _Out, base_dir):
    session, est, ledger = _learn(cfg, out, base_dir)
    x = session.corpus[0]
    n_op = int(cfg["operate"]["points"])
    stream = C.build_corpus(cfg, n=n_op, start=int(cfg["corpus"]["size"]))
    mode = C.build_mode(cfg, x.pixel_count, x.size_bits, session.codec.L_min(session.contract.variant))
    topo = C.build_topology(cfg, base_dir)
    ledger, W = run_operational(session.contract, session.codec, est, mode, stream,
                                C.build_pilots(cfg), derive_seed(cfg["seed"], 99), topo,
                                session.profile, ledger)
    out.write("trace.ndjson", trace_to_ndjson(ledger.trace))
    out.write("ledger.csv", ledger.to_csv())
    out.write("estimate.json", ledger.estimate.to_json() + "\n")
    out.write("selection.json", _dump(ledger.selection.to_dict()))


def _discover(cfg, out: _Out, base_dir):
    registry = C.build_registry(cfg, base_dir)
    d = cfg["discover"]
    ledger = CostLedger("discovery", 0)
    hits = discover(registry, d["modality"], d["location"], ledger=ledger,
                    control_bits=float(cfg["learning"]["control_bits"]))
    topo = C.build_topology(cfg, base_dir)
    sample = C.build_corpus(cfg, n=min(int(cfg["corpus"]["size"]), 4))
    sizes = d["probe_sizes"] or list(cfg["grid"])
    reports, rows = [], []
    for ad in hits:
        try:
            rep = probe(ad, sizes, int(d["repetitions"]), sample, cfg["seed"], topo,
                        distance=cfg["learning"]["metric"] if cfg["learning"]["metric"] != "goal" else "mse",
                        ledger=ledger)
        except GenLayerError as err:
            rows.append({"node_id": ad.node_id, "status": type(err).__name__,
                         "mean_quality": "", "mean_latency": "", "cost_bits": ""})
            continue
        reports.append(rep)
        rows.append({"node_id": ad.node_id, "status": "probed", "mean_quality": rep.mean_quality,
                     "mean_latency": rep.mean_latency, "cost_bits": rep.cost_bits})
    out.write("candidates.json", _dump([ad.to_dict() for ad in hits]))
    out.write("probe_reports.csv", X.rows_to_csv(rows, ["node_id", "status", "mean_quality",
                                                       "mean_latency", "cost_bits"]))
    out.write("trace.ndjson", trace_to_ndjson(ledger.trace))
    lc = cfg["learning"]
    contract = contract_select(reports, d["weights"], ads=hits, grid=cfg["grid"],
                               learning_variant=lc["variant"],
                               metric_kind="goal" if lc["metric"] == "goal" else DEVIATION,
                               distance="mse" if lc["metric"] == "goal" else lc["metric"],
                               fitter=lc["fitter"])
    out.write("contract.json", _dump({
        "node_id": contract.node_id, "variant": contract.variant, "grid": list(contract.grid),
        "learning_variant": contract.learning_variant, "cost_variant": contract.cost_variant,
        "metric_kind": contract.metric_kind, "distance": contract.distance, "T_G": contract.T_G,
        "augmented": contract.augmented, "fitter": contract.fitter_site,
    }))


def _q_list(e):
    return [float(q) for q in (e["q_min"] if isinstance(e["q_min"], list) else [e["q_min"]])]


def _width(cfg, out: _Out, workers):
    e = cfg["experiment"]
    dists = X.width_distribution(C.build_law(cfg), cfg["grid"], e["budgets"], int(e["realizations"]),
                                 float(e["alpha"]), cfg["seed"], workers=workers)
    out.write("widths.csv", X.rows_to_csv(X.widths_rows(dists), X.WIDTH_FIELDS))


def _budgets(e):
    return list(range(int(e["budget_min"]), int(e["budget_max"]) + 1))


def _adherence(cfg, out: _Out, workers):
    e = cfg["experiment"]
    curves = [X.adherence_curve(C.build_law(cfg), cfg["grid"], _budgets(e), q, float(e["alpha_star"]),
                                int(e["realizations"]), int(e["test_size"]), cfg["seed"],
                                allow_full_data=bool(e["allow_full_data"]), workers=workers)
              for q in _q_list(e)]
    out.write("adherence.csv", X.rows_to_csv(X.adherence_rows(curves), X.ADHERENCE_FIELDS))


def _optimal_budget(cfg, out: _Out, workers):
    e = cfg["experiment"]
    law = C.build_law(cfg)
    grid = [float(g) for g in cfg["grid"]]
    cp = cfg["corpus"]
    pc = int(cp["width"]) * int(cp["height"])
    x_bits = float(pc * int(cp["depth"]))
    baseline = x_bits if e["baseline_bits"] is None else float(e["baseline_bits"])
    contract = C.build_contract(cfg, "default")
    kappa = per_point_cost(contract.cost_variant, [g * pc for g in grid], x_bits, x_bits,
                           float(cfg["codec"]["L_min"]) * pc)
    curves, records = [], []
    for q in _q_list(e):
        holder: list = []
        n_opt = X.optimal_budget(law, grid, q, float(e["alpha_star"]), _budgets(e),
                                 int(e["realizations"]), int(e["test_size"]), cfg["seed"],
                                 allow_full_data=bool(e["allow_full_data"]), workers=workers,
                                 curve_out=holder)
        curves += holder
        if n_opt is None:
            records.append(X.ViabilityRecord(e["method"], q, None, float("nan"), float("nan"), None))
            continue
        # one representative estimate at the optimal budget fixes the operating prompt size
        Q = law.sample(grid, n_opt, np.random.default_rng([int(cfg["seed"]), 5, n_opt]))
        est = fit_from_matrix(grid, Q)
        mode = ModeConfig(QUALITY, tuple(grid), q, float(e["alpha_star"]), pixel_count=pc)
        sel: Selection = select(est, mode)
        w = 0.0 if sel.full_data else baseline - sel.chosen_L_p * pc
        records.append(X.viability_record(e["method"], q, n_opt, n_opt * kappa, w))
    out.write("adherence.csv", X.rows_to_csv(X.adherence_rows(curves), X.ADHERENCE_FIELDS))
    out.write("viability.csv", X.rows_to_csv([r.to_row() for r in records], X.VIABILITY_FIELDS))


def _tables(cfg, out: _Out):
    out.write("table3.csv", X.rows_to_csv(X.table3_costs(), X.TABLE3_FIELDS))
    out.write("table4_check.csv", X.rows_to_csv(X.table4_crosscheck(X.load_table4()), X.TABLE4_FIELDS))


def run_scenario(cfg: dict, out_dir, base_dir=None, workers=1) -> dict:
    """Execute a validated, resolved config; returns the manifest."""
    out = _Out(Path(out_dir))
    scenario = cfg["scenario"]
    started = time.time()
    try:
        if scenario == "learn":
            _learn(cfg, out, base_dir)
        elif scenario == "operate":
            _operate(cfg, out, base_dir)
        elif scenario == "discover":
            _discover(cfg, out, base_dir)
        elif scenario == "experiment.width":
            _width(cfg, out, workers)
        elif scenario == "experiment.adherence":
            _adherence(cfg, out, workers)
        elif scenario == "experiment.optimal-budget":
            _optimal_budget(cfg, out, workers)
        else:
            _tables(cfg, out)
    except GenLayerError as err:
        raise ScenarioFailed(f"{type(err).__name__}: {err}") from err
    det = bool(cfg.get("deterministic", True))
    manifest = {
        "version": __version__,
        "scenario": scenario,
        "seed": cfg["seed"],
        "config": cfg,
        "outputs": dict(sorted(out.files.items())),
        "started_at": 0.0 if det else started,
        "elapsed_s": 0.0 if det else time.time() - started,
    }
    out.write("manifest.json", _dump(manifest))
    return manifest


# ---------------------------------------------------------------- argparse

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="genlayer", description="Generative-layer learning simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario")
    r.add_argument("--config", help="YAML config file")
    r.add_argument("--scenario", choices=C.SCENARIOS)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output directory (default: out/<scenario>)")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. --set budget.points=10")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("--config", required=True)
    v.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    return ap


def _error(kind: str, message: str, diagnostics=None):
    rec = {"error": kind, "message": message}
    if diagnostics:
        rec["diagnostics"] = diagnostics
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)


def _load(args) -> tuple:
    raw, base = {}, None
    if args.config:
        raw = C.load_raw(args.config)
        base = Path(args.config).parent
    raw = C.apply_overrides(raw, args.overrides)
    if getattr(args, "scenario", None):
        raw["scenario"] = args.scenario
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    return raw, base


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw, base = _load(args)
        diags = C.validate_dict(raw, base)
        if diags:
            raise ConfigInvalid(diags)
    except ConfigInvalid as err:
        _error("ConfigInvalid", "configuration rejected", err.diagnostics)
        return EXIT_CONFIG
    except FileUnreadable as err:
        _error("FileUnreadable", str(err))
        return EXIT_CONFIG
    if args.command == "validate":
        print(json.dumps({"valid": True}))
        return EXIT_OK
    cfg = C.resolve(raw)
    out_dir = args.out or cfg.get("out") or f"out/{cfg['scenario']}"
    try:
        run_scenario(cfg, out_dir, base, max(1, args.workers))
    except ScenarioFailed as err:
        _error("ScenarioFailed", str(err))
        return EXIT_SCENARIO
    print(json.dumps({"ok": True, "out": str(out_dir)}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
