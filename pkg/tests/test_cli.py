import csv
import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from genlayer import config as C
from genlayer.cli import EXIT_CONFIG, EXIT_OK, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(args, capsys):
    code = main([str(a) for a in args])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def write_cfg(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return p


def read_dir(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir())}


def test_tables_scenario(tmp_path, capsys):
    code, out, _ = run(["run", "--scenario", "experiment.tables", "--seed", 0, "--out", tmp_path / "t"], capsys)
    assert code == EXIT_OK and json.loads(out)["ok"]
    rows = list(csv.DictReader((tmp_path / "t" / "table3.csv").open()))
    assert any(r["variant"] == "node-augmented" and float(r["cost_Mbit"]) == 1.574 for r in rows)
    assert (tmp_path / "t" / "table4_check.csv").exists()
    manifest = json.loads((tmp_path / "t" / "manifest.json").read_text())
    assert manifest["seed"] == 0 and manifest["elapsed_s"] == 0.0
    assert set(manifest["outputs"]) == {"table3.csv", "table4_check.csv"}


def test_missing_seed(tmp_path, capsys):
    code, _, err = run(["run", "--scenario", "experiment.tables", "--out", tmp_path], capsys)
    assert code == EXIT_CONFIG
    rec = json.loads(err)
    assert rec["error"] == "ConfigInvalid"
    assert any(d.startswith("seed:") for d in rec["diagnostics"])


def test_unreadable_config(tmp_path, capsys):
    code, _, err = run(["validate", "--config", tmp_path / "nope.yaml"], capsys)
    assert code == EXIT_CONFIG and json.loads(err)["error"] == "FileUnreadable"


@pytest.mark.parametrize("name", ["learn.yaml", "operate.yaml", "operate_rate.yaml", "learn_toy.yaml"])
def test_rerun_is_byte_identical(tmp_path, capsys, name):
    for sub in ("a", "b"):
        code, _, err = run(["run", "--config", CONFIGS / name, "--out", tmp_path / sub], capsys)
        assert code == EXIT_OK, err
    assert read_dir(tmp_path / "a") == read_dir(tmp_path / "b")


def test_discover_scenario(tmp_path, capsys):
    code, _, err = run(["run", "--config", CONFIGS / "discover.yaml", "--out", tmp_path], capsys)
    assert code == EXIT_OK, err
    assert json.loads((tmp_path / "contract.json").read_text())["node_id"] == "g-east"
    names = [c["node_id"] for c in json.loads((tmp_path / "candidates.json").read_text())]
    assert "g-text" not in names


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.name)
def test_bundled_configs_validate(path):
    assert C.validate(path) == []


def test_grid_not_increasing():
    raw = C.load_raw(CONFIGS / "learn.yaml")
    raw["grid"] = [1.0, 0.5, 2.0, 3.0]
    diags = C.validate_dict(raw, CONFIGS)
    assert len(diags) == 1 and diags[0].startswith("grid:")


def test_goal_metric_with_source_learning():
    raw = C.load_raw(CONFIGS / "learn.yaml")
    raw["learning"]["metric"] = "goal"
    diags = C.validate_dict(raw, CONFIGS)
    assert len(diags) == 1 and "incompatible" in diags[0] and diags[0].startswith("learning.metric")


def test_set_overrides_take_precedence(tmp_path, capsys):
    code, _, _ = run(["run", "--config", CONFIGS / "learn.yaml", "--out", tmp_path,
                      "--set", "budget.points=4", "--set", "seed=9"], capsys)
    assert code == EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 9 and manifest["config"]["budget"]["points"] == 4
    ledger = list(csv.DictReader((tmp_path / "ledger.csv").open()))
    assert ledger[0]["N_L"] == "4"


def test_workers_do_not_change_results(tmp_path, capsys):
    base = ["run", "--config", CONFIGS / "adherence.yaml", "--set", "experiment.realizations=40",
            "--set", "experiment.budget_max=12"]
    run(base + ["--out", tmp_path / "a", "--workers", 1], capsys)
    run(base + ["--out", tmp_path / "b", "--workers", 3], capsys)
    assert read_dir(tmp_path / "a") == read_dir(tmp_path / "b")


# ---------------------------------------------------------------- fuzz

def random_config(rng):
    pick = lambda xs: xs[int(rng.integers(len(xs)))]  # noqa: E731
    scenario = pick(["learn", "learn", "operate", "operate", "discover", "experiment.width",
                     "experiment.optimal-budget", "experiment.tables", "bogus"])
    cfg = {"scenario": scenario}
    if rng.random() < 0.95:
        cfg["seed"] = int(rng.integers(-1, 50))
    n = int(rng.integers(1, 5))
    grid = np.round(np.cumsum(rng.uniform(0.05, 1.5, n)), 3).tolist()
    if rng.random() < 0.1:
        grid = grid[::-1]
    cfg["grid"] = grid
    if rng.random() < 0.25:
        cfg["codec"] = {"family": "toy-image", "variant": pick([2, 4, 8, 3]), "latent_bits": 4}
        cfg["corpus"] = {"size": int(rng.integers(1, 8)), "width": 16, "height": 16}
    else:
        cfg["codec"] = {"family": "synthetic", "sigma0": float(rng.uniform(0, 2)),
                        "gamma": pick([0.0, 0.3, -1.0])}
        cfg["corpus"] = {"size": int(rng.integers(1, 12)), "width": int(rng.integers(4, 20)),
                         "height": int(rng.integers(4, 20))}
    cfg["learning"] = {"variant": pick(["source", "node", "destination", "relay"]),
                       "metric": pick(["mse", "mae", "goal"]),
                       "augmented": bool(rng.random() < 0.3),
                       "mode": pick(["pre-transmission", "real-time"]),
                       "stateful_task": bool(rng.random() < 0.1)}
    kind = pick(["fixed-count", "communication", "time", "hybrid"])
    if kind == "fixed-count":
        cfg["budget"] = {"kind": kind, "points": int(rng.integers(0, 10))}
    elif kind == "time":
        cfg["budget"] = {"kind": kind, "seconds": float(rng.uniform(0, 3))}
        cfg["latency"] = {"T_P": 0.01, "T_G": 0.1, "rate": 1e5}
    else:
        cfg["budget"] = {"kind": kind, "bits": float(rng.uniform(0, 40000))}
    if rng.random() < 0.05:
        cfg["budget"]["extra"] = 1
    mk = pick(["quality-constrained", "rate-constrained", "unconstrained"])
    cfg["mode"] = {"kind": mk, "q_min": float(rng.uniform(0, 12)), "w_weight": float(rng.uniform(0, 3))}
    if mk == "rate-constrained":
        cfg["mode"]["lam"] = float(rng.uniform(0.1, 5))
        if rng.random() < 0.8:
            cfg["topology"] = str(CONFIGS / "topology.json")
    cfg["operate"] = {"points": int(rng.integers(0, 4))}
    if rng.random() < 0.5:
        cfg["pilots"] = {"policy": pick(["periodic", "exponential", "none"]), "period": 2}
    if scenario == "discover" and rng.random() < 0.9:
        cfg["registry"] = str(CONFIGS / "registry.json")
        cfg["discover"] = {"repetitions": int(rng.integers(0, 3))}
    cfg["experiment"] = {"budgets": [int(b) for b in rng.integers(1, 6, int(rng.integers(1, 3)))],
                         "realizations": int(rng.integers(1, 6)), "test_size": 5,
                         "budget_min": 2, "budget_max": int(rng.integers(1, 5))}
    return cfg


def test_validate_accepts_exactly_what_run_accepts(tmp_path, capsys):
    rng = np.random.default_rng(2024)
    accepted = 0
    for i in range(500):
        cfg = random_config(rng)
        path = write_cfg(tmp_path, cfg, f"c{i}.yaml")
        diags = C.validate(path)
        code, _, err = run(["run", "--config", path, "--out", tmp_path / f"o{i}"], capsys)
        assert (diags == []) == (code == EXIT_OK), (cfg, diags, err)
        if diags:
            assert code == EXIT_CONFIG
        accepted += code == EXIT_OK
    # the generator must exercise both branches
    assert 50 < accepted < 450
