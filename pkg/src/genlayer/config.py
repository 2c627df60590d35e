"""Run configuration: YAML schema, overrides, validation and object builders.

``validate`` and the CLI runner share the same builders, so a config that
validates cleanly never fails on a schema problem at execution time.

Top-level keys::

    scenario    learn | operate | discover | experiment.width |
                experiment.adherence | experiment.optimal-budget | experiment.tables
    seed        integer, required
    out         output directory (``--out`` wins)
    codec       family (synthetic | toy-image) and its parameters
    grid        strictly increasing prompt sizes in bpp
    corpus      size, width, height, depth, seed
    learning    variant, metric, augmented, mode, stateful_task, control_bits, fitter
    budget      kind (fixed-count | communication | time | hybrid), points, bits, seconds
    mode        kind, q_min, alpha_star, w_weight, lam, L, inflate
    pilots      policy (none | periodic | exponential), period, base, forgetting
    operate     points
    latency     T_P, T_G, rate, propagation
    topology    path to a topology JSON file, or the same structure inline
    registry    path to a registry JSON file, or a list of advertisements inline
    discover    modality, location, probe_sizes, repetitions, weights
    experiment  alpha, budgets, realizations, test_size, q_min, alpha_star,
                budget_min, budget_max, allow_full_data, method, baseline_bits
"""
from __future__ import annotations

import copy
import json
import math
from pathlib import Path

import yaml

from . import budget as bp
from .codec import GOAL, SyntheticCodec, SyntheticRQLaw, ToyImageCodec, make_image_corpus, make_opaque_corpus
from .errors import ConfigInvalid, FileUnreadable, GenLayerError
from .modes import MODES, QUALITY, RATE, UNCONSTRAINED, ModeConfig
from .netsim import LatencyProfile, Topology, min_cut
from .protocol import Contract, LearningSession, NodeAdvertisement, apriori_cost, apriori_latency, discover

SCENARIOS = (
    "learn", "operate", "discover",
    "experiment.width", "experiment.adherence", "experiment.optimal-budget", "experiment.tables",
)
NEEDS_GRID = {"learn", "operate", "discover", "experiment.width", "experiment.adherence",
              "experiment.optimal-budget"}
NEEDS_LEARNING = {"learn", "operate"}

DEFAULTS = {
    "deterministic": True,
    "codec": {"family": "synthetic", "q_max": 10.0, "beta": 1.0, "sigma0": 1.0, "gamma": 0.3,
              "noise": "gaussian", "df": 3.0, "L_min": 0.1, "factors": [2, 4, 8], "latent_bits": 4,
              "pixel_noise": 0.0, "variant": None, "generation_time": 0.0},
    "corpus": {"size": 50, "width": 640, "height": 480, "depth": 8, "seed": 0},
    "learning": {"variant": "source", "metric": "mse", "augmented": False, "mode": "pre-transmission",
                 "stateful_task": False, "control_bits": 0.0, "fitter": None},
    "budget": {"kind": "fixed-count", "points": 5},
    "mode": {"kind": QUALITY, "q_min": 8.0, "alpha_star": 0.9, "w_weight": 0.0, "lam": None,
             "L": None, "inflate": True},
    "pilots": {"policy": "none", "period": 5, "base": 2.0, "forgetting": 1.0},
    "operate": {"points": 20},
    "latency": {"T_P": 0.0, "T_G": 0.0, "rate": 1e6, "propagation": 0.0},
    "discover": {"modality": "image", "location": None, "probe_sizes": None, "repetitions": 1,
                 "weights": {"quality": 1.0, "latency": 1.0, "confidence": 0.0}},
    "experiment": {"alpha": 0.10, "budgets": [2, 4, 8, 16, 32], "realizations": 200, "test_size": 50,
                   "q_min": 8.0, "alpha_star": 0.9, "budget_min": 2, "budget_max": 40,
                   "allow_full_data": True, "method": "synthetic", "baseline_bits": None},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_raw(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise FileUnreadable(f"cannot read {path}: {err}") from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as err:
        raise ConfigInvalid([f"<file>: not valid YAML ({err})"]) from None
    if not isinstance(data, dict):
        raise ConfigInvalid(["<file>: top level must be a mapping"])
    return data


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key.path=value`` strings; values are parsed as YAML scalars or lists."""
    raw = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigInvalid([f"--set {item!r}: expected key=value"])
        key, _, text = item.partition("=")
        parts = key.strip().split(".")
        node = raw
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                node[p] = {}
            node = node[p]
        try:
            node[parts[-1]] = yaml.safe_load(text)
        except yaml.YAMLError:
            node[parts[-1]] = text
    return raw


def resolve(raw: dict) -> dict:
    cfg = _merge(DEFAULTS, raw)
    if isinstance(raw.get("budget"), dict):
        # a budget section replaces the default instead of merging with it
        cfg["budget"] = copy.deepcopy(raw["budget"])
    return cfg


# ---------------------------------------------------------------- checks

def _num(diag, cfg, path, lo=None, hi=None, integer=False, allow_none=False, lo_open=False):
    node = cfg
    for p in path.split("."):
        node = node.get(p) if isinstance(node, dict) else None
    if node is None:
        if not allow_none:
            diag.append(f"{path}: required")
        return None
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        diag.append(f"{path}: must be a number")
        return None
    if integer and (not isinstance(node, int) and not float(node).is_integer()):
        diag.append(f"{path}: must be an integer")
        return None
    if not math.isfinite(node):
        diag.append(f"{path}: must be finite")
        return None
    if lo is not None and (node <= lo if lo_open else node < lo):
        diag.append(f"{path}: must be {'>' if lo_open else '>='} {lo}")
        return None
    if hi is not None and node > hi:
        diag.append(f"{path}: must be <= {hi}")
        return None
    return node


def _choice(diag, cfg, path, options):
    node = cfg
    for p in path.split("."):
        node = node.get(p) if isinstance(node, dict) else None
    if node not in options:
        diag.append(f"{path}: must be one of {list(options)}, got {node!r}")
        return None
    return node


def _grid(diag, cfg):
    g = cfg.get("grid")
    if not isinstance(g, list) or not g:
        diag.append("grid: required nonempty list of prompt sizes (bpp)")
        return None
    if any(isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x) for x in g):
        diag.append("grid: entries must be finite numbers")
        return None
    if any(x <= 0 for x in g):
        diag.append("grid: prompt sizes must be positive")
        return None
    if any(b <= a for a, b in zip(g, g[1:])):
        diag.append("grid: must be strictly increasing")
        return None
    return [float(x) for x in g]


def build_codec(cfg: dict):
    c = cfg["codec"]
    if c["family"] == "synthetic":
        law = SyntheticRQLaw(float(c["q_max"]), float(c["beta"]), float(c["sigma0"]), float(c["gamma"]),
                             c["noise"], float(c["df"]))
        codec = SyntheticCodec(law, float(c["L_min"]), float(c["generation_time"]),
                               augmented=bool(cfg["learning"].get("augmented", True)))
        return codec, "default"
    codec = ToyImageCodec(tuple(int(f) for f in c["factors"]), int(c["latent_bits"]),
                          int(cfg["corpus"]["depth"]), float(c["pixel_noise"]), float(c["generation_time"]))
    variant = c["variant"] if c["variant"] is not None else codec.factors[0]
    return codec, int(variant)


def build_corpus(cfg: dict, n=None, start=0):
    cp = cfg["corpus"]
    n = int(cp["size"]) if n is None else n
    if cfg["codec"]["family"] == "synthetic":
        return make_opaque_corpus(n, int(cp["width"]), int(cp["height"]), int(cp["depth"]), start)
    pts = make_image_corpus(start + n, int(cp["width"]), int(cp["height"]), int(cp["seed"]), int(cp["depth"]))
    return pts[start:]


def build_law(cfg: dict) -> SyntheticRQLaw:
    c = cfg["codec"]
    return SyntheticRQLaw(float(c["q_max"]), float(c["beta"]), float(c["sigma0"]), float(c["gamma"]),
                          c["noise"], float(c["df"]))


def build_contract(cfg: dict, variant) -> Contract:
    lc = cfg["learning"]
    metric = lc["metric"]
    return Contract(
        node_id="g", variant=variant, grid=tuple(cfg["grid"]), learning_variant=lc["variant"],
        metric_kind=GOAL if metric == GOAL else "deviation",
        distance="mse" if metric == GOAL else metric,
        T_G=float(cfg["codec"]["generation_time"]), augmented=bool(lc["augmented"]), fitter=lc["fitter"],
    )


def build_budget(cfg: dict) -> bp.BudgetPlan:
    b = cfg["budget"]
    kind = b["kind"]
    if kind == "fixed-count":
        return bp.BudgetPlan(kind, n_points=int(b["points"]))
    if kind == "time":
        return bp.BudgetPlan(kind, seconds=float(b["seconds"]))
    return bp.BudgetPlan(kind, bits=float(b["bits"]))


def build_pilots(cfg: dict) -> bp.PilotSchedule:
    p = cfg["pilots"]
    return bp.PilotSchedule(p["policy"], int(p.get("period") or 0), float(p.get("base") or 2.0),
                            float(p["forgetting"]))


def build_topology(cfg: dict, base_dir=None):
    t = cfg.get("topology")
    if t is None:
        return None
    if isinstance(t, str):
        path = Path(t)
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        return Topology.load(path)
    if "four_role" in t:
        return Topology.four_role(**t["four_role"])
    return Topology.from_dict(t)


def build_registry(cfg: dict, base_dir=None) -> list:
    r = cfg.get("registry")
    if r is None:
        return []
    if isinstance(r, str):
        path = Path(r)
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        data = json.loads(path.read_text())
    else:
        data = r
    return [NodeAdvertisement.from_dict(d) for d in data]


def build_profile(cfg: dict, topo):
    lat = cfg["latency"]
    if topo is not None:
        return LatencyProfile.from_topology(topo, float(lat["T_P"]), float(lat["T_G"]))
    return LatencyProfile.uniform(float(lat["T_P"]), float(lat["T_G"]), float(lat["rate"]),
                                  float(lat["propagation"]))


def build_mode(cfg: dict, pixel_count: float, L_bits: float, L_min: float) -> ModeConfig:
    m = cfg["mode"]
    kind = m["kind"]
    L = float(m["L"]) if m.get("L") is not None else L_bits
    return ModeConfig(
        mode=kind, grid=tuple(cfg["grid"]),
        Q_min=float(m["q_min"]) if kind == QUALITY else None,
        alpha_star=float(m["alpha_star"]) if kind == QUALITY else None,
        w_weight=float(m["w_weight"]),
        lam=None if m.get("lam") is None else float(m["lam"]),
        L=L if kind in (RATE, UNCONSTRAINED) else None,
        L_min=L_min, pixel_count=pixel_count, inflate=bool(m["inflate"]),
    )


def build_session(cfg: dict, base_dir=None) -> LearningSession:
    codec, variant = build_codec(cfg)
    topo = build_topology(cfg, base_dir)
    profile = build_profile(cfg, topo)
    lc = cfg["learning"]
    return LearningSession(
        contract=build_contract(cfg, variant), codec=codec, corpus=build_corpus(cfg),
        budget=build_budget(cfg), mode=lc["mode"], seed=int(cfg["seed"]),
        stateful_task=bool(lc["stateful_task"]), control_bits=float(lc["control_bits"]),
        profile=profile,
    )


# ---------------------------------------------------------------- validate

def validate_dict(raw: dict, base_dir=None) -> list:
    diag: list = []
    if not isinstance(raw, dict):
        return ["<file>: top level must be a mapping"]
    for key in raw:
        if key not in DEFAULTS and key not in ("scenario", "seed", "out", "grid", "topology", "registry"):
            diag.append(f"{key}: unknown section")
    for key, default in DEFAULTS.items():
        if isinstance(default, dict) and key in raw and not isinstance(raw[key], dict):
            diag.append(f"{key}: must be a mapping")
    if diag:
        return diag
    cfg = resolve(raw)
    scenario = _choice(diag, cfg, "scenario", SCENARIOS)
    seed = cfg.get("seed")
    if seed is None:
        diag.append("seed: required")
    elif isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        diag.append("seed: must be a non-negative integer")
    if cfg.get("out") is not None and not isinstance(cfg["out"], str):
        diag.append("out: must be a path string")
    if scenario is None:
        return diag
    if scenario == "experiment.tables":
        return diag

    grid = _grid(diag, cfg) if scenario in NEEDS_GRID else None
    family = _choice(diag, cfg, "codec.family", ("synthetic", "toy-image"))
    _num(diag, cfg, "corpus.size", lo=1, integer=True)
    _num(diag, cfg, "corpus.width", lo=1, integer=True)
    _num(diag, cfg, "corpus.height", lo=1, integer=True)
    _num(diag, cfg, "corpus.depth", lo=1, hi=16, integer=True)
    _num(diag, cfg, "corpus.seed", lo=0, integer=True)
    _num(diag, cfg, "codec.generation_time", lo=0)
    if family == "synthetic":
        _num(diag, cfg, "codec.q_max", lo=0, lo_open=True)
        _num(diag, cfg, "codec.beta", lo=0, lo_open=True)
        _num(diag, cfg, "codec.sigma0", lo=0)
        _num(diag, cfg, "codec.gamma", lo=0)
        _num(diag, cfg, "codec.L_min", lo=0, lo_open=True)
        noise = _choice(diag, cfg, "codec.noise", ("gaussian", "student-t"))
        if noise == "student-t":
            _num(diag, cfg, "codec.df", lo=2, lo_open=True)
    elif family == "toy-image":
        f = cfg["codec"].get("factors")
        if not isinstance(f, list) or not f or any(isinstance(x, bool) or not isinstance(x, int) or x < 1 for x in f):
            diag.append("codec.factors: must be a nonempty list of positive integers")
        _num(diag, cfg, "codec.latent_bits", lo=1, hi=16, integer=True)
        _num(diag, cfg, "codec.pixel_noise", lo=0)
        v = cfg["codec"].get("variant")
        if v is not None and isinstance(f, list) and v not in f:
            diag.append(f"codec.variant: {v!r} is not one of codec.factors")
    if diag:
        return diag

    if scenario.startswith("experiment."):
        _validate_experiment(diag, cfg, scenario)
        if family != "synthetic":
            diag.append("codec.family: experiments run on the synthetic law")
        return diag

    codec, variant = build_codec(cfg)
    if grid is not None:
        lmin = codec.L_min(variant)
        if grid[0] < lmin - 1e-12:
            diag.append(f"grid: smallest prompt size {grid[0]} is below the codec minimum {lmin}")
        if family == "toy-image" and grid[-1] > codec.max_bpp(variant) + 1e-12:
            diag.append(f"grid: largest prompt size {grid[-1]} exceeds {codec.max_bpp(variant)} for variant {variant}")

    if scenario in NEEDS_LEARNING:
        _validate_learning(diag, cfg, family)
    if scenario == "operate":
        _validate_operate(diag, cfg)
    if scenario == "discover":
        _validate_discover(diag, cfg, base_dir)
    if cfg.get("topology") is not None:
        try:
            build_topology(cfg, base_dir)
        except (OSError, KeyError, TypeError, ValueError, GenLayerError) as err:
            diag.append(f"topology: {err}")
    if diag:
        return diag

    if scenario == "discover" and cfg.get("topology") is not None:
        _validate_reachable(diag, cfg, base_dir)
    if scenario in NEEDS_LEARNING:
        n = _validate_budget_affordable(diag, cfg, base_dir)
        if scenario == "operate" and not diag:
            _validate_operate_feasible(diag, cfg, base_dir, n)
    return diag


def _validate_contract(diag, cfg):
    """Learning variant, metric and augmentation; every contract is built from these."""
    lc = cfg["learning"]
    v = _choice(diag, cfg, "learning.variant", ("source", "node", "destination"))
    metric = _choice(diag, cfg, "learning.metric", ("mse", "mae", GOAL))
    if not isinstance(lc.get("augmented"), bool):
        diag.append("learning.augmented: must be true or false")
    if metric == GOAL and v in ("source", "node"):
        diag.append(f"learning.metric: goal-oriented quality is incompatible with {v}-oriented learning "
                    "(quality metric compatibility: deviation-based only for source and node)")
    if lc.get("augmented") is True and v != "node":
        diag.append("learning.augmented: augmented generation applies to node-oriented learning only")
    return v


def _validate_learning(diag, cfg, family):
    lc = cfg["learning"]
    v = _validate_contract(diag, cfg)
    _choice(diag, cfg, "learning.mode", ("pre-transmission", "real-time"))
    if not isinstance(lc.get("stateful_task"), bool):
        diag.append("learning.stateful_task: must be true or false")
    _num(diag, cfg, "learning.control_bits", lo=0)
    if lc.get("fitter") not in (None, "s", "g", "d"):
        diag.append("learning.fitter: must be one of s, g, d or null")
    if lc.get("stateful_task") is True and v == "destination" and isinstance(cfg.get("grid"), list) \
            and len(cfg["grid"]) > 1:
        diag.append("learning.stateful_task: a stateful destination task requires a single grid prompt size")
    kind = _choice(diag, cfg, "budget.kind", bp.BUDGET_KINDS)
    if kind == "fixed-count":
        _num(diag, cfg, "budget.points", lo=1, integer=True)
    elif kind == "time":
        _num(diag, cfg, "budget.seconds", lo=0)
    elif kind in ("communication", "hybrid"):
        _num(diag, cfg, "budget.bits", lo=0)
    if kind is not None:
        need = {"fixed-count": "points", "time": "seconds", "communication": "bits", "hybrid": "bits"}[kind]
        for key in cfg["budget"]:
            if key not in ("kind", need):
                diag.append(f"budget.{key}: not used by a {kind} budget")
    for key in ("T_P", "T_G", "propagation"):
        _num(diag, cfg, f"latency.{key}", lo=0)
    _num(diag, cfg, "latency.rate", lo=0, lo_open=True)


def _validate_operate(diag, cfg):
    _num(diag, cfg, "operate.points", lo=0, integer=True)
    mk = _choice(diag, cfg, "mode.kind", MODES)
    _num(diag, cfg, "mode.w_weight", lo=0)
    if not isinstance(cfg["mode"].get("inflate"), bool):
        diag.append("mode.inflate: must be true or false")
    if mk == QUALITY:
        _num(diag, cfg, "mode.q_min")
        _num(diag, cfg, "mode.alpha_star", lo=0, hi=1, lo_open=True)
        a = cfg["mode"].get("alpha_star")
        if isinstance(a, (int, float)) and a == 1:
            diag.append("mode.alpha_star: must be < 1")
    if mk == RATE:
        _num(diag, cfg, "mode.lam", lo=0, lo_open=True)
        if cfg.get("topology") is None:
            diag.append("topology: rate-constrained mode needs a topology")
    if mk in (RATE, UNCONSTRAINED):
        _num(diag, cfg, "mode.L", lo=0, lo_open=True, allow_none=True)
        _num(diag, cfg, "mode.lam", lo=0, lo_open=True, allow_none=True)
    pol = _choice(diag, cfg, "pilots.policy", bp.PILOT_POLICIES)
    if pol == "periodic":
        _num(diag, cfg, "pilots.period", lo=1, integer=True)
    if pol == "exponential":
        _num(diag, cfg, "pilots.base", lo=1, lo_open=True)
    _num(diag, cfg, "pilots.forgetting", lo=0, hi=1, lo_open=True)


def _validate_discover(diag, cfg, base_dir):
    if cfg.get("registry") is None:
        diag.append("registry: discover needs a registry file or inline list")
        return
    d = cfg["discover"]
    try:
        registry = build_registry(cfg, base_dir)
    except (OSError, KeyError, TypeError, ValueError, GenLayerError) as err:
        diag.append(f"registry: {err}")
    else:
        if not discover(registry, d.get("modality"), d.get("location")):
            diag.append(f"registry: no node advertises modality {d.get('modality')!r}"
                        + (f" at {d.get('location')!r}" if d.get("location") else ""))
    _validate_contract(diag, cfg)
    _num(diag, cfg, "learning.control_bits", lo=0)
    if cfg["learning"].get("fitter") not in (None, "s", "g", "d"):
        diag.append("learning.fitter: must be one of s, g, d or null")
    _num(diag, cfg, "discover.repetitions", lo=1, integer=True)
    ps = d.get("probe_sizes")
    if ps is not None and (not isinstance(ps, list) or not ps or
                           any(isinstance(x, bool) or not isinstance(x, (int, float)) or x <= 0 for x in ps)):
        diag.append("discover.probe_sizes: must be a nonempty list of positive prompt sizes")
    w = d.get("weights")
    if not isinstance(w, dict) or any(k not in ("quality", "latency", "confidence") for k in w):
        diag.append("discover.weights: mapping over quality, latency, confidence")


def _validate_reachable(diag, cfg, base_dir):
    topo = build_topology(cfg, base_dir)
    d = cfg["discover"]
    if "s" not in topo.nodes:
        diag.append("topology: discovery probes from node s, which the topology lacks")
        return
    hits = discover(build_registry(cfg, base_dir), d.get("modality"), d.get("location"))
    if not any(a.node_id in topo.nodes and min_cut(topo, "s", a.node_id) > 0 and min_cut(topo, a.node_id, "s") > 0
               for a in hits):
        diag.append("topology: no discovered node is reachable from s and back")


def learning_points(cfg: dict, base_dir=None) -> int:
    """Number of learning data points the budget affords (sizes are deterministic)."""
    session = build_session(cfg, base_dir)
    x = session.corpus[0]
    plan = session.budget
    if plan.kind == "fixed-count":
        return int(plan.n_points)
    if plan.kind == "time":
        return bp.points_from_time_budget(plan.seconds, apriori_latency(session, x))
    return bp.points_from_comm_budget(plan.bits, apriori_cost(session, x))


def _validate_budget_affordable(diag, cfg, base_dir):
    try:
        n = learning_points(cfg, base_dir)
    except (GenLayerError, ValueError, KeyError, TypeError) as err:
        diag.append(f"budget: {err}")
        return None
    size = int(cfg["corpus"]["size"])
    if n < 1:
        diag.append(f"budget: the {cfg['budget']['kind']} budget affords no learning data point")
    elif n > size and cfg["budget"]["kind"] != "hybrid":
        diag.append(f"corpus.size: budget affords {n} points but the corpus has {size}")
    return n


def _validate_operate_feasible(diag, cfg, base_dir, n_learn):
    m = cfg["mode"]
    n_learn = min(n_learn, int(cfg["corpus"]["size"]))
    if n_learn < 2:
        diag.append("budget: operation needs at least 2 learning data points for a prediction bound")
        return
    if m["kind"] != RATE:
        return
    codec, variant = build_codec(cfg)
    topo = build_topology(cfg, base_dir)
    cp = cfg["corpus"]
    pc = int(cp["width"]) * int(cp["height"])
    L = float(m["L"]) if m.get("L") is not None else pc * int(cp["depth"])
    try:
        mc = build_mode(cfg, pc, L, codec.L_min(variant))
        # operation routes over the node ids s, g and d
        c_sg, c_gd = min_cut(topo, "s", "g"), min_cut(topo, "g", "d")
    except (GenLayerError, ValueError) as err:
        diag.append(f"mode: {err}")
        return
    if mc.lam * mc.min_prompt * pc > c_sg:
        diag.append("mode.lam: lam * L_min exceeds the s-g min-cut")
    elif mc.lam * L > c_gd:
        diag.append("mode.lam: lam * L exceeds the g-d min-cut")
    elif not any(mc.lam * x * pc <= c_sg and x * pc <= L for x in mc.grid):
        diag.append("mode.lam: no grid prompt size fits the s-g capacity and the original size")


def _validate_experiment(diag, cfg, scenario):
    e = cfg["experiment"]
    _num(diag, cfg, "experiment.alpha", lo=0, hi=1, lo_open=True)
    _num(diag, cfg, "experiment.realizations", lo=2, integer=True)
    _num(diag, cfg, "experiment.test_size", lo=1, integer=True)
    if scenario == "experiment.width":
        b = e.get("budgets")
        if not isinstance(b, list) or not b or any(isinstance(x, bool) or not isinstance(x, int) or x < 2 for x in b):
            diag.append("experiment.budgets: must be a nonempty list of integers >= 2")
    if scenario in ("experiment.adherence", "experiment.optimal-budget"):
        q = e.get("q_min")
        qs = q if isinstance(q, list) else [q]
        if not qs or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in qs):
            diag.append("experiment.q_min: number or list of numbers")
        a = e.get("alpha_star")
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not 0 < a < 1:
            diag.append("experiment.alpha_star: must be in (0, 1)")
        lo = _num(diag, cfg, "experiment.budget_min", lo=2, integer=True)
        hi = _num(diag, cfg, "experiment.budget_max", lo=2, integer=True)
        if lo is not None and hi is not None and hi < lo:
            diag.append("experiment.budget_max: must be >= budget_min")
        if not isinstance(e.get("allow_full_data"), bool):
            diag.append("experiment.allow_full_data: must be true or false")
        _num(diag, cfg, "experiment.baseline_bits", allow_none=True)
    if scenario == "experiment.optimal-budget":
        # the learning cost per point depends on the contract variant
        _validate_contract(diag, cfg)


def validate(path) -> list:
    """Diagnostics for a config file; an empty list means it is valid."""
    raw = load_raw(path)
    return validate_dict(raw, Path(path).parent)
