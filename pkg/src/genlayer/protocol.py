"""Initialization protocol: discovery, probing, contracting and learning.

Sites are named ``"s"`` (source), ``"g"`` (GenAI node) and ``"d"``
(destination). Every message is recorded with its payload class and size in
bits; the ledger rollups are always recomputed from those records. Control
messages (queries, sample/estimate returns, handshakes) cost
``control_bits``, 0 by default, so the learning cost counts data-plane
payloads only.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import budget as bp
from .codec import DEVIATION, GOAL, CodecDescriptor, DataPoint, corpus_size_stats, make_codec
from .errors import (
    BudgetExhausted,
    CorpusExhausted,
    MetricIncompatible,
    NoCandidates,
    StatefulTaskViolation,
    UnknownVariant,
    Unreachable,
)
from .modes import ModeConfig, select
from .netsim import (
    DEST_DEVIATION,
    DEST_GOAL,
    NODE_AUGMENTED,
    NODE_STANDARD,
    SOURCE,
    LatencyProfile,
    Topology,
    min_cut,
    total_latency,
    transfer_time,
)
from .rq import QualitySample, RQEstimate, fit_rq, update_with_pilot

LEARNING_VARIANTS = ("source", "node", "destination")
PAYLOADS = ("prompt", "original", "approximation", "estimate", "samples", "control")
SITE_NAMES = {"s": "source", "g": "node", "d": "destination"}
DEFAULT_FITTER = {"source": "s", "node": "g", "destination": "d"}
MEASURE_SITE = {"source": "s", "node": "g", "destination": "d"}


def derive_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts]).generate_state(1)[0])


# ---------------------------------------------------------------- records

@dataclass(frozen=True)
class Event:
    seq: int
    timestamp: float
    kind: str
    src: str
    dst: str
    payload: str = ""
    size_bits: float = 0.0
    L_p: Optional[float] = None
    data_point_id: Optional[int] = None
    bucket: str = ""

    def to_dict(self) -> dict:
        return {
            "seq": self.seq, "timestamp": self.timestamp, "kind": self.kind,
            "from": self.src, "to": self.dst, "payload": self.payload,
            "size_bits": self.size_bits, "L_p": self.L_p,
            "data_point_id": self.data_point_id, "bucket": self.bucket,
        }


def trace_to_ndjson(events: Iterable[Event]) -> str:
    return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in events)


class CostLedger:
    """Message records plus rollups derived from them.

    Buckets: ``learning``, ``delivery`` (real-time forwards during learning),
    ``probe``, ``discovery``, ``pilot`` and ``operational``.
    """

    def __init__(self, variant: str = "", N_p: int = 0):
        self.variant = variant
        self.N_p = N_p
        self.records: list = []
        self.trace: list = []
        self.savings: list = []

    def bits(self, bucket: str) -> float:
        return math.fsum(r.size_bits for r in self.records if r.bucket == bucket)

    @property
    def K_L(self) -> float:
        return self.bits("learning")

    @property
    def total_bits(self) -> float:
        return math.fsum(r.size_bits for r in self.records)

    def per_point(self, bucket="learning") -> dict:
        out: dict = {}
        for r in self.records:
            if r.bucket == bucket and r.data_point_id is not None:
                out[r.data_point_id] = out.get(r.data_point_id, 0.0) + r.size_bits
        return out

    @property
    def N_L(self) -> int:
        return len(self.per_point())

    @property
    def kappa(self) -> float:
        return self.K_L / self.N_L if self.N_L else 0.0

    @property
    def post_learning_bits(self) -> float:
        return self.bits("pilot") + self.bits("operational")

    @property
    def W(self) -> float:
        return math.fsum(w for _, w in self.savings)

    def delivered_to_destination(self, bucket=None) -> list:
        return [r for r in self.records if r.dst == "d" and r.payload == "approximation"
                and (bucket is None or r.bucket == bucket)]

    def summary_row(self) -> dict:
        return {"variant": self.variant, "N_L": self.N_L, "N_p": self.N_p,
                "kappa_bits": self.kappa, "K_L_bits": self.K_L, "W_bits": self.W}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["variant", "N_L", "N_p", "kappa_bits", "K_L_bits", "W_bits"],
                           lineterminator="\n")
        w.writeheader()
        w.writerow(self.summary_row())
        return buf.getvalue()


class _Recorder:
    """Simulated clock plus trace and ledger for one session."""

    def __init__(self, ledger: CostLedger, profile: Optional[LatencyProfile] = None,
                 control_bits: float = 0.0):
        self.ledger = ledger
        self.profile = profile
        self.control_bits = float(control_bits)
        self.clock = 0.0

    def _event(self, **kw) -> Event:
        e = Event(seq=len(self.ledger.trace), timestamp=self.clock, **kw)
        self.ledger.trace.append(e)
        return e

    def send(self, src, dst, payload, bits, bucket, L_p=None, pid=None):
        if self.profile is not None:
            seg = src + dst
            if seg in self.profile.segments:
                self.clock += transfer_time(bits, self.profile.segments[seg])
            elif bits > 0:
                self.profile.path(seg)
        e = self._event(kind="message", src=src, dst=dst, payload=payload, size_bits=float(bits),
                        L_p=L_p, data_point_id=pid, bucket=bucket)
        self.ledger.records.append(e)

    def control(self, src, dst, payload, bucket, pid=None):
        self.send(src, dst, payload, self.control_bits, bucket, pid=pid)

    def local(self, kind, site, L_p=None, pid=None, bucket="", duration=0.0):
        self.clock += duration
        self._event(kind=kind, src=site, dst=site, L_p=L_p, data_point_id=pid, bucket=bucket)


# ---------------------------------------------------------------- discovery

@dataclass(frozen=True)
class NodeAdvertisement:
    node_id: str
    codec: CodecDescriptor
    style: str = "agent-card"
    modalities: tuple = ("image",)
    T_G: float = 0.0
    location: str = ""
    quality_claims: Optional[RQEstimate] = None

    def __post_init__(self):
        if self.style not in ("agent-card", "registry-entry"):
            raise ValueError(f"unknown discovery style {self.style!r}")
        if self.T_G < 0:
            raise ValueError("T_G must be non-negative")

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id, "style": self.style, "modalities": list(self.modalities),
            "T_G": self.T_G, "location": self.location, "codec": self.codec.to_dict(),
            "quality_claims": None if self.quality_claims is None else self.quality_claims.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NodeAdvertisement":
        claims = d.get("quality_claims")
        return cls(
            node_id=str(d["node_id"]),
            codec=CodecDescriptor.from_dict(d["codec"]),
            style=d.get("style", "agent-card"),
            modalities=tuple(d.get("modalities", ("image",))),
            T_G=float(d.get("T_G", 0.0)),
            location=d.get("location", ""),
            quality_claims=None if claims is None else RQEstimate.from_dict(claims),
        )


def load_registry(path) -> list:
    with open(path) as f:
        return [NodeAdvertisement.from_dict(d) for d in json.load(f)]


def discover(registry: Iterable[NodeAdvertisement], modality=None, location=None,
             family=None, ledger: Optional[CostLedger] = None, control_bits=0.0) -> list:
    """Advertisements matching every given filter, ordered by node id.

    With a ledger, agent-card nodes cost one query/response pair and
    registry-entry nodes one extra capability round-trip.
    """
    hits = [
        ad for ad in registry
        if (modality is None or modality in ad.modalities)
        and (location is None or ad.location == location)
        and (family is None or ad.codec.family == family)
    ]
    hits.sort(key=lambda ad: ad.node_id)
    if ledger is not None:
        rec = _Recorder(ledger, control_bits=control_bits)
        for ad in hits:
            rec.control("s", "g", "control", "discovery")
            rec.control("g", "s", "control", "discovery")
            if ad.style == "registry-entry":
                rec.control("s", "g", "control", "discovery")
                rec.control("g", "s", "control", "discovery")
    return hits


# ---------------------------------------------------------------- contract

@dataclass(frozen=True)
class Contract:
    node_id: str
    variant: object
    grid: tuple
    learning_variant: str = "source"
    metric_kind: str = DEVIATION
    distance: str = "mse"
    T_G: float = 0.0
    augmented: bool = False
    fitter: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if self.learning_variant not in LEARNING_VARIANTS:
            raise UnknownVariant(f"unknown learning variant {self.learning_variant!r}")
        if self.metric_kind not in (DEVIATION, GOAL):
            raise ValueError(f"unknown metric kind {self.metric_kind!r}")
        if not self.grid or any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("contract grid must be nonempty and strictly increasing")
        if self.metric_kind == GOAL and self.learning_variant != "destination":
            raise MetricIncompatible(
                f"goal-oriented quality cannot be measured in {self.learning_variant}-oriented learning")
        if self.fitter is not None and self.fitter not in ("s", "g", "d"):
            raise ValueError("fitter must be one of s, g, d")

    @property
    def cost_variant(self) -> str:
        if self.learning_variant == "source":
            return SOURCE
        if self.learning_variant == "node":
            return NODE_AUGMENTED if self.augmented else NODE_STANDARD
        return DEST_GOAL if self.metric_kind == GOAL else DEST_DEVIATION

    @property
    def fitter_site(self) -> str:
        return self.fitter or DEFAULT_FITTER[self.learning_variant]

    @property
    def quality_metric(self) -> str:
        return GOAL if self.metric_kind == GOAL else self.distance


@dataclass(frozen=True)
class ProbeReport:
    node_id: str
    latency_samples: tuple
    quality_samples: tuple
    cost_bits: float

    @property
    def mean_quality(self) -> float:
        return float(np.mean([s.quality for s in self.quality_samples])) if self.quality_samples else 0.0

    @property
    def mean_latency(self) -> float:
        return float(np.mean(self.latency_samples)) if self.latency_samples else 0.0

    @property
    def n_samples(self) -> int:
        return len(self.quality_samples)


def probe(ad: NodeAdvertisement, sizes: Sequence[float], repetitions: int,
          corpus_sample: Sequence[DataPoint], seed=0, topology: Optional[Topology] = None,
          source="s", variant=None, distance="mse", jitter: float = 0.0,
          ledger: Optional[CostLedger] = None) -> ProbeReport:
    """Mini source-oriented learning loops against one candidate node.

    Repetition ``r`` uses ``corpus_sample[r % len]``; the prompt seed depends
    only on the data point and prompt size, so repeating a deterministic
    codec on the same point reproduces the same quality. ``jitter`` adds
    seeded Gaussian noise to the advertised generation time (experimental).
    """
    if not sizes or repetitions < 1 or not corpus_sample:
        raise ValueError("probe plan and corpus sample must be nonempty")
    if topology is not None:
        if ad.node_id not in topology.nodes:
            raise Unreachable(f"node {ad.node_id} is not in the topology")
        if min_cut(topology, source, ad.node_id) <= 0 or min_cut(topology, ad.node_id, source) <= 0:
            raise Unreachable(f"node {ad.node_id} is not reachable from {source}")
    codec = make_codec(ad.codec)
    if variant is None:
        variant = codec.variants[0]
    own = ledger if ledger is not None else CostLedger("probe", len(sizes))
    start = len(own.records)
    rec = _Recorder(own)
    rng = np.random.default_rng(derive_seed(seed, 7))
    lat, qs = [], []
    for r in range(repetitions):
        x = corpus_sample[r % len(corpus_sample)]
        for j, L in enumerate(sizes):
            p = codec.encode(x, L, variant, derive_seed(seed, x.id, j))
            rec.local("encode", "s", L, x.id, "probe")
            rec.send("s", "g", "prompt", p.size_bits, "probe", L, x.id)
            xhat = codec.generate(p)
            t_g = ad.T_G + (rng.normal(0.0, jitter) if jitter > 0 else 0.0)
            lat.append(max(t_g, 0.0))
            rec.local("generate", "g", L, x.id, "probe", duration=max(t_g, 0.0))
            rec.send("g", "s", "approximation", xhat.size_bits, "probe", L, x.id)
            q = codec.measure(x, xhat, distance)
            rec.local("measure", "s", L, x.id, "probe")
            qs.append(QualitySample(x.id, L, q.value, "source"))
    cost = math.fsum(r.size_bits for r in own.records[start:])
    return ProbeReport(ad.node_id, tuple(lat), tuple(qs), cost)


def _minmax(values, higher_better=True):
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0] * len(values)
    if higher_better:
        return [(v - lo) / (hi - lo) for v in values]
    return [(hi - v) / (hi - lo) for v in values]


def score_reports(reports: Sequence[ProbeReport], weights: Mapping[str, float]) -> list:
    """Weighted min-max-normalized score per report (quality up, latency down, samples up)."""
    nq = _minmax([r.mean_quality for r in reports], True)
    nl = _minmax([r.mean_latency for r in reports], False)
    nc = _minmax([r.n_samples for r in reports], True)
    wq, wl, wc = (float(weights.get(k, 0.0)) for k in ("quality", "latency", "confidence"))
    return [wq * a + wl * b + wc * c for a, b, c in zip(nq, nl, nc)]


def contract_select(reports: Sequence[ProbeReport], weights: Mapping[str, float] = None, *,
                    ads: Optional[Iterable[NodeAdvertisement]] = None, grid: Sequence[float] = (1.0,),
                    learning_variant="source", metric_kind=DEVIATION, distance="mse",
                    variant=None, fitter=None) -> Contract:
    if not reports:
        raise NoCandidates("no probe reports to choose from")
    weights = weights or {"quality": 1.0, "latency": 1.0, "confidence": 0.0}
    scores = score_reports(reports, weights)
    best = None
    for i in sorted(range(len(reports)), key=lambda i: reports[i].node_id):
        if best is None or scores[i] > scores[best]:
            best = i
    chosen = reports[best]
    ad = None
    if ads is not None:
        ad = {a.node_id: a for a in ads}.get(chosen.node_id)
    if ad is not None:
        augmented = learning_variant == "node" and ad.codec.supports_augmented_generation
        if variant is None and ad.codec.variants:
            variant = ad.codec.variants[0]
        T_G = ad.T_G
    else:
        augmented, T_G = False, chosen.mean_latency
    return Contract(chosen.node_id, variant if variant is not None else "default", tuple(grid),
                    learning_variant, metric_kind, distance, T_G, augmented, fitter)


# ---------------------------------------------------------------- costs

def per_point_cost(variant: str, grid_bits: Sequence[float], x_bits: float, xhat_bits: float,
                   L_min_bits: Optional[float] = None) -> float:
    """Learning bits for one data point under a cost variant.

    ``grid_bits`` are the tested prompt sizes in bits. ``L_min_bits`` is the
    minimal prompt sent with augmented generation (defaults to the smallest
    grid size).
    """
    grid_bits = list(grid_bits)
    if not grid_bits:
        raise ValueError("the prompt-size grid must be nonempty")
    if any(b <= 0 for b in grid_bits) or x_bits <= 0 or xhat_bits <= 0:
        raise ValueError("sizes must be positive")
    loops = math.fsum(b + xhat_bits for b in grid_bits)
    if variant == SOURCE or variant == DEST_GOAL:
        return loops
    if variant == NODE_AUGMENTED:
        return x_bits + (min(grid_bits) if L_min_bits is None else L_min_bits)
    if variant == NODE_STANDARD:
        return x_bits + math.fsum(grid_bits)
    if variant == DEST_DEVIATION:
        return x_bits + loops
    raise UnknownVariant(f"unknown cost variant {variant!r}")


# ---------------------------------------------------------------- learning

@dataclass
class PrefitProfile:
    """A cached estimate the node can return when the source data looks familiar."""

    mean: float
    var: float
    estimate: RQEstimate


@dataclass
class LearningSession:
    contract: Contract
    codec: object
    corpus: Sequence[DataPoint]
    budget: bp.BudgetPlan
    mode: str = "pre-transmission"
    seed: int = 0
    stateful_task: bool = False
    control_bits: float = 0.0
    profile: Optional[LatencyProfile] = None
    prefit: Sequence[PrefitProfile] = ()
    prefit_tolerance: float = 0.0

    def __post_init__(self):
        if self.mode not in ("pre-transmission", "real-time"):
            raise ValueError(f"unknown learning mode {self.mode!r}")


def _augment_base_bpp(codec, variant) -> float:
    if hasattr(codec, "base_latent_bpp"):
        return codec.base_latent_bpp(variant)
    return codec.L_min(variant)


def _prompt_bits_plan(session: LearningSession, x: DataPoint) -> tuple:
    c = session.contract
    pc = x.pixel_count
    if c.cost_variant == NODE_AUGMENTED:
        return [_augment_base_bpp(session.codec, c.variant) * pc], x.size_bits
    return [L * pc for L in c.grid], x.size_bits


def apriori_cost(session: LearningSession, x: DataPoint) -> float:
    c = session.contract
    prompts, xhat = _prompt_bits_plan(session, x)
    grid_bits = [L * x.pixel_count for L in c.grid]
    L_min_bits = prompts[0] if c.cost_variant == NODE_AUGMENTED else None
    return per_point_cost(c.cost_variant, grid_bits, x.size_bits, xhat, L_min_bits)


def apriori_latency(session: LearningSession, x: DataPoint) -> float:
    from .errors import IncompleteProfile
    if session.profile is None:
        raise IncompleteProfile("a time budget needs a latency profile")
    prompts, xhat = _prompt_bits_plan(session, x)
    return total_latency(session.profile, prompts, xhat, session.contract.cost_variant, x.size_bits)


def _learn_point(rec: _Recorder, contract: Contract, codec, x: DataPoint, seed, bucket: str,
                 real_time: bool) -> list:
    """One data point's message sequence; returns the quality samples."""
    cv = contract.cost_variant
    site = MEASURE_SITE[contract.learning_variant]
    site_name = SITE_NAMES[site]
    metric = contract.quality_metric
    T_P = rec.profile.T_P if rec.profile is not None else 0.0
    T_G = rec.profile.T_G if rec.profile is not None else contract.T_G
    v = contract.variant
    samples = []
    pid = x.id

    if cv in (NODE_STANDARD, NODE_AUGMENTED):
        rec.send("s", "g", "original", x.size_bits, bucket, None, pid)
    if cv == DEST_DEVIATION:
        rec.send("s", "d", "original", x.size_bits, bucket, None, pid)

    if cv == NODE_AUGMENTED:
        base_bpp = _augment_base_bpp(codec, v)
        p = codec.encode(x, base_bpp, v, derive_seed(seed, pid, 999))
        rec.local("encode", "s", base_bpp, pid, bucket, T_P)
        rec.send("s", "g", "prompt", p.size_bits, bucket, base_bpp, pid)
        base = codec.generate(p)
        rec.local("generate", "g", base_bpp, pid, bucket, T_G)
        last = base
        for j, L in enumerate(contract.grid):
            last = codec.augment(base, x, L, derive_seed(seed, pid, j))
            rec.local("augment", "g", L, pid, bucket)
            q = codec.measure(x, last, metric)
            rec.local("measure", "g", L, pid, bucket)
            samples.append(QualitySample(pid, L, q.value, site_name))
        if real_time:
            rec.send("g", "d", "approximation", last.size_bits, "delivery", contract.grid[-1], pid)
        return samples

    last = None
    for j, L in enumerate(contract.grid):
        p = codec.encode(x, L, v, derive_seed(seed, pid, j))
        rec.local("encode", "s", L, pid, bucket, T_P)
        rec.send("s", "g", "prompt", p.size_bits, bucket, L, pid)
        xhat = codec.generate(p)
        rec.local("generate", "g", L, pid, bucket, T_G)
        if cv == SOURCE:
            rec.send("g", "s", "approximation", xhat.size_bits, bucket, L, pid)
        elif cv in (DEST_GOAL, DEST_DEVIATION):
            rec.send("g", "d", "approximation", xhat.size_bits, bucket, L, pid)
        q = codec.measure(x, xhat, metric)
        rec.local("measure", site, L, pid, bucket)
        samples.append(QualitySample(pid, L, q.value, site_name))
        last = xhat
    if real_time and cv in (SOURCE, NODE_STANDARD):
        rec.send("g", "d", "approximation", last.size_bits, "delivery", contract.grid[-1], pid)
    return samples


def _prefit_match(session: LearningSession, seen: Sequence[DataPoint]):
    if not session.prefit or session.contract.learning_variant != "node":
        return None
    if any(p.pixels is None for p in seen):
        return None
    m, v = corpus_size_stats(seen)
    for prof in session.prefit:
        if math.hypot(m - prof.mean, math.sqrt(v) - math.sqrt(prof.var)) <= session.prefit_tolerance:
            return prof.estimate
    return None


def run_learning(session: LearningSession):
    """Run the contracted learning protocol; returns ``(estimate, ledger, trace)``."""
    c = session.contract
    if session.stateful_task and c.learning_variant == "destination" and len(c.grid) > 1:
        raise StatefulTaskViolation(
            f"a stateful destination task allows one prompt size per data point, got {len(c.grid)}")
    if c.metric_kind == GOAL and c.learning_variant != "destination":
        raise MetricIncompatible("goal-oriented quality needs destination-oriented learning")
    if not session.corpus:
        raise CorpusExhausted("empty learning corpus")

    ledger = CostLedger(c.cost_variant, len(c.grid))
    rec = _Recorder(ledger, session.profile, session.control_bits)
    kind = session.budget.kind
    first = session.corpus[0]
    if kind == "fixed-count":
        n_target = int(session.budget.n_points)
    elif kind == "communication":
        n_target = bp.points_from_comm_budget(session.budget.bits, apriori_cost(session, first))
    elif kind == "time":
        n_target = bp.points_from_time_budget(session.budget.seconds, apriori_latency(session, first))
    else:
        n_target = None
    if n_target is not None:
        if n_target < 1:
            raise BudgetExhausted(f"the {kind} budget affords no data point")
        if n_target > len(session.corpus):
            raise CorpusExhausted(f"budget affords {n_target} points, corpus has {len(session.corpus)}")

    real_time = session.mode == "real-time"
    samples: list = []
    observed: list = []
    seen: list = []
    cached = None
    for n, x in enumerate(session.corpus):
        if n_target is not None and n >= n_target:
            break
        if n_target is None:
            projected = bp.projected_cost(observed, apriori_cost(session, x))
            if not bp.hybrid_should_continue(ledger.K_L, session.budget.bits, projected):
                break
        before = ledger.K_L
        samples += _learn_point(rec, c, session.codec, x, session.seed, "learning", real_time)
        observed.append(ledger.K_L - before)
        seen.append(x)
        cached = _prefit_match(session, seen)
        if cached is not None:
            break
    if not observed:
        raise BudgetExhausted("the hybrid budget affords no data point")

    fitter = c.fitter_site
    measure_site = MEASURE_SITE[c.learning_variant]
    if cached is not None:
        est = cached
        rec.local("prefit-match", "g", bucket="learning")
        fitter = "g"
    else:
        if measure_site != fitter:
            rec.control(measure_site, fitter, "samples", "learning")
        est = fit_rq(samples, grid=c.grid)
        rec.local("fit", fitter, bucket="learning")
    if fitter != "s":
        rec.control(fitter, "s", "estimate", "learning")
    return est, ledger, ledger.trace


# ---------------------------------------------------------------- operation

def run_operational(contract: Contract, codec, est: RQEstimate, cfg: ModeConfig,
                    stream: Sequence[DataPoint], schedule: bp.PilotSchedule = None, seed=0,
                    topology: Optional[Topology] = None, profile: Optional[LatencyProfile] = None,
                    ledger: Optional[CostLedger] = None):
    """Post-learning transmission with optional pilot refreshes; returns ``(ledger, W)``.

    Non-pilot points send the selected prompt (or the original when no
    prompt qualifies) and record the per-point savings
    ``w = |x| - L_P* * pixel_count``. Pilot points rerun one learning loop,
    charged to the ``pilot`` bucket, and refresh the estimate and selection.
    The final estimate is stored on ``ledger.estimate``.
    """
    schedule = schedule or bp.PilotSchedule("none")
    ledger = ledger if ledger is not None else CostLedger(contract.cost_variant, len(contract.grid))
    rec = _Recorder(ledger, profile)
    slots = set(bp.pilot_slots(schedule, len(stream)))
    selection = select(est, cfg, topology)
    rec.local("select", "s", selection.chosen_L_p, bucket="operational")
    for i, x in enumerate(stream, start=1):
        if i in slots:
            new = _learn_point(rec, contract, codec, x, derive_seed(seed, i), "pilot", False)
            est = update_with_pilot(est, new, schedule.forgetting)
            rec.local("pilot-update", "s", bucket="pilot", pid=x.id)
            selection = select(est, cfg, topology)
            rec.local("select", "s", selection.chosen_L_p, bucket="pilot")
            continue
        if selection.full_data:
            rec.send("s", "d", "original", x.size_bits, "operational", None, x.id)
            ledger.savings.append((x.id, 0.0))
            continue
        L = selection.chosen_L_p
        p = codec.encode(x, L, contract.variant, derive_seed(seed, i, x.id))
        rec.send("s", "g", "prompt", p.size_bits, "operational", L, x.id)
        xhat = codec.generate(p)
        rec.send("g", "d", "approximation", xhat.size_bits, "operational", L, x.id)
        ledger.savings.append((x.id, x.size_bits - L * x.pixel_count))
    ledger.estimate = est
    ledger.selection = selection
    return ledger, ledger.W
