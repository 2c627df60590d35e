"""Topology, capacities, flows, min-cut feasibility and the latency model.

Each directed edge is an ``i -> j`` path with a capacity ``c_ij`` (used for
feasibility), a reliable rate ``R_ij <= c_ij`` (used for timing), a current
flow and a propagation delay. Topologies are immutable; flow updates return a
new snapshot.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from .errors import IncompleteProfile, UnknownNode, UnknownVariant, ZeroRateEdge

ROLES = ("source", "destination", "relay", "genai")

SOURCE = "source"
NODE_AUGMENTED = "node-augmented"
NODE_STANDARD = "node-standard"
DEST_GOAL = "destination-goal"
DEST_DEVIATION = "destination-deviation"
COST_VARIANTS = (SOURCE, NODE_AUGMENTED, NODE_STANDARD, DEST_GOAL, DEST_DEVIATION)


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    capacity: float
    rate: float = None
    flow: float = 0.0
    propagation: float = 0.0

    def __post_init__(self):
        if self.rate is None:
            object.__setattr__(self, "rate", self.capacity)
        if not 0 <= self.flow <= self.rate <= self.capacity:
            raise ValueError(f"edge {self.src}->{self.dst} violates 0 <= f <= R <= c")
        if self.propagation < 0:
            raise ValueError("propagation delay must be non-negative")


@dataclass(frozen=True)
class Topology:
    nodes: Mapping[str, str]
    edges: Mapping[tuple, Edge] = field(default_factory=dict)

    def __post_init__(self):
        for n, role in self.nodes.items():
            if role not in ROLES:
                raise ValueError(f"node {n!r} has unknown role {role!r}")
        for role in ("source", "destination"):
            if sum(r == role for r in self.nodes.values()) > 1:
                raise ValueError(f"more than one {role} node")
        for (i, j), e in self.edges.items():
            if i not in self.nodes or j not in self.nodes:
                raise UnknownNode(f"edge {i}->{j} references an unknown node")
            if (e.src, e.dst) != (i, j):
                raise ValueError(f"edge key {(i, j)} does not match {(e.src, e.dst)}")

    @classmethod
    def from_edges(cls, nodes: Mapping[str, str], edges: Sequence[Edge]) -> "Topology":
        return cls(dict(nodes), {(e.src, e.dst): e for e in edges})

    @classmethod
    def four_role(cls, c_sr, c_rd, c_sg, c_gs, c_gd, c_ds, propagation=0.0) -> "Topology":
        """The s / r / g / d diagram from six scalar path capacities (0 omits a path)."""
        nodes = {"s": "source", "r": "relay", "g": "genai", "d": "destination"}
        spec = [("s", "r", c_sr), ("r", "d", c_rd), ("s", "g", c_sg),
                ("g", "s", c_gs), ("g", "d", c_gd), ("d", "s", c_ds)]
        edges = [Edge(i, j, float(c), propagation=propagation) for i, j, c in spec if c > 0]
        return cls.from_edges(nodes, edges)

    def role_node(self, role: str) -> str:
        for n, r in self.nodes.items():
            if r == role:
                return n
        raise UnknownNode(f"no node with role {role!r}")

    def edge(self, i: str, j: str) -> Edge:
        try:
            return self.edges[(i, j)]
        except KeyError:
            raise UnknownNode(f"no edge {i}->{j}") from None

    def with_flows(self, flows: Mapping[tuple, float]) -> "Topology":
        edges = dict(self.edges)
        for key, f in flows.items():
            edges[key] = replace(self.edge(*key), flow=float(f))
        return Topology(dict(self.nodes), edges)

    def without_edge(self, i: str, j: str) -> "Topology":
        edges = {k: e for k, e in self.edges.items() if k != (i, j)}
        return Topology(dict(self.nodes), edges)

    def _check(self, *names):
        for n in names:
            if n not in self.nodes:
                raise UnknownNode(f"unknown node {n!r}")

    def shortest_path(self, a: str, b: str) -> list:
        """Fewest-hop edge sequence from ``a`` to ``b`` over positive-capacity edges."""
        self._check(a, b)
        prev = {a: None}
        queue = deque([a])
        while queue:
            u = queue.popleft()
            if u == b:
                break
            for (i, j), e in sorted(self.edges.items()):
                if i == u and j not in prev and e.capacity > 0:
                    prev[j] = e
                    queue.append(j)
        if b not in prev:
            raise UnknownNode(f"no path {a}->{b}")
        path = []
        n = b
        while prev[n] is not None:
            path.append(prev[n])
            n = prev[n].src
        return path[::-1]

    # -- JSON
    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n, "role": r} for n, r in self.nodes.items()],
            "edges": [
                {"from": e.src, "to": e.dst, "capacity": e.capacity, "rate": e.rate,
                 "flow": e.flow, "propagation": e.propagation}
                for e in self.edges.values()
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        nodes = {n["id"]: n["role"] for n in d["nodes"]}
        edges = [
            Edge(e["from"], e["to"], float(e["capacity"]),
                 None if e.get("rate") is None else float(e["rate"]),
                 float(e.get("flow", 0.0)), float(e.get("propagation", 0.0)))
            for e in d.get("edges", [])
        ]
        return cls.from_edges(nodes, edges)

    @classmethod
    def load(cls, path) -> "Topology":
        return cls.from_dict(json.loads(Path(path).read_text()))


def min_cut(topo: Topology, a: str, b: str) -> float:
    """Max-flow value from ``a`` to ``b`` over capacities (Edmonds-Karp)."""
    topo._check(a, b)
    if a == b:
        raise ValueError("min_cut needs two distinct nodes")
    residual: dict = {}
    adj: dict = {n: set() for n in topo.nodes}
    for (i, j), e in topo.edges.items():
        residual[(i, j)] = residual.get((i, j), 0.0) + e.capacity
        residual.setdefault((j, i), 0.0)
        adj[i].add(j)
        adj[j].add(i)
    order = {n: sorted(v) for n, v in adj.items()}
    total = 0.0
    while True:
        parent = {a: None}
        queue = deque([a])
        while queue and b not in parent:
            u = queue.popleft()
            for v in order[u]:
                if v not in parent and residual[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if b not in parent:
            return total
        push = float("inf")
        v = b
        while parent[v] is not None:
            push = min(push, residual[(parent[v], v)])
            v = parent[v]
        v = b
        while parent[v] is not None:
            u = parent[v]
            residual[(u, v)] -= push
            residual[(v, u)] += push
            v = u
        total += push


def path_capacity(topo: Topology, s: str, g: str, d: str) -> float:
    return min(min_cut(topo, s, g), min_cut(topo, g, d))


def divergence(topo: Topology, i: str) -> float:
    topo._check(i)
    out = sum(e.flow for (a, _), e in topo.edges.items() if a == i)
    inflow = sum(e.flow for (_, b), e in topo.edges.items() if b == i)
    return out - inflow


def transfer_time(size_bits: float, path: Sequence[Edge]) -> float:
    """Store-and-forward delay: every hop serializes the whole message."""
    if size_bits < 0:
        raise ValueError("size must be non-negative")
    total = 0.0
    for e in path:
        if e.rate <= 0:
            raise ZeroRateEdge(f"edge {e.src}->{e.dst} has zero rate")
        total += size_bits / e.rate + e.propagation
    return total


@dataclass(frozen=True)
class LatencyProfile:
    """Per-prompt encode time, per-generation time, and one edge path per segment.

    Segment keys are ``"sg"``, ``"gs"``, ``"gd"`` and ``"sd"``.
    """

    T_P: float
    T_G: float
    segments: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        if self.T_P < 0 or self.T_G < 0:
            raise ValueError("latency components must be non-negative")

    @classmethod
    def from_topology(cls, topo: Topology, T_P: float, T_G: float) -> "LatencyProfile":
        s, g, d = topo.role_node("source"), topo.role_node("genai"), topo.role_node("destination")
        segs = {}
        for key, (a, b) in {"sg": (s, g), "gs": (g, s), "gd": (g, d), "sd": (s, d)}.items():
            try:
                segs[key] = tuple(topo.shortest_path(a, b))
            except UnknownNode:
                pass
        return cls(T_P, T_G, segs)

    @classmethod
    def uniform(cls, T_P: float, T_G: float, rate: float, propagation: float = 0.0) -> "LatencyProfile":
        segs = {k: (Edge(k[0], k[1], rate, propagation=propagation),) for k in ("sg", "gs", "gd", "sd")}
        return cls(T_P, T_G, segs)

    def path(self, segment: str):
        try:
            return self.segments[segment]
        except KeyError:
            raise IncompleteProfile(f"latency profile has no {segment!r} segment") from None


def learning_messages(variant: str, prompt_bits: Sequence[float], generated_bits: float,
                      original_bits: float = 0.0) -> list:
    """(segment, bits) for every data-plane message one learning data point exchanges.

    ``prompt_bits`` lists the prompts actually sent; for the augmented node
    variant that is the single minimal prompt.
    """
    prompts = list(prompt_bits)
    if variant == SOURCE:
        msgs = []
        for p in prompts:
            msgs += [("sg", p), ("gs", generated_bits)]
        return msgs
    if variant in (NODE_STANDARD, NODE_AUGMENTED):
        return [("sg", original_bits)] + [("sg", p) for p in prompts]
    if variant == DEST_GOAL:
        msgs = []
        for p in prompts:
            msgs += [("sg", p), ("gd", generated_bits)]
        return msgs
    if variant == DEST_DEVIATION:
        msgs = [("sd", original_bits)]
        for p in prompts:
            msgs += [("sg", p), ("gd", generated_bits)]
        return msgs
    raise UnknownVariant(f"unknown learning variant {variant!r}")


def total_latency(prof: LatencyProfile, prompt_bits, generated_bits: float, protocol_variant: str,
                  original_bits: float = 0.0) -> float:
    """Per-data-point learning latency ``T_P + T_C + T_G``.

    ``T_P`` is charged once per prompt encoded and ``T_G`` once per
    generation; the augmented node variant generates once and augments the
    rest locally.
    """
    if isinstance(prompt_bits, (int, float)):
        prompt_bits = [prompt_bits]
    msgs = learning_messages(protocol_variant, prompt_bits, generated_bits, original_bits)
    T_C = sum(transfer_time(bits, prof.path(seg)) for seg, bits in msgs)
    n = len(prompt_bits)
    return prof.T_P * n + T_C + prof.T_G * n
