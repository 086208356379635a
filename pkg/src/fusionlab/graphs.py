"""Stabilizer-level bookkeeping for linear cluster states.

A logical vertex is a frozenset of physical photon labels: singletons are
ordinary qubits, larger sets are redundantly encoded qubits carried as
|H..H> + |V..V|.  Edges connect logical vertices.

Measurement rewrite rules follow the standard cluster calculus for the
reference outcomes (Z -> H, X -> +): a Z measurement deletes the vertex with
all its bonds, an X measurement on a degree-2 vertex of a linear cluster
merges its two neighbors into one redundantly encoded vertex.  The opposite
outcomes leave the same graph up to a local correction, which is recorded as
a by-product note instead of being applied.

Serialization format (one edge per line, vertices as label sets in braces)::

    {1} -- {2,4}
    {2,4} -- {5}

Isolated vertices are listed on their own line.
"""

from __future__ import annotations

import math

import numpy as np

from .qubits import QubitState

FUSION_SUCCESS_P = 0.5
STRATEGIES = ("discard-remnants", "recycle")


def _as_vertex(v) -> frozenset:
    if isinstance(v, frozenset):
        return v
    if isinstance(v, (set, tuple, list)):
        return frozenset(v)
    return frozenset([v])


class GraphState:
    """Immutable vertex/edge bookkeeping with redundant-encoding support."""

    def __init__(self, vertices, edges=(), byproducts=()):
        self.vertices = frozenset(_as_vertex(v) for v in vertices)
        self.edges = frozenset(frozenset(_as_vertex(u) for u in e) for e in edges)
        self.byproducts = tuple(byproducts)
        seen: set = set()
        for v in self.vertices:
            if not v:
                raise ValueError("empty logical vertex")
            if seen & v:
                raise ValueError("physical labels repeated across vertices")
            seen |= v
        for e in self.edges:
            if len(e) != 2:
                raise ValueError(f"bad edge {set(e)}")
            if not all(u in self.vertices for u in e):
                raise ValueError("edge references an unknown vertex")

    # -- queries --------------------------------------------------------------

    @property
    def physical_labels(self) -> tuple:
        return tuple(sorted(label for v in self.vertices for label in v))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def length(self) -> int:
        """Number of logical vertices (the length of a linear cluster)."""
        return len(self.vertices)

    def find_vertex(self, ref) -> frozenset:
        """Resolve a vertex from a physical label or an explicit label set."""
        if isinstance(ref, (frozenset, set, tuple, list)):
            v = _as_vertex(ref)
            if v in self.vertices:
                return v
            raise ValueError(f"no vertex {set(v)}")
        for v in self.vertices:
            if ref in v:
                return v
        raise ValueError(f"no vertex contains physical label {ref!r}")

    def neighbors(self, ref) -> tuple:
        v = self.find_vertex(ref)
        out = []
        for e in self.edges:
            if v in e:
                (other,) = e - {v}
                out.append(other)
        return tuple(sorted(out, key=lambda u: min(u)))

    def degree(self, ref) -> int:
        return len(self.neighbors(ref))

    def is_linear(self) -> bool:
        """Max degree 2 and no cycles (a disjoint union of paths)."""
        if any(self.degree(v) > 2 for v in self.vertices):
            return False
        # acyclic <=> every connected component has edges = vertices - 1
        parent = {v: v for v in self.vertices}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            u, v = tuple(e)
            ru, rv = find(u), find(v)
            if ru == rv:
                return False
            parent[ru] = rv
        return True

    def endpoints(self) -> tuple:
        return tuple(sorted((v for v in self.vertices if self.degree(v) <= 1),
                            key=lambda u: min(u)))

    # -- serialization ----------------------------------------------------------

    @staticmethod
    def _fmt(v: frozenset) -> str:
        return "{" + ",".join(str(x) for x in sorted(v)) + "}"

    def serialize(self) -> str:
        lines = []
        for e in sorted(self.edges,
                        key=lambda e: tuple(sorted(tuple(sorted(u)) for u in e))):
            u, v = sorted(e, key=lambda x: tuple(sorted(x)))
            lines.append(f"{self._fmt(u)} -- {self._fmt(v)}")
        linked = {u for e in self.edges for u in e}
        for v in sorted(self.vertices - linked, key=lambda u: min(u)):
            lines.append(self._fmt(v))
        return "\n".join(lines)

    @classmethod
    def deserialize(cls, text: str) -> "GraphState":
        vertices, edges = set(), set()

        def parse_vertex(tok: str) -> frozenset:
            tok = tok.strip()
            if not (tok.startswith("{") and tok.endswith("}")):
                raise ValueError(f"bad vertex token {tok!r}")
            return frozenset(int(x) for x in tok[1:-1].split(","))

        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if "--" in line:
                left, right = line.split("--")
                u, v = parse_vertex(left), parse_vertex(right)
                vertices |= {u, v}
                edges.add(frozenset((u, v)))
            else:
                vertices.add(parse_vertex(line))
        return cls(vertices, edges)

    def __repr__(self):
        return f"GraphState({self.serialize()!r})"


# -- construction and rewrite rules ---------------------------------------------


def path(n: int) -> GraphState:
    """Linear cluster on n singleton vertices labeled 1..n."""
    if n < 1:
        raise ValueError("path length must be >= 1")
    vertices = [frozenset([i]) for i in range(1, n + 1)]
    edges = [(vertices[i], vertices[i + 1]) for i in range(n - 1)]
    return GraphState(vertices, edges)


def fuse(a: GraphState, b: GraphState, end_a, end_b, success: bool) -> GraphState:
    """Fuse two linear clusters at end vertices.

    Success merges the two ends into one vertex that keeps ``end_b``'s labels,
    giving length n + m - 1.  Failure removes both end vertices with their
    bonds, leaving lengths n - 1 and m - 1.
    """
    if set(a.physical_labels) & set(b.physical_labels):
        raise ValueError("clusters share physical labels")
    if not (a.is_linear() and b.is_linear()):
        raise ValueError("fusion is defined for linear clusters")
    va, vb = a.find_vertex(end_a), b.find_vertex(end_b)
    if a.degree(va) > 1 or b.degree(vb) > 1:
        raise ValueError("fusion ends must have degree <= 1")
    if success:
        vertices = (a.vertices - {va}) | b.vertices
        edges = set(b.edges)
        for e in a.edges:
            if va in e:
                (other,) = e - {va}
                edges.add(frozenset((other, vb)))
            else:
                edges.add(e)
        return GraphState(vertices, edges)
    vertices = (a.vertices - {va}) | (b.vertices - {vb})
    edges = {e for e in a.edges | b.edges if va not in e and vb not in e}
    return GraphState(vertices, edges)


def measure_z(g: GraphState, v, outcome: str = "H") -> GraphState:
    """Z measurement: delete the vertex and every bond at it.

    The rewrite corresponds to outcome H; outcome V needs a Z correction on
    each former neighbor, recorded as a by-product note.
    """
    vv = g.find_vertex(v)
    notes = g.byproducts
    if outcome == "V":
        for u in g.neighbors(vv):
            notes = notes + (f"Z on {GraphState._fmt(u)}",)
    elif outcome != "H":
        raise ValueError(f"unknown Z outcome {outcome!r}")
    vertices = g.vertices - {vv}
    edges = {e for e in g.edges if vv not in e}
    return GraphState(vertices, edges, notes)


def measure_x(g: GraphState, v, outcome: str = "+") -> GraphState:
    """X measurement on a linear cluster: merge the neighbors of the vertex.

    Degree 2: the two neighbors become one redundantly encoded vertex (the
    union of their label sets) inheriting their outer bonds.  Degree 1: the
    vertex is removed and the neighbor is left alone.  Degree 0: removed.
    The rewrite corresponds to outcome +; outcome - needs an X correction on
    one physical qubit of the merged vertex, recorded as a by-product note.
    """
    if not g.is_linear():
        raise ValueError("X rewrite is defined on linear clusters")
    if outcome not in ("+", "-"):
        raise ValueError(f"unknown X outcome {outcome!r}")
    vv = g.find_vertex(v)
    nbrs = g.neighbors(vv)
    notes = g.byproducts
    if len(nbrs) == 2:
        merged = nbrs[0] | nbrs[1]
        vertices = (g.vertices - {vv, nbrs[0], nbrs[1]}) | {merged}
        edges = set()
        for e in g.edges:
            if vv in e:
                continue
            if nbrs[0] in e or nbrs[1] in e:
                (other,) = e - {nbrs[0], nbrs[1]}
                edges.add(frozenset((other, merged)))
            else:
                edges.add(e)
        if outcome == "-":
            notes = notes + (f"X on physical qubit {min(merged)}",)
        return GraphState(vertices, edges, notes)
    if outcome == "-" and nbrs:
        notes = notes + (f"Z on {GraphState._fmt(nbrs[0])}",)
    vertices = g.vertices - {vv}
    edges = {e for e in g.edges if vv not in e}
    return GraphState(vertices, edges, notes)


# -- state construction and stabilizers -------------------------------------------


def build_state(g: GraphState) -> QubitState:
    """Canonical state: |+> per logical vertex, controlled phase on every edge.

    Redundantly encoded vertices expand as (|H..H> + |V..V>)/sqrt(2) blocks.
    Limited to 6 physical qubits.
    """
    labels = g.physical_labels
    if len(labels) > 6:
        raise ValueError("build_state is limited to 6 physical qubits")
    if not labels:
        raise ValueError("empty graph")
    verts = sorted(g.vertices, key=lambda v: min(v))
    vidx = {v: k for k, v in enumerate(verts)}
    nv = len(verts)
    vec = np.zeros(2 ** len(labels), dtype=complex)
    amp = 1.0 / math.sqrt(2 ** nv)
    for assignment in range(2 ** nv):
        values = [(assignment >> (nv - 1 - k)) & 1 for k in range(nv)]
        sign = 1.0
        for e in g.edges:
            u, w = tuple(e)
            if values[vidx[u]] and values[vidx[w]]:
                sign = -sign
        index = 0
        bit_of = {}
        for k, v in enumerate(verts):
            for label in v:
                bit_of[label] = values[k]
        for label in labels:
            index = (index << 1) | bit_of[label]
        vec[index] += sign * amp
    return QubitState(labels, vector=vec)


def stabilizers(g: GraphState) -> list[str]:
    """One generator per logical vertex: X on its qubits, Z on one qubit per neighbor.

    Words are over the sorted physical labels.  ``build_state`` satisfies all
    of them with expectation +1.
    """
    labels = g.physical_labels
    pos = {label: i for i, label in enumerate(labels)}
    words = []
    for v in sorted(g.vertices, key=lambda u: min(u)):
        word = ["I"] * len(labels)
        for label in v:
            word[pos[label]] = "X"
        for u in g.neighbors(v):
            word[pos[min(u)]] = "Z"
        words.append("".join(word))
    return words


# -- Monte Carlo resource estimation --------------------------------------------


def _trial_discard(target: int, rng) -> int:
    """Bell pairs used to reach ``target`` fusing fresh pairs onto one chain.

    Failure shortens the chain by one and wastes the pair; a chain below
    length 2 is discarded and restarted from a fresh pair.
    """
    pairs = 1
    length = 2
    while length < target:
        pairs += 1
        if rng.random() < FUSION_SUCCESS_P:
            length += 1
        else:
            length -= 1
            if length < 2:
                pairs += 1
                length = 2
    return pairs


def _trial_recycle(target: int, rng) -> int:
    """Bell pairs used to reach ``target`` when remnants >= 2 are reused.

    The two longest available chains are fused; fresh pairs are drawn only
    when fewer than two chains are in the pool.
    """
    pairs = 0
    pool: list[int] = []
    while True:
        if pool and max(pool) >= target:
            return pairs
        if len(pool) < 2:
            pool.append(2)
            pairs += 1
            continue
        pool.sort(reverse=True)
        a, b = pool.pop(0), pool.pop(0)
        if rng.random() < FUSION_SUCCESS_P:
            pool.append(a + b - 1)
        else:
            pool.extend(r for r in (a - 1, b - 1) if r >= 2)


def simulate_costs(target_length: int, strategy: str, trials: int, seed: int) -> np.ndarray:
    """Per-trial Bell-pair costs; trial t uses its own generator seeded seed + t."""
    if target_length < 2:
        raise ValueError("target length must be >= 2")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if strategy == "discard-remnants":
        trial = _trial_discard
    elif strategy == "recycle":
        trial = _trial_recycle
    else:
        raise ValueError(f"unknown strategy {strategy!r} (choose from {STRATEGIES})")
    costs = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        costs[t] = trial(target_length, np.random.default_rng(seed + t))
    return costs


def estimate_cost(target_length: int, strategy: str, trials: int, seed: int):
    """Monte Carlo mean Bell-pair cost and its standard error."""
    costs = simulate_costs(target_length, strategy, trials, seed)
    mean = float(np.mean(costs))
    se = float(np.std(costs, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return mean, se
