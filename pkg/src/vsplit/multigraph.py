"""Rooted loopless multigraphs: splitting, components, canonical codes, interchange.

Edges are stored as bundles: an (u, v) pair with u < v maps to its parallel-edge
multiplicity. Graph values are treated as immutable once returned; every
operation builds a fresh value. Optional old/new tags per bundle support the
edge-ancestry experiments (old_count + new_count == multiplicity always).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

from .rng import RandomStream

VertexId = int
EdgeKey = tuple[int, int]

CANON_SIZE_CAP = 8
CANON_MULT_CAP = 15


class GraphFormatError(ValueError):
    """Malformed interchange document; carries a character position when known."""

    def __init__(self, message: str, pos: int | None = None):
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)
        self.pos = pos


def _ekey(u: int, v: int) -> EdgeKey:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class RootedMultigraph:
    root: int
    vertices: frozenset[int]
    edges: dict[EdgeKey, int] = field(default_factory=dict)
    tags: dict[EdgeKey, tuple[int, int]] | None = None

    def __post_init__(self):
        if self.root not in self.vertices:
            raise ValueError("root is not a vertex")
        for (u, v), m in self.edges.items():
            if u == v:
                raise ValueError(f"loop edge at vertex {u}")
            if u > v:
                raise ValueError(f"edge key ({u},{v}) not ordered")
            if m < 1:
                raise ValueError(f"multiplicity {m} < 1 on edge ({u},{v})")
            if u not in self.vertices or v not in self.vertices:
                raise ValueError(f"edge ({u},{v}) touches unknown vertex")
        if self.tags is not None:
            if set(self.tags) != set(self.edges):
                raise ValueError("tag map does not cover the edge set")
            for k, (old, new) in self.tags.items():
                if old < 0 or new < 0 or old + new != self.edges[k]:
                    raise ValueError(f"tags {old}+{new} != multiplicity on {k}")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        """Total edge multiplicity."""
        return sum(self.edges.values())

    def adjacency(self) -> dict[int, dict[int, int]]:
        adj: dict[int, dict[int, int]] = {v: {} for v in self.vertices}
        for (u, v), m in self.edges.items():
            adj[u][v] = m
            adj[v][u] = m
        return adj

    def degree(self, v: int) -> int:
        if v not in self.vertices:
            raise ValueError(f"no such vertex: {v}")
        return sum(m for (a, b), m in self.edges.items() if a == v or b == v)


def create_single() -> RootedMultigraph:
    return RootedMultigraph(root=0, vertices=frozenset({0}), edges={})


def split_vertex(
    g: RootedMultigraph,
    v: int,
    lam: float,
    rng: RandomStream,
    new_ids: tuple[int, int] | None = None,
) -> tuple[RootedMultigraph, tuple[int, int]]:
    """Replace v by two offspring: bundles reroute by fair coins (one Bin(m,1/2)
    draw per bundle and tag class), Po(lam/2) fresh edges join the offspring,
    and the root follows a fair coin if v was the root."""
    if v not in g.vertices:
        raise ValueError(f"no such vertex: {v}")
    if lam <= 0:
        raise ValueError("lam must be positive")
    if new_ids is None:
        nxt = max(g.vertices) + 1
        v1, v2 = nxt, nxt + 1
    else:
        v1, v2 = new_ids
        if v1 in g.vertices or v2 in g.vertices or v1 == v2:
            raise ValueError("offspring ids collide with existing vertices")

    tagged = g.tags is not None
    edges = {}
    tags: dict[EdgeKey, tuple[int, int]] | None = {} if tagged else None
    for key, m in g.edges.items():
        a, b = key
        if v not in key:
            edges[key] = m
            if tagged:
                tags[key] = g.tags[key]
            continue
        u = b if a == v else a
        if tagged:
            old, new = g.tags[key]
            old1 = rng.binomial_half(old)
            new1 = rng.binomial_half(new)
            k1 = old1 + new1
            for w, mult, tg in ((v1, k1, (old1, new1)),
                                (v2, m - k1, (old - old1, new - new1))):
                if mult:
                    ek = _ekey(u, w)
                    edges[ek] = mult
                    tags[ek] = tg
        else:
            k1 = rng.binomial_half(m)
            if k1:
                edges[_ekey(u, v1)] = k1
            if m - k1:
                edges[_ekey(u, v2)] = m - k1

    fresh = rng.poisson(lam / 2.0)
    if fresh:
        ek = _ekey(v1, v2)
        edges[ek] = fresh
        if tagged:
            tags[ek] = (0, fresh)

    root = g.root
    if v == root:
        root = v1 if rng.coin() else v2
    vertices = (g.vertices - {v}) | {v1, v2}
    return RootedMultigraph(root=root, vertices=vertices, edges=edges, tags=tags), (v1, v2)


def _component_of(g: RootedMultigraph, start: int) -> set[int]:
    adj = g.adjacency()
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return seen


def root_component(g: RootedMultigraph) -> RootedMultigraph:
    """Induced sub-multigraph on the vertices connected to the root."""
    comp = _component_of(g, g.root)
    if len(comp) == len(g.vertices):
        return g
    edges = {k: m for k, m in g.edges.items() if k[0] in comp}
    tags = None
    if g.tags is not None:
        tags = {k: g.tags[k] for k in edges}
    return RootedMultigraph(root=g.root, vertices=frozenset(comp), edges=edges, tags=tags)


def is_connected(g: RootedMultigraph) -> bool:
    return len(_component_of(g, g.root)) == len(g.vertices)


def has_isolated_vertex(g: RootedMultigraph) -> bool:
    """True when some vertex has degree 0; the trivial single-vertex graph
    reports False by convention."""
    if len(g.vertices) <= 1:
        return False
    touched: set[int] = set()
    for u, v in g.edges:
        touched.add(u)
        touched.add(v)
    return len(touched) < len(g.vertices)


@dataclass(frozen=True)
class CanonicalCode:
    code: bytes
    overflow: bool


@lru_cache(maxsize=16)
def _perms(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(1, n)))


def canonical_form(g: RootedMultigraph, size_cap: int = CANON_SIZE_CAP) -> CanonicalCode:
    """Deterministic code identifying the root-preserving isomorphism class.

    Up to size_cap vertices: exact, by minimizing the upper-triangle
    multiplicity matrix (entries clamped to 15) over all root-fixing vertex
    orders. Larger graphs get a coarse signature (size, sorted degree
    sequence, root degree) with the overflow flag set.
    """
    n = len(g.vertices)
    order = sorted(g.vertices)
    idx = {v: i for i, v in enumerate(order)}
    deg = [0] * n
    for (u, v), m in g.edges.items():
        deg[idx[u]] += m
        deg[idx[v]] += m
    if n > size_cap:
        sig = (n, tuple(sorted(deg)), deg[idx[g.root]])
        return CanonicalCode(b"S" + repr(sig).encode(), overflow=True)

    # dense local matrix with the root at slot 0
    slots = [g.root] + [v for v in order if v != g.root]
    pos = {v: i for i, v in enumerate(slots)}
    mat = [[0] * n for _ in range(n)]
    for (u, v), m in g.edges.items():
        m = min(m, CANON_MULT_CAP)
        a, b = pos[u], pos[v]
        mat[a][b] = m
        mat[b][a] = m
    if n == 1:
        return CanonicalCode(b"X\x01", overflow=False)

    best: tuple[int, ...] | None = None
    for perm in _perms(n):
        full = (0,) + perm
        cand = tuple(
            mat[full[i]][full[j]] for i in range(n) for j in range(i + 1, n)
        )
        if best is None or cand < best:
            best = cand
    return CanonicalCode(b"X" + bytes([n]) + bytes(best), overflow=False)


def serialize(g: RootedMultigraph) -> str:
    """One-line interchange document; edges listed u < v, sorted. Tags dropped."""
    doc = {
        "root": g.root,
        "vertices": sorted(g.vertices),
        "edges": [[u, v, m] for (u, v), m in sorted(g.edges.items())],
    }
    return json.dumps(doc)


def deserialize(text: str) -> RootedMultigraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphFormatError(f"invalid JSON: {e.msg}", pos=e.pos) from e
    if not isinstance(doc, dict):
        raise GraphFormatError("document is not an object")
    try:
        root = doc["root"]
        vertices = doc["vertices"]
        edge_list = doc["edges"]
    except KeyError as e:
        raise GraphFormatError(f"missing field {e.args[0]!r}") from e
    if not isinstance(vertices, list) or not all(isinstance(v, int) for v in vertices):
        raise GraphFormatError("vertices must be a list of integers")
    vset = frozenset(vertices)
    if len(vset) != len(vertices):
        raise GraphFormatError("duplicate vertex id")
    edges: dict[EdgeKey, int] = {}
    for i, entry in enumerate(edge_list):
        if (not isinstance(entry, list)) or len(entry) != 3 or not all(
            isinstance(x, int) for x in entry
        ):
            raise GraphFormatError(f"edge #{i} is not [u, v, multiplicity]")
        u, v, m = entry
        if u == v:
            raise GraphFormatError(f"edge #{i} is a loop at {u}")
        if u > v:
            raise GraphFormatError(f"edge #{i} endpoints not ordered (u < v required)")
        if (u, v) in edges:
            raise GraphFormatError(f"edge #{i} duplicates pair ({u},{v})")
        if m < 1:
            raise GraphFormatError(f"edge #{i} has multiplicity {m} < 1")
        edges[(u, v)] = m
    try:
        return RootedMultigraph(root=root, vertices=vset, edges=edges)
    except ValueError as e:
        raise GraphFormatError(str(e)) from e
