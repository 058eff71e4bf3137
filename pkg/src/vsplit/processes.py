"""Event-driven simulation of the vertex-splitting process and its variants.

Every living vertex carries an Exp(1) splitting clock; a heap orders the
events. On a split the vertex's edge bundles reroute by one Bin(m, 1/2) draw
per bundle, a Po(lam/2) fresh bundle joins the two offspring, and the root
follows a fair coin when the root splits. The cluster variant prunes
non-root components (pruned vertices can never rejoin: components never
merge and the root never leaves its component, so pruning is law-preserving
for the root component; verified against end-only pruning).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .genealogy import forward_walk_leaf, poisson_leaf_edges, sample_yule_tree
from .multigraph import RootedMultigraph, root_component
from .rng import RandomStream

DEFAULT_VERTEX_CAP = 10_000_000


class VertexCapExceeded(RuntimeError):
    """Vertex budget blown; carries the partial state at the moment of failure."""

    def __init__(self, state: "FullProcessState"):
        super().__init__(
            f"vertex cap exceeded at t={state.clock:.4f} with {len(state.adj)} vertices"
        )
        self.state = state


@dataclass
class ProcessOptions:
    max_vertices: int = DEFAULT_VERTEX_CAP
    prune: str = "none"          # none | lazy | end
    track_lineage: bool = False  # record parent -> (child1, child2)


@dataclass
class FullProcessState:
    adj: dict[int, dict[int, int]]
    root: int
    clock: float
    heap: list[tuple[float, int]] = field(default_factory=list)
    next_id: int = 0
    dead: set[int] = field(default_factory=set)
    n_splits: int = 0
    lineage: dict[int, tuple[int, int]] | None = None

    @property
    def graph(self) -> RootedMultigraph:
        edges = {}
        for u, nbrs in self.adj.items():
            for v, m in nbrs.items():
                if u < v:
                    edges[(u, v)] = m
        return RootedMultigraph(
            root=self.root, vertices=frozenset(self.adj), edges=edges
        )


def _state_from_graph(g: RootedMultigraph, rng: RandomStream,
                      track_lineage: bool = False) -> FullProcessState:
    adj: dict[int, dict[int, int]] = {v: {} for v in g.vertices}
    for (u, v), m in g.edges.items():
        adj[u][v] = m
        adj[v][u] = m
    st = FullProcessState(
        adj=adj,
        root=g.root,
        clock=0.0,
        next_id=max(g.vertices) + 1,
        lineage={} if track_lineage else None,
    )
    for v in sorted(g.vertices):
        heapq.heappush(st.heap, (rng.exp(1.0), v))
    return st


def _split(st: FullProcessState, v: int, lam: float, rng: RandomStream) -> tuple[int, int]:
    adj = st.adj
    v1 = st.next_id
    v2 = v1 + 1
    st.next_id = v1 + 2
    bundles = adj.pop(v)
    a1: dict[int, int] = {}
    a2: dict[int, int] = {}
    for u, m in bundles.items():
        nb = adj[u]
        del nb[v]
        k = rng.binomial_half(m)
        if k:
            a1[u] = k
            nb[v1] = k
        if m - k:
            a2[u] = m - k
            nb[v2] = m - k
    fresh = rng.poisson(lam / 2.0)
    if fresh:
        a1[v2] = fresh
        a2[v1] = fresh
    adj[v1] = a1
    adj[v2] = a2
    if v == st.root:
        st.root = v1 if rng.coin() else v2
    if st.lineage is not None:
        st.lineage[v] = (v1, v2)
    st.n_splits += 1
    return v1, v2


def _root_set(adj: dict[int, dict[int, int]], root: int) -> set[int]:
    seen = {root}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return seen


def _prune(st: FullProcessState) -> int:
    keep = _root_set(st.adj, st.root)
    if len(keep) < len(st.adj):
        for v in list(st.adj):
            if v not in keep:
                del st.adj[v]
                st.dead.add(v)
    return len(keep)


def run_full_process(
    init: RootedMultigraph,
    lam: float,
    t_end: float,
    rng: RandomStream,
    opts: ProcessOptions | None = None,
) -> FullProcessState:
    """Run the splitting process from init until t_end; deterministic given
    (init, stream). Simultaneous clock ties (probability zero) break by
    smaller vertex id via the heap tuple order."""
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if lam <= 0:
        raise ValueError("lam must be positive")
    opts = opts or ProcessOptions()
    st = _state_from_graph(init, rng, opts.track_lineage)
    lazy = opts.prune == "lazy"
    prune_at = 2 * len(st.adj) if lazy else 0
    heap = st.heap
    while heap and heap[0][0] <= t_end:
        t, v = heapq.heappop(heap)
        if v in st.dead:
            continue
        st.clock = t
        v1, v2 = _split(st, v, lam, rng)
        heapq.heappush(heap, (t + rng.exp(1.0), v1))
        heapq.heappush(heap, (t + rng.exp(1.0), v2))
        if len(st.adj) > opts.max_vertices:
            raise VertexCapExceeded(st)
        if lazy and len(st.adj) >= prune_at:
            prune_at = 2 * max(_prune(st), 1)
    st.clock = t_end
    return st


def run_cluster_process(
    init: RootedMultigraph,
    lam: float,
    t_end: float,
    rng: RandomStream,
    opts: ProcessOptions | None = None,
) -> RootedMultigraph:
    """Root component of the full process at t_end, with lazy pruning by
    default (prune whenever the population doubles the root component)."""
    opts = opts or ProcessOptions(prune="lazy")
    if opts.prune == "none":
        opts = ProcessOptions(opts.max_vertices, "lazy", opts.track_lineage)
    st = run_full_process(init, lam, t_end, rng, opts)
    _prune(st)
    return st.graph


def sample_cluster_via_genealogy(
    lam: float, t: float, rng: RandomStream, max_leaves: int = 10_000_000
) -> RootedMultigraph:
    """Root component at time t from a single vertex, realized through the
    genealogy: sample the splitting tree, pick the root's leaf by a uniform
    forward walk, join leaf pairs with Po(lam * 2^(1-d)) parallel edges."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    tree = sample_yule_tree(t, rng)
    if tree.n_leaves > max_leaves:
        raise RuntimeError(f"genealogy grew past {max_leaves} leaves")
    root_leaf = forward_walk_leaf(tree, rng)
    edges = poisson_leaf_edges(tree, lam, rng)
    g = RootedMultigraph(
        root=root_leaf, vertices=frozenset(tree.leaves), edges=edges
    )
    return root_component(g)


def run_singleton_free(
    lam: float,
    t_end: float,
    rng: RandomStream,
    max_vertices: int = DEFAULT_VERTEX_CAP,
) -> int:
    """Splitting process with tokens: the start vertex draws Po(lam/2) tokens,
    tokens reroute by Bin(m, 1/2) at splits, and offspring born with no
    incident edges and no tokens are discarded on the spot. Returns the
    population size at t_end (0 if the population died out)."""
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    adj: dict[int, dict[int, int]] = {0: {}}
    tokens = {0: rng.poisson(lam / 2.0)}
    heap = [(rng.exp(1.0), 0)]
    next_id = 1
    while heap and heap[0][0] <= t_end:
        t, v = heapq.heappop(heap)
        v1 = next_id
        v2 = v1 + 1
        next_id += 2
        bundles = adj.pop(v)
        tok = tokens.pop(v)
        a1: dict[int, int] = {}
        a2: dict[int, int] = {}
        for u, m in bundles.items():
            nb = adj[u]
            del nb[v]
            k = rng.binomial_half(m)
            if k:
                a1[u] = k
                nb[v1] = k
            if m - k:
                a2[u] = m - k
                nb[v2] = m - k
        fresh = rng.poisson(lam / 2.0)
        if fresh:
            a1[v2] = fresh
            a2[v1] = fresh
        t1 = rng.binomial_half(tok)
        for w, a, tk in ((v1, a1, t1), (v2, a2, tok - t1)):
            if a or tk:
                adj[w] = a
                tokens[w] = tk
                heapq.heappush(heap, (t + rng.exp(1.0), w))
        if len(adj) > max_vertices:
            raise RuntimeError(f"singleton-free population exceeded {max_vertices}")
    return len(adj)


def simulate_degree_chain(
    lam: float, x0: int, steps: int, rng: RandomStream
) -> list[int]:
    """Trajectory of the endpoint-degree chain X' = Bin(X, 1/2) + Po(lam/2);
    lam = 0 is accepted as the degenerate pure-halving chain."""
    if x0 < 0 or steps < 1:
        raise ValueError("x0 must be >= 0 and steps >= 1")
    traj = [x0]
    x = x0
    half = lam / 2.0
    for _ in range(steps):
        x = rng.binomial_half(x) + rng.poisson(half)
        traj.append(x)
    return traj


def kill_time_all_old_edges(
    lam: float, rng: RandomStream, time_cap: float
) -> tuple[bool, float]:
    """First time every initial edge is dead, starting from two vertices joined
    by Po(lam/2) initial edges (left vertex = root).

    An initial edge dies once its left endpoint is a non-root vertex meeting
    no later-created edges; that predicate can only switch at splits of the
    tracked endpoint, and a vertex's incident multiplicity only changes at its
    own splits (rerouting at a neighbour moves the far endpoint). So only the
    left-endpoint lineages and the root lineage are simulated: each tracked
    vertex carries its incident new-edge count, the set of initial edges it
    hosts, and a root flag. Law-identical to tagging the full process, at
    O(edges x chain steps) cost.
    """
    if time_cap <= 0:
        raise ValueError("time_cap must be positive")
    n_old = rng.poisson(lam / 2.0)
    if n_old == 0:
        return True, 0.0
    # tracked vertex id -> (new edge count, set of old-edge ids, is_root)
    tracked: dict[int, tuple[int, set[int], bool]] = {0: (0, set(range(n_old)), True)}
    alive = n_old
    heap = [(rng.exp(1.0), 0)]
    next_id = 1
    half = lam / 2.0
    while heap:
        t, v = heapq.heappop(heap)
        if t > time_cap:
            return False, time_cap
        new_cnt, edges, is_root = tracked.pop(v)
        fresh = rng.poisson(half)
        b = rng.binomial_half(new_cnt)
        counts = (b + fresh, new_cnt - b + fresh)
        goes: tuple[set[int], set[int]] = (set(), set())
        for e in edges:
            goes[rng.coin()].add(e)
        root_side = rng.coin() if is_root else None
        for side in (0, 1):
            side_root = is_root and root_side == side
            side_edges = goes[side]
            if side_edges and not side_root and counts[side] == 0:
                alive -= len(side_edges)  # killed at birth: non-root, no new edges
                side_edges = set()
            # a lineage matters only while it hosts edges; root identity can
            # never re-coincide with an edge lineage once they separate
            if side_edges:
                vid = next_id
                next_id += 1
                tracked[vid] = (counts[side], side_edges, side_root)
                heapq.heappush(heap, (t + rng.exp(1.0), vid))
        if alive == 0:
            return True, t
    raise AssertionError("tracked set emptied with edges alive")
