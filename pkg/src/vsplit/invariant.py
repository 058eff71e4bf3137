"""Exact samplers for the invariant cluster laws of the splitting process.

The stationary law of the root component is realized as the root's component
in a long-range edge model on the leaves of an infinite random tree: a ray
v0 v1 v2 ... with a finite splitting tree of age s1+...+sk hanging off each
vk (labels Exp(1)), and independent Po(lam * 2^(1-d(x,y))) parallel edges
between leaves. The synchronous variant replaces the random tree with the
canopy tree (nested complete binary trees, leaves 0, 1, 2, ...).

Sampling is lazy in three ways, all law-preserving:

* Ray cut certificate. Edges from a revealed leaf x to anything beyond the
  cut vk v(k+1) total Po(lam * 2^-d(x,vk)) because the far side's dyadic walk
  weight is exactly 1 (finite trees on a single ray: the forward walk
  terminates almost surely). These undetermined edges are held as "stubs";
  when level k+1 is revealed each stub independently lands there (probability
  1/2, endpoint by a forward walk) or crosses the next cut. Summed over a
  level's leaves the fresh-stub mass is Po(lam/2), so the stub count is the
  Markov chain X' = Bin(X, 1/2) + Po(lam/2) started from Po(lam), and the
  first time it hits zero certifies that no edge crosses the current cut:
  the root component is then entirely inside the revealed region. Cross-level
  pairs are sampled exclusively through stubs; same-level pairs directly.

* Lazy tree shapes. A level's leaf count is Geo(e^-age) and only the tree
  shape matters for walk laws, so nodes are materialized on demand with
  uniform left-leaf-count splits (the splitting process's jump chain picks a
  uniform leaf, making the left count uniform given the total).

* Lazy within-level edges. A leaf's same-level edge mass is
  lam * (1 - 2^-depth); it is drawn only when the leaf joins the root
  component (partners via a climb-and-branch walk, discarding partners whose
  own expansion already covered the pair — exact Poisson thinning). Pairs
  that never touch the root component never need sampling.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .genealogy import LabelSchedule
from .multigraph import RootedMultigraph
from .processes import ProcessOptions, run_cluster_process
from .rng import RandomStream
from .stats import wilson_ci

VKey = tuple[int, int]  # (level index, local leaf id); (0, 0) is the root leaf


@dataclass
class SamplerCaps:
    max_spine: int = 10_000
    max_materialized: int = 1_000_000


@dataclass
class SampleDiagnostics:
    spine_len: int = 0
    leaf_population: int = 1
    materialized_nodes: int = 1
    stub_trajectory: list[int] = field(default_factory=list)
    fresh_counts: list[int] = field(default_factory=list)
    level_sizes: list[int] = field(default_factory=list)
    prefix_len: int = 0
    component_size: int = 0

    def to_dict(self) -> dict:
        return {
            "spine_len": self.spine_len,
            "leaf_population": self.leaf_population,
            "materialized_nodes": self.materialized_nodes,
            "stub_trajectory": self.stub_trajectory,
            "fresh_counts": self.fresh_counts,
            "level_sizes": self.level_sizes,
            "prefix_len": self.prefix_len,
            "component_size": self.component_size,
        }


class CapExceeded(RuntimeError):
    """Sampling budget blown; carries the diagnostics gathered so far."""

    def __init__(self, message: str, diagnostics: SampleDiagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class PendingStub(NamedTuple):
    origin: VKey
    position: int  # the stub currently crosses the cut v(position-1) v(position)


class LazyShapeTree:
    """Splitting-tree shape on a known leaf count, revealed on demand.

    Node 0 is the root; a node holding c leaves splits into (u, c-u) with u
    uniform on 1..c-1 the first time its children are needed. Leaves (c == 1)
    get local ids in discovery order.
    """

    __slots__ = ("count", "left", "right", "parent", "depth", "leaf_local", "locals")

    def __init__(self, n_leaves: int):
        if n_leaves < 1:
            raise ValueError("need at least one leaf")
        self.count = [n_leaves]
        self.left = [-1]
        self.right = [-1]
        self.parent = [-1]
        self.depth = [0]
        self.leaf_local: dict[int, int] = {}
        self.locals: list[int] = []

    @property
    def n_materialized(self) -> int:
        return len(self.count)

    def _register(self, node: int) -> int:
        loc = self.leaf_local.get(node)
        if loc is None:
            loc = len(self.locals)
            self.leaf_local[node] = loc
            self.locals.append(node)
        return loc

    def _children(self, node: int, rng: RandomStream) -> tuple[int, int]:
        l = self.left[node]
        if l >= 0:
            return l, self.right[node]
        c = self.count[node]
        cl = 1 + rng.randrange(c - 1)
        a = len(self.count)
        b = a + 1
        d = self.depth[node] + 1
        self.count += [cl, c - cl]
        self.left += [-1, -1]
        self.right += [-1, -1]
        self.parent += [node, node]
        self.depth += [d, d]
        self.left[node] = a
        self.right[node] = b
        return a, b

    def _descend(self, node: int, rng: RandomStream) -> int:
        while self.count[node] > 1:
            l, r = self._children(node, rng)
            node = r if rng.coin() else l
        return node

    def walk(self, rng: RandomStream) -> int:
        """Forward walk from the root: leaf x with probability 2^-depth(x)."""
        return self._register(self._descend(0, rng))

    def depth_of(self, local: int) -> int:
        return self.depth[self.locals[local]]

    def partner(self, local: int, rng: RandomStream) -> int:
        """Same-level partner of leaf x, law 2^(1-d(x,y)) / (1 - 2^-depth(x)):
        climb with fair coins, branch into the sibling subtree, forward-walk
        down; climbing past the root restarts (truncated geometric)."""
        x = self.locals[local]
        while True:
            came = x
            node = self.parent[x]
            while node >= 0:
                if rng.coin():
                    l, r = self.left[node], self.right[node]
                    sib = r if came == l else l
                    return self._register(self._descend(sib, rng))
                came = node
                node = self.parent[node]
            # walked past the root: restart


class _YuleLevel:
    __slots__ = ("tree",)

    def __init__(self, tree: LazyShapeTree):
        self.tree = tree

    @property
    def n_leaves(self) -> int:
        return self.tree.count[0]

    @property
    def n_materialized(self) -> int:
        return self.tree.n_materialized

    def walk(self, rng: RandomStream) -> int:
        return self.tree.walk(rng)

    def within_mass(self, local: int) -> float:
        return 1.0 - math.ldexp(1.0, -self.tree.depth_of(local))

    def partner(self, local: int, rng: RandomStream) -> int:
        return self.tree.partner(local, rng)


class _CanopyLevel:
    """Level k of the canopy: the complete subtree over leaves 2^(k-1)..2^k -1,
    all at depth k-1; walks are uniform and partners are bit arithmetic."""

    __slots__ = ("height",)

    def __init__(self, k: int):
        self.height = k - 1

    @property
    def n_leaves(self) -> int:
        return 1 << self.height

    @property
    def n_materialized(self) -> int:
        return 0

    def walk(self, rng: RandomStream) -> int:
        return rng.getrandbits(self.height)

    def within_mass(self, local: int) -> float:
        return 1.0 - math.ldexp(1.0, -self.height)

    def partner(self, local: int, rng: RandomStream) -> int:
        while True:
            j = 1
            while j <= self.height:
                if rng.coin():
                    # branch: flip bit j-1, randomize the j-1 bits below it
                    top = (local >> (j - 1)) ^ 1
                    return (top << (j - 1)) | rng.getrandbits(j - 1)
                j += 1
            # past the subtree root: restart


@dataclass
class RevealState:
    adj: dict[VKey, dict[VKey, int]]
    in_comp: set[VKey]
    expanded: set[VKey]
    levels: dict[int, object]
    stubs: list[PendingStub]
    diag: SampleDiagnostics


def _add_edge(adj: dict, a: VKey, b: VKey) -> None:
    adj.setdefault(a, {})
    adj.setdefault(b, {})
    adj[a][b] = adj[a].get(b, 0) + 1
    adj[b][a] = adj[b].get(a, 0) + 1


def _integrate(
    st: RevealState, lam: float, rng: RandomStream, edges: list[tuple[VKey, VKey]]
) -> None:
    """Record edges, track the root component incrementally, and expand each
    new component member's within-level edge mass (cascading)."""
    work = deque(edges)
    expand_q: deque[VKey] = deque()
    while work or expand_q:
        while work:
            a, b = work.popleft()
            _add_edge(st.adj, a, b)
            ina = a in st.in_comp
            if ina != (b in st.in_comp):
                blob = [b if ina else a]
                st.in_comp.add(blob[0])
                i = 0
                while i < len(blob):
                    for w in st.adj[blob[i]]:
                        if w not in st.in_comp:
                            st.in_comp.add(w)
                            blob.append(w)
                    i += 1
                for w in blob:
                    if w not in st.expanded:
                        expand_q.append(w)
        if expand_q:
            x = expand_q.popleft()
            if x in st.expanded:
                continue
            st.expanded.add(x)
            k, local = x
            lvl = st.levels[k]
            n_draws = rng.poisson(lam * lvl.within_mass(local))
            for _ in range(n_draws):
                y = (k, lvl.partner(local, rng))
                if y not in st.expanded:
                    work.append((x, y))


def _extract_component(st: RevealState) -> RootedMultigraph:
    """Root component with fresh contiguous ids in breadth-first order."""
    v0 = (0, 0)
    order = [v0]
    ids = {v0: 0}
    i = 0
    while i < len(order):
        u = order[i]
        for w in sorted(st.adj.get(u, ())):
            if w not in ids:
                ids[w] = len(order)
                order.append(w)
        i += 1
    edges: dict[tuple[int, int], int] = {}
    for u in order:
        iu = ids[u]
        for w, m in st.adj[u].items():
            iw = ids[w]
            if iu < iw:
                edges[(iu, iw)] = m
    return RootedMultigraph(root=0, vertices=frozenset(range(len(order))), edges=edges)


def _sample_lazy_cluster(
    lam: float,
    rng: RandomStream,
    make_level: Callable[[int, RandomStream], object],
    caps: SamplerCaps,
    prefix_len: int = 0,
) -> tuple[RootedMultigraph, SampleDiagnostics]:
    if lam <= 0:
        raise ValueError("lam must be positive")
    v0: VKey = (0, 0)
    diag = SampleDiagnostics(prefix_len=prefix_len)
    st = RevealState(
        adj={v0: {}}, in_comp={v0}, expanded={v0}, levels={}, stubs=[], diag=diag
    )
    x0 = rng.poisson(lam)
    st.stubs = [PendingStub(v0, 1)] * x0
    diag.stub_trajectory.append(x0)
    diag.fresh_counts.append(x0)
    k = 0
    materialized = 1
    while st.stubs:
        k += 1
        if k > caps.max_spine:
            diag.spine_len = k - 1
            raise CapExceeded(f"spine cap {caps.max_spine} exceeded", diag)
        lvl = make_level(k, rng)
        st.levels[k] = lvl
        diag.leaf_population += lvl.n_leaves
        diag.level_sizes.append(lvl.n_leaves)
        kept: list[PendingStub] = []
        resolved: list[tuple[VKey, VKey]] = []
        for stub in st.stubs:
            if rng.coin():
                resolved.append((stub.origin, (k, lvl.walk(rng))))
            else:
                kept.append(PendingStub(stub.origin, k + 1))
        fresh = rng.poisson(lam / 2.0)
        for _ in range(fresh):
            kept.append(PendingStub((k, lvl.walk(rng)), k + 1))
        st.stubs = kept
        diag.fresh_counts.append(fresh)
        diag.stub_trajectory.append(len(kept))
        _integrate(st, lam, rng, resolved)
        materialized = 1 + sum(l.n_materialized for l in st.levels.values())
        if materialized > caps.max_materialized:
            diag.spine_len = k
            diag.materialized_nodes = materialized
            raise CapExceeded(f"materialized-node cap {caps.max_materialized} exceeded", diag)
    diag.spine_len = k
    diag.materialized_nodes = materialized
    graph = _extract_component(st)
    diag.component_size = graph.n_vertices
    return graph, diag


def _make_yule_factory(schedule: LabelSchedule):
    ages: list[float] = []

    def make_level(k: int, rng: RandomStream) -> _YuleLevel:
        age = (ages[-1] if ages else 0.0) + schedule.next_label(rng)
        ages.append(age)
        return _YuleLevel(LazyShapeTree(rng.geometric_size(math.exp(-age))))

    return make_level


def sample_stationary_cluster(
    lam: float, rng: RandomStream, caps: SamplerCaps | None = None
) -> tuple[RootedMultigraph, SampleDiagnostics]:
    """Exact sample of the invariant root-component law of the continuous-time
    splitting process with parameter lam."""
    caps = caps or SamplerCaps()
    return _sample_lazy_cluster(lam, rng, _make_yule_factory(LabelSchedule()), caps)


def sample_stationary_cluster_shifted(
    lam: float, t: float, rng: RandomStream, caps: SamplerCaps | None = None
) -> RootedMultigraph:
    """Same law realized through a time-t shift: Po(t) arrival times in [0, t]
    become forced initial ray labels (the gaps), and the remainder of the last
    gap is folded into the first free Exp(1) label. Output distribution is
    identical to sample_stationary_cluster — the stationarity mechanism."""
    g, _ = _sample_shifted_with_diag(lam, t, rng, caps)
    return g


def _sample_shifted_with_diag(
    lam: float, t: float, rng: RandomStream, caps: SamplerCaps | None = None
) -> tuple[RootedMultigraph, SampleDiagnostics]:
    if t <= 0:
        raise ValueError("t must be positive")
    caps = caps or SamplerCaps()
    k = rng.poisson(t)
    arrivals = sorted((t * rng.random() for _ in range(k)), reverse=True)
    prefix: list[float] = []
    prev = t
    for a in arrivals:
        prefix.append(prev - a)
        prev = a
    offset = arrivals[-1] if arrivals else t
    schedule = LabelSchedule(prefix, offset)
    return _sample_lazy_cluster(
        lam, rng, _make_yule_factory(schedule), caps, prefix_len=k
    )


def sample_synchronous_cluster(
    lam: float, rng: RandomStream, caps: SamplerCaps | None = None
) -> tuple[RootedMultigraph, SampleDiagnostics]:
    """Exact sample of the synchronous-model cluster: the same edge model on
    the canopy tree, explored with the same stub certificate (cut k separates
    leaves 0..2^k - 1 from the rest)."""
    caps = caps or SamplerCaps()
    return _sample_lazy_cluster(lam, rng, lambda k, rng_: _CanopyLevel(k), caps)


def evolve(
    m: RootedMultigraph,
    lam: float,
    t: float,
    rng: RandomStream,
    opts: ProcessOptions | None = None,
) -> RootedMultigraph:
    """Run the cluster process for time t from a sampled graph (stationarity
    experiments: the output law should match the input law)."""
    return run_cluster_process(m, lam, t, rng, opts)


@dataclass(frozen=True)
class DoubleEdgeResult:
    frequency: float
    ci_lo: float
    ci_hi: float
    n_conditional: int
    n_total: int


def double_edge_stat(
    sampler: str,
    lam: float,
    n: int,
    rng: RandomStream,
    caps: SamplerCaps | None = None,
    budget: int | None = None,
    z: float = 1.96,
) -> DoubleEdgeResult:
    """Among samples whose root degree is exactly 2, the fraction where both
    edges go to the same neighbour. sampler is 'stationary' or 'synchronous';
    plain rejection until n conditional hits (budget default 200n)."""
    if n < 1:
        raise ValueError("n must be positive")
    draw = {
        "stationary": sample_stationary_cluster,
        "synchronous": sample_synchronous_cluster,
    }[sampler]
    budget = budget if budget is not None else 200 * n
    hits = doubles = total = 0
    while hits < n:
        if total >= budget:
            raise RuntimeError(
                f"sample budget {budget} exhausted with {hits}/{n} conditional hits"
            )
        total += 1
        g, _ = draw(lam, rng, caps)
        root_bundles = [m for (u, v), m in g.edges.items() if u == g.root or v == g.root]
        if sum(root_bundles) != 2:
            continue
        hits += 1
        if max(root_bundles) == 2:
            doubles += 1
    lo, hi = wilson_ci(doubles, hits, z)
    return DoubleEdgeResult(doubles / hits, lo, hi, hits, total)
