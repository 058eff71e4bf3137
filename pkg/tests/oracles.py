"""Independent oracles used by the test suite.

Everything here recomputes target laws by a different route than the library:
explicit per-pair Poisson draws with explicit distances, exact kernel powers,
brute-force isomorphism, per-coin rerouting. Deliberately slow and dumb.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np
from scipy.stats import binom as _binom, poisson as _poisson

from vsplit.genealogy import SpineState, extend_spine, tree_distance, canopy_distance
from vsplit.multigraph import RootedMultigraph
from vsplit.rng import RandomStream


# ---------------------------------------------------------------------------
# exact chain arithmetic

def chain_kernel(lam: float, size: int) -> np.ndarray:
    """K[j, i] = P(Bin(j, 1/2) + Po(lam/2) = i) on states 0..size."""
    po = _poisson.pmf(np.arange(size + 1), lam / 2.0)
    K = np.zeros((size + 1, size + 1))
    for j in range(size + 1):
        b = _binom.pmf(np.arange(j + 1), j, 0.5)
        for k in range(j + 1):
            K[j, k:] += b[k] * po[: size + 1 - k]
    return K


def chain_pmf_after(lam: float, x0: int, steps: int, size: int = 80) -> dict[int, float]:
    """Exact distribution of the chain after `steps` steps from x0."""
    K = chain_kernel(lam, size)
    v = np.zeros(size + 1)
    v[x0] = 1.0
    for _ in range(steps):
        v = v @ K
    return {k: float(v[k]) for k in range(size + 1)}


def spine_tail_exact(lam: float, l_max: int, size: int = 200) -> list[float]:
    """P(spine length > L) for L = 0..l_max: survival of the stub chain
    started from Po(lam), killed at 0."""
    K = chain_kernel(lam, size)
    kp = K[1:, 1:]
    v = _poisson.pmf(np.arange(1, size + 1), lam)
    out = [float(v.sum())]
    for _ in range(l_max):
        v = v @ kp
        out.append(float(v.sum()))
    return out


# ---------------------------------------------------------------------------
# dense (eager, explicit-distance) samplers of the invariant cluster laws

def _categorical(weights: list[float], rng: RandomStream) -> int:
    u = rng.random() * sum(weights)
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1


def _component_graph(n_leaves: int, edges: Counter, root_idx: int = 0) -> RootedMultigraph:
    adj: dict[int, dict[int, int]] = {}
    for (a, b), m in edges.items():
        adj.setdefault(a, {})[b] = m
        adj.setdefault(b, {})[a] = m
    order = [root_idx]
    ids = {root_idx: 0}
    i = 0
    while i < len(order):
        for w in sorted(adj.get(order[i], ())):
            if w not in ids:
                ids[w] = len(order)
                order.append(w)
        i += 1
    out = {}
    for (a, b), m in edges.items():
        if a in ids and b in ids:
            ia, ib = ids[a], ids[b]
            out[(min(ia, ib), max(ia, ib))] = m
    return RootedMultigraph(root=0, vertices=frozenset(range(len(order))), edges=out)


class OracleAbort(Exception):
    """Sample exceeded the oracle's work bound; both sides of a comparison
    must condition on the same bound."""


def dense_stationary_sample(
    lam: float,
    rng: RandomStream,
    max_spine: int = 500,
    max_level: int | None = None,
) -> RootedMultigraph:
    """Invariant cluster sample with fully materialized subtrees, explicit
    per-pair Poisson draws inside each subtree, per-leaf forward-edge
    budgets, and categorical (not walk-based) crossing-edge resolution.

    The pair loop is quadratic in a level's size, so comparisons pass
    max_level/max_spine and condition the engine's samples on the same event.
    """
    spine = SpineState()
    pending = Counter({0: rng.poisson(lam)})  # origin leaf index -> crossing edges
    if pending[0] == 0:
        del pending[0]
    edges: Counter = Counter()
    n_leaves = 1
    k = 0
    while pending:
        k += 1
        if max_level is not None and k > max_spine:
            raise OracleAbort
        if k > max_spine:
            raise RuntimeError("dense oracle spine cap")
        extend_spine(spine, rng)
        tree = spine.subtrees[-1]
        if max_level is not None and tree.n_leaves > max_level:
            raise OracleAbort
        new_nodes = list(tree.leaves)
        wts = [math.ldexp(1.0, -tree.depth[x]) for x in new_nodes]
        base = n_leaves
        nxt: Counter = Counter()
        for origin in sorted(pending):
            stay = 0
            for _ in range(pending[origin]):
                if rng.coin():
                    j = _categorical(wts, rng)
                    a, b = origin, base + j
                    edges[(min(a, b), max(a, b))] += 1
                else:
                    stay += 1
            if stay:
                nxt[origin] = stay
        for a in range(len(new_nodes)):
            for b in range(a + 1, len(new_nodes)):
                d = tree_distance(tree, new_nodes[a], new_nodes[b])
                m = rng.poisson(lam * math.ldexp(2.0, -d))
                if m:
                    edges[(base + a, base + b)] += m
        for j, x in enumerate(new_nodes):
            c = rng.poisson(lam * math.ldexp(1.0, -(tree.depth[x] + 1)))
            if c:
                nxt[base + j] = c
        n_leaves += len(new_nodes)
        pending = nxt
    return _component_graph(n_leaves, edges)


def dense_synchronous_sample(
    lam: float,
    rng: RandomStream,
    max_levels: int = 60,
    abort_levels: int | None = None,
) -> RootedMultigraph:
    """Same as above on the canopy tree, leaves indexed 0, 1, 2, ...; level k
    holds leaves 2^(k-1)..2^k - 1 and canopy distances are explicit."""
    pending = Counter({0: rng.poisson(lam)})
    if pending[0] == 0:
        del pending[0]
    edges: Counter = Counter()
    k = 0
    while pending:
        k += 1
        if abort_levels is not None and k > abort_levels:
            raise OracleAbort
        if k > max_levels:
            raise RuntimeError("dense oracle level cap")
        lo, hi = 1 << (k - 1), (1 << k) - 1
        new = list(range(lo, hi + 1))
        nxt: Counter = Counter()
        for origin in sorted(pending):
            stay = 0
            for _ in range(pending[origin]):
                if rng.coin():
                    a, b = origin, new[rng.randrange(len(new))]
                    edges[(min(a, b), max(a, b))] += 1
                else:
                    stay += 1
            if stay:
                nxt[origin] = stay
        for a in range(len(new)):
            for b in range(a + 1, len(new)):
                d = canopy_distance(new[a], new[b])
                m = rng.poisson(lam * math.ldexp(2.0, -d))
                if m:
                    edges[(new[a], new[b])] += m
        for x in new:
            c = rng.poisson(lam * math.ldexp(1.0, -k))
            if c:
                nxt[x] = c
        pending = nxt
    return _component_graph(1 << k, edges)


def synchronous_root_degree_direct(lam: float, rng: RandomStream, levels: int = 20) -> int:
    """Root degree by the direct truncated sum: leaves at canopy distance 2h
    from 0 number 2^(h-1), so the degree is Po(lam * (1 - 2^-levels))."""
    total = 0
    for h in range(1, levels + 1):
        total += rng.poisson(lam * (1 << (h - 1)) * math.ldexp(2.0, -2 * h))
    return total


# ---------------------------------------------------------------------------
# brute-force graph machinery

def bfs_component(adj: dict[int, set[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def rooted_isomorphic(g1: RootedMultigraph, g2: RootedMultigraph) -> bool:
    """Try every root-fixing bijection."""
    if len(g1.vertices) != len(g2.vertices) or g1.n_edges != g2.n_edges:
        return False
    v1 = [g1.root] + sorted(g1.vertices - {g1.root})
    v2rest = sorted(g2.vertices - {g2.root})
    for perm in itertools.permutations(v2rest):
        mapping = {g1.root: g2.root}
        mapping.update(zip(v1[1:], perm))
        ok = True
        for (a, b), m in g1.edges.items():
            x, y = mapping[a], mapping[b]
            if g2.edges.get((min(x, y), max(x, y))) != m:
                ok = False
                break
        if ok:
            return True
    return False


def classify_up_to_iso(graphs: list[RootedMultigraph]) -> int:
    reps: list[RootedMultigraph] = []
    for g in graphs:
        if not any(rooted_isomorphic(g, r) for r in reps):
            reps.append(g)
    return len(reps)


def all_small_multigraphs(max_n: int = 3, max_mult: int = 2) -> list[RootedMultigraph]:
    """Every rooted loopless multigraph on <= max_n vertices with per-pair
    multiplicity <= max_mult (root = vertex 0)."""
    out = []
    for n in range(1, max_n + 1):
        pairs = list(itertools.combinations(range(n), 2))
        for mults in itertools.product(range(max_mult + 1), repeat=len(pairs)):
            edges = {p: m for p, m in zip(pairs, mults) if m}
            out.append(RootedMultigraph(root=0, vertices=frozenset(range(n)), edges=edges))
    return out


def percoin_split_route(m: int, rng: RandomStream) -> int:
    """Route an m-edge bundle one fair coin per edge; count to the first side."""
    return sum(rng.coin() for _ in range(m))
