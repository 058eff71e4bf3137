"""Genealogies: Yule trees, spine trees, canopy metrics, dyadic leaf weights.

A binary splitting process at rate 1 run for time t leaves a full binary tree
(every internal node has exactly two children) whose leaves are the living
population; the leaf count is geometric with mean e^t. The infinite "spine"
tree is a ray v0 v1 v2 ... with a finite tree of age s1+...+si hanging off
each vi; its leaf set hosts the invariant-cluster edge model. The canopy tree
(nested complete binary trees sharing leaves 0, 1, 2, ...) hosts the
synchronous variant.

Dyadic leaf weights sum(2^-d(leaf, node)) drive everything: they are forward
random-walk stopping probabilities, equal exactly 1 from the root of a full
binary tree, and make every crossing-rate product at most 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .rng import RandomStream


class BinaryTree:
    """Array-backed full binary tree (every node has 0 or 2 children)."""

    __slots__ = ("parent", "left", "right", "depth", "leaves")

    def __init__(self):
        self.parent = [-1]
        self.left = [-1]
        self.right = [-1]
        self.depth = [0]
        self.leaves = [0]

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    def split_leaf(self, node: int, slot: int | None = None) -> tuple[int, int]:
        if not self.is_leaf(node):
            raise ValueError(f"node {node} is not a leaf")
        a = len(self.parent)
        b = a + 1
        d = self.depth[node] + 1
        self.parent += [node, node]
        self.left += [-1, -1]
        self.right += [-1, -1]
        self.depth += [d, d]
        self.left[node] = a
        self.right[node] = b
        if slot is None or self.leaves[slot] != node:
            slot = self.leaves.index(node)
        self.leaves[slot] = a
        self.leaves.append(b)
        return a, b

    def children(self, node: int) -> tuple[int, int]:
        return self.left[node], self.right[node]

    def validate(self) -> None:
        for n in range(self.n_nodes):
            l, r = self.left[n], self.right[n]
            if (l < 0) != (r < 0):
                raise AssertionError(f"node {n} has exactly one child")
        if sorted(self.leaves) != [n for n in range(self.n_nodes) if self.is_leaf(n)]:
            raise AssertionError("leaf list out of sync")


def sample_yule_tree(t: float, rng: RandomStream) -> BinaryTree:
    """Genealogy of a rate-1 binary splitting process run for time t.

    Embedded construction: with k living lineages the next split arrives after
    Exp(k) and hits a uniformly chosen lineage (equivalent in law to per-vertex
    unit-rate clocks by memorylessness).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    tree = BinaryTree()
    clock = 0.0
    while True:
        k = tree.n_leaves
        clock += rng.exp(k)
        if clock > t:
            return tree
        i = rng.randrange(k)
        tree.split_leaf(tree.leaves[i], slot=i)


def sample_yule_shape(n_leaves: int, rng: RandomStream) -> BinaryTree:
    """Tree shape after n_leaves-1 uniform splits (the jump chain of the above)."""
    tree = BinaryTree()
    for _ in range(n_leaves - 1):
        i = rng.randrange(tree.n_leaves)
        tree.split_leaf(tree.leaves[i], slot=i)
    return tree


def tree_distance(tree: BinaryTree, x: int, y: int) -> int:
    """Edge count of the unique x-y path; x and y must be leaves."""
    for node in (x, y):
        if not (0 <= node < tree.n_nodes) or not tree.is_leaf(node):
            raise ValueError(f"node {node} is not a leaf of this tree")
    d = 0
    while x != y:
        if tree.depth[x] >= tree.depth[y]:
            x = tree.parent[x]
        else:
            y = tree.parent[y]
        d += 1
    return d


def _edge_set(tree: BinaryTree, node: int) -> list[tuple[int, int]]:
    out = []
    if tree.parent[node] >= 0:
        out.append((tree.parent[node], node))
    if not tree.is_leaf(node):
        out.append((node, tree.left[node]))
        out.append((node, tree.right[node]))
    return out


def leaf_weight(
    tree: BinaryTree,
    from_node: int,
    blocked_edge: tuple[int, int] | None = None,
    exact: bool = False,
):
    """Sum of 2^-d(x, from_node) over leaves x reachable without crossing
    blocked_edge. Equals 1 exactly from the root of any full binary tree.
    exact=True accumulates in rationals."""
    if not (0 <= from_node < tree.n_nodes):
        raise ValueError(f"node {from_node} not in tree")
    blocked = frozenset()
    if blocked_edge is not None:
        a, b = blocked_edge
        blocked = frozenset(((a, b), (b, a)))
    total = Fraction(0) if exact else 0.0
    stack = [(from_node, -1, 0)]
    while stack:
        node, came_from, d = stack.pop()
        nxt = []
        for nb in (tree.parent[node], tree.left[node], tree.right[node]):
            if nb >= 0 and nb != came_from and (node, nb) not in blocked:
                nxt.append(nb)
        if tree.is_leaf(node):
            total += Fraction(1, 2**d) if exact else math.ldexp(1.0, -d)
        for nb in nxt:
            stack.append((nb, node, d + 1))
    return total


def crossing_rate(tree: BinaryTree, cut_edge: tuple[int, int]) -> float:
    """z = (sum over one side of 2^-d(x,u)) * (sum over the other of 2^-d(v,y))
    for the cut edge uv; the Poisson count of model edges crossing the cut has
    mean z*lam, and z <= 1 always."""
    u, v = cut_edge
    if not (0 <= u < tree.n_nodes and 0 <= v < tree.n_nodes):
        raise ValueError("cut edge endpoints not in tree")
    if tree.parent[v] != u and tree.parent[u] != v:
        raise ValueError(f"({u},{v}) is not a tree edge")
    return leaf_weight(tree, u, blocked_edge=cut_edge) * leaf_weight(
        tree, v, blocked_edge=cut_edge
    )


def forward_walk_leaf(tree: BinaryTree, rng: RandomStream, start: int = 0) -> int:
    """Descend from start by uniform child choices until a leaf; lands on leaf x
    with probability 2^-d(x, start)."""
    node = start
    while not tree.is_leaf(node):
        node = tree.right[node] if rng.coin() else tree.left[node]
    return node


def internal_nodes(tree: BinaryTree) -> list[int]:
    return [n for n in range(tree.n_nodes) if tree.left[n] >= 0]


def poisson_leaf_edges(
    tree: BinaryTree, lam: float, rng: RandomStream
) -> dict[tuple[int, int], int]:
    """Independent Po(lam * 2^(1-d(x,y))) parallel edges for every leaf pair.

    Pair mass routed through a lowest-common-ancestor node is lam/2 for every
    internal node, so the total count is Po(lam*(L-1)/2) and each edge picks a
    uniform internal node and forward-walks into its two child subtrees.
    """
    inner = internal_nodes(tree)
    counts: dict[tuple[int, int], int] = {}
    if not inner:
        return counts
    n_edges = rng.poisson(lam * len(inner) / 2.0)
    for _ in range(n_edges):
        node = inner[rng.randrange(len(inner))]
        x = forward_walk_leaf(tree, rng, tree.left[node])
        y = forward_walk_leaf(tree, rng, tree.right[node])
        key = (x, y) if x < y else (y, x)
        counts[key] = counts.get(key, 0) + 1
    return counts


def format_tree(tree: BinaryTree, node: int = 0) -> str:
    """Nested-parenthesis text for debug dumps and golden tests: a leaf is its
    depth, an internal node is (left right)."""
    if tree.is_leaf(node):
        return str(tree.depth[node])
    return f"({format_tree(tree, tree.left[node])} {format_tree(tree, tree.right[node])})"


def format_spine(spine: "SpineState") -> str:
    """Ray dump with edge-label annotations: v0 -[s1]- (T1) -[s2]- (T2) ..."""
    parts = ["v0"]
    for s, sub in zip(spine.labels, spine.subtrees):
        parts.append(f"-[{s:.6g}]- {format_tree(sub)}")
    return " ".join(parts)


def canopy_distance(i: int, j: int) -> int:
    """Graph distance between canopy leaves i and j: twice the height of their
    lowest common ancestor (highest differing bit position + 1)."""
    if i < 0 or j < 0:
        raise ValueError("leaf indices are nonnegative")
    if i == j:
        return 0
    return 2 * (i ^ j).bit_length()


class LabelSchedule:
    """Spine edge labels: a forced finite prefix, then Exp(1) draws, with a
    one-time additive offset folded into the first free draw."""

    def __init__(self, prefix: list[float] | None = None, offset: float = 0.0):
        self._prefix = list(prefix or [])
        self._i = 0
        self._offset = offset

    def next_label(self, rng: RandomStream) -> float:
        if self._i < len(self._prefix):
            s = self._prefix[self._i]
            self._i += 1
            return s
        s = rng.exp(1.0) + self._offset
        self._offset = 0.0
        return s

    @property
    def prefix_remaining(self) -> int:
        return len(self._prefix) - self._i


@dataclass
class SpineState:
    """Lazily revealed spine prefix: labels s_i, ages a_i = s_1+...+s_i, and a
    sampled age-a_i tree hanging at each spine vertex v_i."""

    labels: list[float] = field(default_factory=list)
    ages: list[float] = field(default_factory=list)
    subtrees: list[BinaryTree] = field(default_factory=list)
    schedule: LabelSchedule = field(default_factory=LabelSchedule)

    @property
    def n(self) -> int:
        return len(self.labels)


def extend_spine(spine: SpineState, rng: RandomStream) -> SpineState:
    """Reveal one more spine edge and its hanging subtree (in place)."""
    s = spine.schedule.next_label(rng)
    age = (spine.ages[-1] if spine.ages else 0.0) + s
    spine.labels.append(s)
    spine.ages.append(age)
    spine.subtrees.append(sample_yule_tree(age, rng))
    return spine


def spine_leaf_distance(
    spine: SpineState,
    a: tuple[int, int | None],
    b: tuple[int, int | None],
) -> int:
    """Distance between spine-tree leaves given as (subtree index, leaf node);
    (0, None) is the ray origin v0. Cross-subtree paths run through the ray:
    depth(x) + 1 + (n - m) + 1 + depth(y)."""
    (m, x), (n, y) = a, b
    if m > n:
        (m, x), (n, y) = (n, y), (m, x)
    if m == n:
        if m == 0:
            return 0
        return tree_distance(spine.subtrees[m - 1], x, y)
    dy = spine.subtrees[n - 1].depth[y]
    if m == 0:
        return n + 1 + dy
    dx = spine.subtrees[m - 1].depth[x]
    return dx + 1 + (n - m) + 1 + dy
