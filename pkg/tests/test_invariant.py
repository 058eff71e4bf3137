import math
from collections import Counter

import pytest

from vsplit.invariant import (
    CapExceeded,
    LazyShapeTree,
    SamplerCaps,
    double_edge_stat,
    evolve,
    sample_stationary_cluster,
    sample_stationary_cluster_shifted,
    sample_synchronous_cluster,
    _sample_shifted_with_diag,
)
from vsplit.multigraph import canonical_form, is_connected, serialize
from vsplit.processes import simulate_degree_chain
from vsplit.rng import stream
from vsplit.stats import (
    EmpiricalDistribution,
    bootstrap_tv_floor,
    chi_square_fit,
    fit_poisson,
    tv_distance,
    wilson_ci,
)

from oracles import (
    OracleAbort,
    dense_stationary_sample,
    dense_synchronous_sample,
    spine_tail_exact,
    synchronous_root_degree_direct,
)


# --- lazy tree shapes ---------------------------------------------------------

def test_lazy_shape_tree_single_leaf():
    t = LazyShapeTree(1)
    rng = stream(70, 0)
    assert t.walk(rng) == 0
    assert t.depth_of(0) == 0


def test_lazy_shape_tree_walk_law_matches_eager():
    # forward-walk leaf-depth distribution: lazy uniform-split shapes vs the
    # timed embedded construction, conditioned on equal size
    from vsplit.genealogy import forward_walk_leaf, sample_yule_shape

    rng = stream(71, 0)
    n = 30_000
    size = 6
    lazy_depths = Counter()
    eager_depths = Counter()
    for _ in range(n):
        t = LazyShapeTree(size)
        loc = t.walk(rng)
        lazy_depths[t.depth_of(loc)] += 1
        shape = sample_yule_shape(size, rng)
        eager_depths[shape.depth[forward_walk_leaf(shape, rng)]] += 1
    a = EmpiricalDistribution(dict(lazy_depths))
    b = EmpiricalDistribution(dict(eager_depths))
    tv = tv_distance(a, b)
    floor = bootstrap_tv_floor(a, b, stream(71, 1))
    assert tv < 0.02 + floor


def test_lazy_partner_mass_zero_depth():
    t = LazyShapeTree(1)
    # single leaf: no within-level mass
    assert 1.0 - math.ldexp(1.0, -t.depth_of(t.walk(stream(72, 0)))) == 0.0


# --- stationary sampler -------------------------------------------------------

def test_tiny_intensity_mostly_single_vertex():
    rng = stream(73, 0)
    n = 10_000
    singles = 0
    for _ in range(n):
        g, diag = sample_stationary_cluster(0.01, rng)
        singles += g.n_vertices == 1
    assert singles / n >= 0.98


def test_stationary_output_properties():
    rng = stream(74, 0)
    for _ in range(500):
        g, diag = sample_stationary_cluster(1.0, rng)
        assert is_connected(g)
        assert g.root == 0 and 0 in g.vertices
        assert all(u != v for (u, v) in g.edges)
        assert diag.component_size == g.n_vertices
        assert len(diag.stub_trajectory) == diag.spine_len + 1
        assert diag.stub_trajectory[-1] == 0


def test_stationary_root_degree_poisson():
    rng = stream(75, 0)
    d = EmpiricalDistribution()
    for _ in range(30_000):
        g, _ = sample_stationary_cluster(1.0, rng)
        d.add(g.degree(g.root))
    r = fit_poisson(d, 1.0)
    assert r.p_value > 0.01


def test_stationary_determinism_and_stable_ids():
    a, da = sample_stationary_cluster(1.0, stream(76, 0))
    b, db = sample_stationary_cluster(1.0, stream(76, 0))
    assert serialize(a) == serialize(b)
    assert da.stub_trajectory == db.stub_trajectory
    # breadth-first ids: root is 0 and ids are contiguous
    assert sorted(a.vertices) == list(range(a.n_vertices))


def test_stub_counts_start_poisson_lambda():
    rng = stream(77, 0)
    d = EmpiricalDistribution()
    for _ in range(30_000):
        _, diag = sample_stationary_cluster(1.0, rng)
        d.add(diag.stub_trajectory[0])
    r = fit_poisson(d, 1.0)
    assert r.p_value > 0.01


def test_fresh_stub_totals_poisson_half():
    rng = stream(78, 0)
    d = EmpiricalDistribution()
    while d.total < 30_000:
        _, diag = sample_stationary_cluster(1.0, rng)
        for f in diag.fresh_counts[1:]:
            d.add(f)
    r = fit_poisson(d, 0.5)
    assert r.p_value > 0.01


def test_stub_transitions_match_chain_simulator():
    # one-step transitions of the sampler's stub counts vs the chain simulator,
    # compared per from-state
    lam = 1.0
    rng = stream(79, 0)
    trans: dict[int, Counter] = {}
    need = 40_000
    got = 0
    while got < need:
        _, diag = sample_stationary_cluster(lam, rng)
        tr = diag.stub_trajectory
        for a, b in zip(tr, tr[1:]):
            trans.setdefault(a, Counter())[b] += 1
            got += 1
    rng2 = stream(79, 1)
    for start in (1, 2, 3):
        obs = trans.get(start)
        if not obs or sum(obs.values()) < 2_000:
            continue
        n = sum(obs.values())
        sim = Counter()
        for _ in range(n):
            sim[simulate_degree_chain(lam, start, 1, rng2)[-1]] += 1
        a = EmpiricalDistribution(dict(obs))
        b = EmpiricalDistribution(dict(sim))
        tv = tv_distance(a, b)
        floor = bootstrap_tv_floor(a, b, stream(79, 2 + start))
        assert tv < 0.02 + floor, f"from-state {start}"


def test_spine_length_tail_matches_exact_chain():
    # the sampler's spine length is the first-zero time of the stub chain;
    # compare the empirical tail with exact kernel powers
    lam = 1.0
    rng = stream(80, 0)
    n = 50_000
    lengths = Counter()
    for _ in range(n):
        _, diag = sample_stationary_cluster(lam, rng)
        lengths[diag.spine_len] += 1
    exact = spine_tail_exact(lam, 20)
    for L in (0, 1, 2, 5, 10, 20):
        emp = sum(c for k, c in lengths.items() if k > L) / n
        se = math.sqrt(max(exact[L] * (1 - exact[L]), 1e-12) / n)
        assert abs(emp - exact[L]) <= 4 * se, (L, emp, exact[L])


def test_stationary_vs_dense_oracle():
    # engine (lazy shapes, walk-based pair sampling) vs the eager explicit-
    # distance oracle, on canonical codes. The oracle's pair loop is quadratic
    # in level size, so both sides condition on the same bounded-size event.
    lam = 1.0
    n = 15_000
    max_spine, max_level = 12, 400
    a = EmpiricalDistribution()
    kept = 0
    i = 0
    while kept < n:
        g, diag = sample_stationary_cluster(lam, stream(81, 0, i))
        i += 1
        if diag.spine_len <= max_spine and all(s <= max_level for s in diag.level_sizes):
            a.add(canonical_form(g).code)
            kept += 1
    b = EmpiricalDistribution()
    kept = 0
    i = 0
    while kept < n:
        i += 1
        try:
            g = dense_stationary_sample(lam, stream(81, 1, i),
                                        max_spine=max_spine, max_level=max_level)
        except OracleAbort:
            continue
        b.add(canonical_form(g).code)
        kept += 1
    tv = tv_distance(a, b)
    floor = bootstrap_tv_floor(a, b, stream(81, 2))
    assert tv < 0.02 + floor


def test_caps_raise_with_diagnostics():
    caps = SamplerCaps(max_spine=1, max_materialized=10**6)
    rng = stream(82, 0)
    raised = False
    for _ in range(300):
        try:
            sample_stationary_cluster(2.0, rng, caps)
        except CapExceeded as e:
            raised = True
            assert e.diagnostics.spine_len >= 1
            break
    assert raised
    caps = SamplerCaps(max_spine=10**4, max_materialized=3)
    raised = False
    rng = stream(82, 1)
    for _ in range(300):
        try:
            sample_stationary_cluster(2.0, rng, caps)
        except CapExceeded as e:
            raised = True
            assert e.diagnostics.materialized_nodes > 3
            break
    assert raised


# --- shifted construction -------------------------------------------------------

def test_shifted_prefix_count_poisson():
    t = 2.0
    rng = stream(83, 0)
    d = EmpiricalDistribution()
    for _ in range(30_000):
        _, diag = _sample_shifted_with_diag(1.0, t, rng)
        d.add(diag.prefix_len)
    r = fit_poisson(d, t)
    assert r.p_value > 0.01


def test_shifted_rejects_nonpositive_t():
    with pytest.raises(ValueError):
        sample_stationary_cluster_shifted(1.0, 0.0, stream(84, 0))


def test_shifted_matches_plain_distribution():
    lam = t = 1.0
    n = 30_000
    a = EmpiricalDistribution()
    b = EmpiricalDistribution()
    for i in range(n):
        g, _ = sample_stationary_cluster(lam, stream(85, 0, i))
        a.add(canonical_form(g).code)
    for i in range(n):
        g = sample_stationary_cluster_shifted(lam, t, stream(85, 1, i))
        b.add(canonical_form(g).code)
    tv = tv_distance(a, b)
    floor = bootstrap_tv_floor(a, b, stream(85, 2))
    assert tv < 0.02 + floor


# --- evolve ----------------------------------------------------------------------

def test_evolve_t0_identity():
    g, _ = sample_stationary_cluster(1.0, stream(86, 0))
    assert evolve(g, 1.0, 0.0, stream(86, 1)) == g


# --- synchronous sampler -----------------------------------------------------------

def test_synchronous_tiny_intensity():
    rng = stream(87, 0)
    n = 10_000
    singles = sum(
        sample_synchronous_cluster(0.01, rng)[0].n_vertices == 1 for _ in range(n)
    )
    assert singles / n >= 0.98


def test_synchronous_root_degree_vs_direct_sum():
    lam = 1.0
    rng = stream(88, 0)
    a = EmpiricalDistribution()
    for _ in range(30_000):
        g, _ = sample_synchronous_cluster(lam, rng)
        a.add(g.degree(g.root))
    rng2 = stream(88, 1)
    b = EmpiricalDistribution()
    for _ in range(30_000):
        b.add(synchronous_root_degree_direct(lam, rng2, levels=20))
    tv = tv_distance(a, b)
    floor = bootstrap_tv_floor(a, b, stream(88, 2))
    assert tv < 0.02 + floor
    assert fit_poisson(a, lam).p_value > 0.01


def test_synchronous_vs_dense_oracle():
    # conditioned on <= 9 levels on both sides (oracle is quadratic per level)
    lam = 1.0
    n = 15_000
    levels = 9
    a = EmpiricalDistribution()
    kept = 0
    i = 0
    while kept < n:
        g, diag = sample_synchronous_cluster(lam, stream(89, 0, i))
        i += 1
        if diag.spine_len <= levels:
            a.add(canonical_form(g).code)
            kept += 1
    b = EmpiricalDistribution()
    kept = 0
    i = 0
    while kept < n:
        i += 1
        try:
            g = dense_synchronous_sample(lam, stream(89, 1, i), abort_levels=levels)
        except OracleAbort:
            continue
        b.add(canonical_form(g).code)
        kept += 1
    tv = tv_distance(a, b)
    floor = bootstrap_tv_floor(a, b, stream(89, 2))
    assert tv < 0.02 + floor


def test_synchronous_output_properties():
    rng = stream(90, 0)
    for _ in range(500):
        g, diag = sample_synchronous_cluster(1.0, rng)
        assert is_connected(g)
        assert g.root == 0
        assert all(u != v for (u, v) in g.edges)


# --- double edges -------------------------------------------------------------------

def test_double_edge_synchronous_two_sevenths():
    r = double_edge_stat("synchronous", 1.0, 6_000, stream(91, 0))
    se = math.sqrt(r.frequency * (1 - r.frequency) / r.n_conditional)
    assert abs(r.frequency - 2.0 / 7.0) <= 3 * se
    assert r.ci_lo < 2.0 / 7.0 < r.ci_hi


def test_double_edge_stationary_one_fifth():
    # closed-form for the continuous-time limit: per-step dyadic double-edge
    # mass has mean (2/3)^i through spine position i, giving sum (1/6)^i = 1/5
    r = double_edge_stat("stationary", 1.0, 6_000, stream(91, 1))
    se = math.sqrt(r.frequency * (1 - r.frequency) / r.n_conditional)
    assert abs(r.frequency - 0.2) <= 3 * se
    assert r.frequency + 3 * se < 0.26


def test_double_edge_budget_errors():
    with pytest.raises(RuntimeError, match="budget"):
        double_edge_stat("stationary", 0.01, 1_000, stream(92, 0), budget=1_000)
