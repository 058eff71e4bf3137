from vsplit import experiments
from vsplit.invariant import SamplerCaps


CAPS = SamplerCaps()


def test_sample_graphs_counts_cap_failures():
    tiny = SamplerCaps(max_spine=1, max_materialized=10**6)
    graphs, diags, failures = experiments.sample_graphs(
        "m", 2.0, 0.0, 200, 77, tiny, 10**6, want_diagnostics=True)
    assert failures > 0
    assert sum(g is None for g in graphs) == failures
    assert sum(d is not None for d in diags) == 200 - failures


def test_sample_graphs_cluster_kind():
    graphs, _, failures = experiments.sample_graphs(
        "cluster", 1.0, 0.5, 50, 78, CAPS, 10**6)
    assert failures == 0
    assert all(g.root in g.vertices for g in graphs)


def test_mean_size_rows_and_stability_check():
    rows, checks = experiments.mean_size([0.5], 4000, 79, 1, CAPS)
    assert rows[0]["n"] == 4000
    assert 1.2 < rows[0]["mean"] < 2.4  # small cluster at lam=0.5
    names = [c.name for c in checks]
    assert any(n.startswith("mean_size_stable") for n in names)


def test_threshold_rows_have_wilson_cis():
    rows, checks = experiments.threshold(2.0, [0.0, 1.0], 300, 80, 1, 10**6)
    assert rows[0]["frac_connected"] == 1.0
    assert rows[0]["conn_ci_lo"] <= rows[0]["frac_connected"] <= rows[0]["conn_ci_hi"]
    assert len(checks) == 2


def test_convergence_row_structure():
    rows, checks = experiments.convergence(1.0, [0.5, 1.0], 3000, 81, 1, CAPS)
    assert [r["t"] for r in rows] == [0.5, 1.0]
    assert rows[1]["tv"] <= rows[0]["tv"] + 0.1
    assert {c.name for c in checks} == {
        "convergence_monotone_single", "convergence_final_single"}


def test_convergence_from_cycle_start():
    rows, _ = experiments.convergence(1.0, [0.5], 2000, 82, 1, CAPS,
                                      init_kind="cycle5")
    assert rows[0]["init"] == "cycle5"
    assert rows[0]["tv"] > 0.3  # a 5-cycle is far from stationarity at t=0.5


def test_chain_experiment_rows():
    rows, checks = experiments.chain(2.0, 25_000, 83, 1)
    assert [r["test"] for r in rows] == ["one_step_stationary", "burn_in_100"]
    assert all(c.passed for c in checks)


def test_double_edge_experiment_order_check():
    rows, checks = experiments.double_edge(1.0, 2500, 84, 1, CAPS)
    by_name = {c.name: c for c in checks}
    assert by_name["double_edge_synchronous_2_7"].passed
    assert by_name["double_edge_stationary_upper"].passed
    freq = {r["sampler"]: r["frequency"] for r in rows}
    assert freq["stationary"] < freq["synchronous"]


def test_fan_out_chunking():
    assert experiments._chunks(10, 3) == [(0, 4), (4, 8), (8, 10)]
    assert experiments._chunks(2, 8) == [(0, 1), (1, 2)]
    assert experiments._chunks(5, 1) == [(0, 5)]


def test_check_line_format():
    c = experiments.Check("x", True, 1.0, 2.0, "why")
    assert c.line() == "[PASS] x observed=1 bound=2 (why)"
    c = experiments.Check("x", False, 1.0, 2.0)
    assert c.line().startswith("[FAIL] x")
