import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rand_graph, rand_partial, rand_partial_ktree, unit_zero, wishart
from gramforge.completion import (
    UPPER_RULES,
    CompletionResult,
    DistanceData,
    apex_complete,
    barvinok_bound,
    certify,
    clique_sum_complete,
    clique_sum_graph,
    contract_lift,
    gram_to_edm_points,
    k222_vectors,
    k222_witness,
    ktree_complete,
    lift_contracted,
    phi,
    phi_inv,
    squared_distances,
    verify_certificate,
    verify_completion,
    zero_extend,
)
from gramforge.errors import (
    InconsistentOverlapError,
    InfeasibleDataError,
    InfeasibleWidthError,
    InvalidEDMDataError,
    NotPSDError,
    ParseError,
)
from gramforge.graphs import (
    Graph,
    complete_bipartite,
    complete_graph,
    contract_edge,
    cycle_graph,
    delete_edge,
    delete_node,
    k222,
    path_graph,
    petersen,
    prism_c5xc2,
    suspension,
    treewidth,
    wagner_v8,
)
from gramforge.numerics import gram, is_psd, numeric_rank
from gramforge.partial import PartialMatrix, project_to_graph
from test_graphs import brute_minor


def ktree(G, a, k):
    return ktree_complete(G, a, k)


# --- certificates -------------------------------------------------------------


@pytest.mark.parametrize("n", range(1, 9))
def test_certify_complete_graphs(n):
    cert = certify(complete_graph(n))
    assert (cert.lower, cert.upper) == (n, n)
    assert verify_certificate(complete_graph(n), cert) == []


@pytest.mark.parametrize("n,m", [(n, m) for n in (1, 2, 3) for m in range(n, 6)])
def test_certify_complete_bipartite(n, m):
    G = complete_bipartite(n, m)
    cert = certify(G)
    assert (cert.lower, cert.upper) == (n + 1, n + 1)
    assert verify_certificate(G, cert) == []


def test_certify_named_graphs():
    cert = certify(k222())
    assert (cert.lower, cert.upper, cert.lower_minor) == (5, 5, "K222")
    for G in (wagner_v8(), prism_c5xc2()):
        cert = certify(G)
        assert (cert.lower, cert.upper) == (4, 4)
        assert cert.upper_witness == "no-K5-no-K222"
        assert verify_certificate(G, cert) == []
    cert = certify(petersen())
    assert cert.lower == 5 and verify_certificate(petersen(), cert) == []


def test_certify_small_cases():
    cert = certify(Graph(4, []))
    assert (cert.lower, cert.upper, cert.upper_witness) == (1, 1, "edgeless")
    cert = certify(path_graph(5))
    assert (cert.lower, cert.upper, cert.upper_witness) == (2, 2, "forest")
    cert = certify(cycle_graph(6))
    assert (cert.lower, cert.upper, cert.upper_witness) == (3, 3, "no-K4")
    with pytest.raises(ValueError):
        certify(Graph(0, []))


def test_barvinok_bound():
    for m in range(0, 60):
        r = barvinok_bound(Graph(m, [])) if m else 0
        assert r == math.floor((math.sqrt(8 * m + 1) - 1) / 2)
        assert r * (r + 1) // 2 <= m < (r + 1) * (r + 2) // 2


def test_certificate_json():
    d = certify(wagner_v8()).to_dict()
    assert d["upper_witness"]["rule"] == "no-K5-no-K222"
    assert len(d["lower_witness"]["branch_sets"]) == 4
    d = certify(k222()).to_dict()
    assert d["upper_witness"]["decomposition"]["exact"] is True


def test_verify_certificate_catches_tampering():
    cert = certify(cycle_graph(5))
    cert.upper = 2
    assert verify_certificate(cycle_graph(5), cert)
    cert = certify(k222())
    cert.upper_data["decomposition"] = treewidth(path_graph(6))[1]
    assert verify_certificate(k222(), cert)


def test_certify_budget_marks_non_exhaustive():
    rng = np.random.default_rng(3)
    G = rand_graph(rng, 14, 0.5)
    cert = certify(G, budget=5)
    assert cert.lower <= cert.upper
    assert verify_certificate(G, cert, recheck_minor_free=False) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_certify_lower_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    G = rand_graph(rng, int(rng.integers(2, 8)), 0.6)
    cert = certify(G)
    # lower is the largest r with a K_r minor (r <= 5 here), raised by a K222 minor
    r = max(r for r in range(1, G.n + 1) if brute_minor(G, complete_graph(r)))
    expected = max(r, 5) if G.n >= 6 and brute_minor(G, k222()) else r
    assert cert.lower == expected
    assert verify_certificate(G, cert) == []


def _random_minor(rng, G):
    for _ in range(int(rng.integers(1, 4))):
        if G.n <= 1:
            break
        op = rng.integers(3)
        edges = G.sorted_edges()
        if op == 0 and edges:
            G = delete_edge(G, edges[rng.integers(len(edges))])
        elif op == 1 and edges:
            G = contract_edge(G, edges[rng.integers(len(edges))])
        else:
            G = delete_node(G, int(rng.integers(G.n)))
    return G


def test_certify_minor_monotone():
    rng = np.random.default_rng(11)
    for _ in range(100):
        G = rand_graph(rng, int(rng.integers(3, 9)), 0.55)
        H = _random_minor(rng, G)
        assert certify(H).lower <= certify(G).upper


def test_k222_edge_minors_certified_four():
    G = k222()
    for e in G.edges:
        assert certify(contract_edge(G, e)).upper <= 4
        assert certify(delete_edge(G, e)).upper <= 4


# --- completion results --------------------------------------------------------


def test_verify_completion_reports_problems():
    G = path_graph(3)
    a = unit_zero(G)
    assert verify_completion(a, np.eye(3)) == []
    bad = np.eye(3)
    bad[0, 1] = bad[1, 0] = 0.1
    assert any("residual" in p for p in verify_completion(a, bad))
    X = np.eye(3)
    X[0, 2] = X[2, 0] = 2.0
    assert any("psd" in p for p in verify_completion(a, X))
    res = CompletionResult.build(np.eye(3), a, "test")
    res.rank = 2
    assert any("rank" in p for p in verify_completion(a, res))


def test_completion_json():
    G = path_graph(2)
    res = CompletionResult.build(np.eye(2), unit_zero(G), "test")
    assert res.to_dict() == {"rank": 2, "residual": 0.0, "method": "test", "X": [[1.0, 0.0], [0.0, 1.0]]}


# --- k-tree completion ------------------------------------------------------------


def test_ktree_path_example():
    G = path_graph(3)
    a = PartialMatrix(G, {(0, 0): 1, (1, 1): 1, (2, 2): 1, (0, 1): 0.5, (1, 2): 0.5})
    res = ktree_complete(G, a, 1)
    assert res.rank <= 2 and res.residual <= 1e-8
    assert verify_completion(a, res) == []


def test_ktree_fully_specified_clique(rng):
    for k in (1, 2, 3):
        X = wishart(rng, k + 1)
        G = complete_graph(k + 1)
        res = ktree_complete(G, project_to_graph(X, G), k)
        assert np.max(np.abs(res.X - X)) <= 1e-9 * (1 + np.abs(X).max())
        assert res.rank <= k + 1


def test_ktree_k222_is_rank_five():
    w = k222_witness()
    res = ktree_complete(w.graph, w.partial, 4)
    assert res.rank == 5
    assert verify_completion(w.partial, res) == []


def test_ktree_width_error():
    with pytest.raises(InfeasibleWidthError):
        ktree_complete(k222(), k222_witness().partial, 3)


def test_ktree_infeasible_data():
    G = cycle_graph(4)
    vals = {(i, i): 1.0 for i in range(4)}
    vals.update({(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0, (0, 3): -1.0})
    with pytest.raises(InfeasibleDataError):
        ktree_complete(G, PartialMatrix(G, vals), 2)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_ktree_random_low_rank_bound(k):
    rng = np.random.default_rng(k)
    for _ in range(20):
        n = int(rng.integers(k + 2, 13))
        G = rand_partial_ktree(rng, n, k)
        a = rand_partial(rng, G)
        res = ktree_complete(G, a, k)
        assert res.rank <= k + 1
        assert verify_completion(a, res) == []


def test_ktree_rank_matches_binding_upper():
    rng = np.random.default_rng(9)
    for k in (2, 3):
        for _ in range(5):
            G = rand_partial_ktree(rng, int(rng.integers(k + 3, 10)), k, keep=1.0)
            cert = certify(G)
            res = ktree_complete(G, rand_partial(rng, G), k)
            assert cert.upper == k + 1 == res.rank


# --- clique sums ---------------------------------------------------------------------


def test_clique_sum_two_triangles():
    T = complete_graph(3)
    a = unit_zero(T)
    res, U, au = clique_sum_complete(T, a, T, a, [(0, 0), (1, 1)], 3)
    assert U.n == 4 and U.m == 5
    assert res.rank <= 3
    assert verify_completion(au, res) == []


def test_clique_sum_with_subclique_part(rng):
    G1 = cycle_graph(5)
    a1 = rand_partial(rng, G1)
    X1 = ktree_complete(G1, a1, 2).X
    K2 = complete_graph(2)
    a2 = project_to_graph(X1[np.ix_([1, 2], [1, 2])], K2)
    res, U, _ = clique_sum_complete(G1, a1, K2, a2, [(1, 0), (2, 1)], 3, X1=X1)
    assert U == G1
    assert np.allclose(res.X, X1, atol=1e-9)


def test_clique_sum_two_k4_blocks(rng):
    X = wishart(rng, 5)
    K4 = complete_graph(4)
    a1 = project_to_graph(X[np.ix_([0, 1, 2, 3], [0, 1, 2, 3])], K4)
    a2 = project_to_graph(X[np.ix_([1, 2, 3, 4], [1, 2, 3, 4])], K4)
    res, U, au = clique_sum_complete(K4, a1, K4, a2, [(1, 0), (2, 1), (3, 2)], 4)
    assert U.m == 9 and not U.has_edge(0, 4)
    assert res.rank <= 4
    assert verify_completion(project_to_graph(X, U), res) == []


def test_clique_sum_rank_at_most_max_of_parts():
    rng = np.random.default_rng(4)
    for _ in range(10):
        G1 = rand_partial_ktree(rng, 6, 2, keep=1.0)
        G2 = rand_partial_ktree(rng, 5, 2, keep=1.0)
        U, to_union = clique_sum_graph(G1, G2, [(0, 0), (1, 1)])
        X = wishart(rng, U.n)
        idx2 = [to_union[v] for v in range(G2.n)]
        a1 = project_to_graph(X[: G1.n, : G1.n], G1)
        a2 = project_to_graph(X[np.ix_(idx2, idx2)], G2)
        r1, r2 = ktree(G1, a1, 2), ktree(G2, a2, 2)
        res, _, au = clique_sum_complete(G1, a1, G2, a2, [(0, 0), (1, 1)], 3, X1=r1.X, X2=r2.X)
        assert res.rank <= max(r1.rank, r2.rank)
        assert verify_completion(au, res) == []
        assert au == project_to_graph(X, U)


def test_clique_sum_errors():
    T = complete_graph(3)
    a = unit_zero(T)
    b = a.map_values(lambda k, v: 2.0 if k == (0, 0) else v)
    with pytest.raises(InconsistentOverlapError):
        clique_sum_complete(T, a, T, b, [0, 1], 3)
    with pytest.raises(ValueError):
        clique_sum_complete(path_graph(3), unit_zero(path_graph(3)), T, a, [0, 2], 3)


# --- contraction lift -------------------------------------------------------------------


def test_contract_lift_k2():
    K2 = complete_graph(2)
    c = PartialMatrix(Graph(1, []), {(0, 0): 3.0})
    lifted = lift_contracted(K2, (0, 1), c)
    assert lifted.dense().tolist() == [[3, 3], [3, 3]]
    res = contract_lift(K2, (0, 1), c, lambda G, a: ktree_complete(G, a, 1))
    assert res.X[0, 0] == pytest.approx(3.0, abs=1e-12)


def test_contract_lift_c4_matches_g_completion(rng):
    C4 = cycle_graph(4)
    Gc = contract_edge(C4, (0, 1))
    ac = rand_partial(rng, Gc)
    seen = {}

    def completer(G, a):
        res = ktree_complete(G, a, 2)
        seen["X"] = res.X
        return res

    res = contract_lift(C4, (0, 1), ac, completer)
    X = seen["X"]
    # node 0 survives; node 3 was relabelled to 1
    assert res.X[0, 1] == pytest.approx(X[0, 3])
    assert res.X[0, 2] == pytest.approx(X[0, 2])
    assert verify_completion(ac, res) == []


def test_contract_lift_rank_monotone():
    rng = np.random.default_rng(5)
    for _ in range(50):
        G = rand_partial_ktree(rng, int(rng.integers(4, 9)), 2)
        if not G.edges:
            continue
        e = G.sorted_edges()[rng.integers(G.m)]
        Gc = contract_edge(G, e)
        ac = rand_partial(rng, Gc)
        full = {}

        def completer(H, a):
            full["r"] = ktree_complete(H, a, 2)
            return full["r"]

        res = contract_lift(G, e, ac, completer)
        assert res.rank <= full["r"].rank
        assert verify_completion(ac, res) == []


# --- apex and zero extension ---------------------------------------------------------------


def test_apex_edgeless():
    G = Graph(3, [])
    H = suspension(G)
    vals = {(i, i): 0.0 for i in range(4)}
    vals[(3, 3)] = 1.0
    vals.update({(i, 3): 0.0 for i in range(3)})
    res = apex_complete(PartialMatrix(H, vals), lambda g, a: np.diag(a.diagonal()), 0)
    E = np.zeros((4, 4))
    E[3, 3] = 1
    assert np.allclose(res.X, E) and res.rank == 1


def test_apex_rank_identity():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = int(rng.integers(3, 9))
        G = rand_partial_ktree(rng, n, 1)
        y = rand_partial(rng, suspension(G))
        inner = {}

        def completer(g, a):
            inner["Z"] = ktree_complete(g, a, 1)
            return inner["Z"]

        res = apex_complete(y, completer, 2)
        assert res.rank == inner["Z"].rank + 1
        assert res.rank <= 3
        assert verify_completion(y, res) == []


def test_apex_zero_diagonal_and_errors():
    G = path_graph(2)
    H = suspension(G)
    vals = {(0, 0): 1.0, (1, 1): 1.0, (0, 1): 0.5, (2, 2): 0.0, (0, 2): 0.0, (1, 2): 0.0}
    res = apex_complete(PartialMatrix(H, vals), lambda g, a: ktree_complete(g, a, 1), 2)
    assert np.allclose(res.X[2], 0)
    with pytest.raises(InfeasibleDataError):
        apex_complete(PartialMatrix(H, {**vals, (0, 2): 0.5}), lambda g, a: ktree_complete(g, a, 1), 2)
    with pytest.raises(NotPSDError):
        apex_complete(PartialMatrix(H, {**vals, (2, 2): -1.0}), lambda g, a: ktree_complete(g, a, 1), 2)
    with pytest.raises(ValueError):
        apex_complete(unit_zero(path_graph(3)), lambda g, a: ktree_complete(g, a, 1), 2)


def test_zero_extend():
    x = PartialMatrix(Graph(1, []), {(0, 0): 1.0})
    y = zero_extend(Graph(1, []), x)
    assert y.dense().tolist() == [[1, 0], [0, 1]]
    G = cycle_graph(5)
    x = unit_zero(G)
    y = zero_extend(G, x)
    assert y.graph == suspension(G)
    assert all(y[k] == v for k, v in x.items())


def test_zero_extend_apex_row_of_tight_completion(rng):
    G = rand_partial_ktree(rng, 7, 2)
    x = rand_partial(rng, G, r=2)
    y = zero_extend(G, x)
    res = apex_complete(y, lambda g, a: ktree_complete(g, a, 2), 3)
    e = np.zeros(8)
    e[7] = 1
    assert np.allclose(res.X[7], e, atol=1e-9)


# --- phi ------------------------------------------------------------------------------------


def test_phi_examples():
    G = path_graph(2)
    d = phi(PartialMatrix(G, {(0, 0): 1, (1, 1): 1, (0, 1): 1}))
    assert (d[0, 2], d[1, 2], d[0, 1]) == (1, 1, 0)
    d = phi(PartialMatrix(G, {(0, 0): 1, (1, 1): 4, (0, 1): 1}))
    assert (d[0, 2], d[1, 2], d[0, 1]) == (1, 4, 3)
    assert d.graph == suspension(G)


dyadic = st.integers(-64, 64).map(lambda v: v / 16)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.data())
def test_phi_round_trip_exact(seed, data):
    G = rand_graph(np.random.default_rng(seed), data.draw(st.integers(1, 8)))
    vals = {(i, i): data.draw(st.integers(0, 64)) / 16 for i in range(G.n)}
    vals.update({e: data.draw(dyadic) for e in G.edges})
    x = PartialMatrix(G, vals)
    d = phi(x)
    if all(v >= 0 for v in d.values.values()):
        assert phi_inv(d) == x
    # and from the distance side
    dv = {e: data.draw(st.integers(0, 64)) / 16 for e in suspension(G).edges}
    dd = DistanceData(suspension(G), dv)
    assert phi(phi_inv(dd)) == dd


def test_phi_round_trip_random_floats(rng):
    for _ in range(100):
        G = rand_graph(rng, int(rng.integers(1, 9)))
        x = rand_partial(rng, G)
        back = phi_inv(phi(x))
        assert max(abs(back[k] - v) for k, v in x.items()) <= 1e-12 * (1 + max(abs(v) for _, v in x.items()))


def test_phi_inv_errors():
    H = suspension(path_graph(2))
    d = DistanceData(H, {e: 1.0 for e in H.edges})
    with pytest.raises(InvalidEDMDataError):
        phi_inv(DistanceData(H, {**d.values, (0, 1): -1.0}))
    with pytest.raises(InvalidEDMDataError):
        phi_inv(DistanceData(path_graph(3), {(0, 1): 1.0, (1, 2): 1.0}))


def test_distance_data_json():
    H = suspension(cycle_graph(4))
    d = DistanceData(H, {e: float(i) for i, e in enumerate(H.sorted_edges())})
    assert DistanceData.from_dict(d.to_dict()) == d
    with pytest.raises(ParseError):
        DistanceData.from_dict({"graph": H.to_dict(), "distances": []})
    with pytest.raises(ValueError):
        DistanceData(H, {(0, 2): 1.0})


def test_gram_to_edm_points():
    U = gram_to_edm_points(np.array([[1.0]]))
    assert U.tolist() == [[1.0], [0.0]]
    P = k222_vectors()
    U = gram_to_edm_points(P)
    assert U.shape == (7, 5)
    d = phi(k222_witness().partial)
    D = squared_distances(U)
    assert max(abs(D[i, j] - v) for (i, j), v in d.items()) <= 1e-12


# --- K222 witness ------------------------------------------------------------------------------


def test_k222_witness():
    w = k222_witness()
    assert w.graph == k222()
    assert numeric_rank(w.gram) == 5
    B = w.partial.block(w.block)
    assert abs(np.linalg.det(B)) <= 1e-15
    assert np.allclose(w.kernel, [-1 / math.sqrt(2), -1 / math.sqrt(2), 1])
    assert np.allclose(B @ w.kernel, 0, atol=1e-15)
    assert w.forced_entries == {(0, 3): 0.0, (1, 4): 0.0, (2, 5): 0.0}
    assert all(w.gram[k] == v for k, v in w.forced_entries.items())
    assert w.partial == project_to_graph(gram(k222_vectors()), k222())


def test_k222_forced_entries_are_unique():
    # any psd completion X has X v = 0 for the block kernel; perturbing a
    # forced entry by t breaks psd-ness for every t != 0
    w = k222_witness()
    for (i, j) in w.forced_entries:
        for t in (1e-3, -1e-3, 0.1):
            X = w.gram.copy()
            X[i, j] = X[j, i] = t
            assert not is_psd(X, 1e-12)


def test_upper_rules_order():
    assert UPPER_RULES[0] == "edgeless" and UPPER_RULES[-1] == "barvinok"
