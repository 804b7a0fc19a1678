import json
import subprocess
import sys

import networkx as nx
import numpy as np
import pytest

from conftest import rand_graph, rand_partial_ktree, unit_zero, wishart
from gramforge import cli
from gramforge.completion import k222_witness, phi
from gramforge.graphs import Graph, cycle_graph, named_graph
from gramforge.numerics import is_psd, numeric_rank
from gramforge.partial import PartialMatrix, project_to_graph
from gramforge.sdp import maxcut_relaxation


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 and out else None)


def save(path, obj):
    path.write_text(json.dumps(obj.to_dict() if hasattr(obj, "to_dict") else obj))
    return str(path)


def model_is_valid(G, sets, H):
    """Branch sets: disjoint, connected in G, adjacent wherever H has an edge."""
    nxG = nx.Graph(list(G.edges))
    nxG.add_nodes_from(range(G.n))
    flat = [v for s in sets for v in s]
    if len(flat) != len(set(flat)):
        return False
    if not all(nx.is_connected(nxG.subgraph(s)) for s in sets):
        return False
    return all(any(nxG.has_edge(u, v) for u in sets[a] for v in sets[b]) for a, b in H.edges)


def test_certify_named(capsys):
    code, out = run(["certify", "named:K222"], capsys)
    assert code == 0
    assert (out["lower"], out["upper"]) == (5, 5)
    assert out["input"] == "named:K222" and out["trace"]


def test_certify_fixture_files(capsys):
    for name, bounds in [("k5", (5, 5)), ("k33", (4, 4)), ("v8", (4, 4)), ("c5xc2", (4, 4)), ("c4", (3, 3))]:
        code, out = run(["certify", cli.fixture_path(f"{name}.graph.json")], capsys)
        assert code == 0 and (out["lower"], out["upper"]) == bounds, name


def test_fixture_graphs_match_builtins():
    for name, key in [("k222", "K222"), ("v8", "V8"), ("c5xc2", "C5xC2"), ("c4", "C4"), ("k5", "K5"),
                      ("k33", "K_{3,3}"), ("petersen", "Petersen")]:
        assert Graph.from_dict(cli.load_fixture(f"{name}.graph.json")) == named_graph(key)
    assert PartialMatrix.from_dict(cli.load_fixture("c4.partial.json")) == unit_zero(cycle_graph(4))


def test_witness_fixture_matches_fresh_derivation(tmp_path, capsys):
    code, out = run(["witness", "k222", "--out-dir", tmp_path], capsys)
    assert code == 0
    for name in ("graph.json", "partial.json", "gram.json", "forced.json", "bundle.json"):
        fresh = json.loads((tmp_path / name).read_text())
        assert fresh == cli.load_fixture(f"k222_witness/{name}"), name
    w = k222_witness()
    assert PartialMatrix.from_dict(out["partial"]) == w.partial
    assert np.array_equal(np.array(out["gram"]["rows"]), w.gram)


def test_certify_parallel_random(tmp_path, capsys):
    rng = np.random.default_rng(11)
    paths = []
    graphs = []
    for s in range(3):
        G = rand_graph(rng, 30, 0.12)
        graphs.append(G)
        paths.append(save(tmp_path / f"g{s}.json", G))
    code, out = run(["certify", "--jobs", 2, *paths, "named:V8"], capsys)
    assert code == 0 and len(out) == 4
    for G, res in zip(graphs + [named_graph("V8")], out):
        assert res["lower"] <= res["upper"]
        sets = res["lower_witness"]["branch_sets"]
        H = named_graph("K222") if res["lower_witness"]["minor"] == "K222" else Graph(
            res["lower"], [(i, j) for i in range(res["lower"]) for j in range(i + 1, res["lower"])])
        assert model_is_valid(G, sets, H)
    serial = [run(["certify", p], capsys)[1] for p in paths]
    assert serial == out[:3]


def test_complete_partial_2tree(tmp_path, capsys):
    rng = np.random.default_rng(12)
    G = rand_partial_ktree(rng, 12, 2)
    a = project_to_graph(wishart(rng, 12), G)
    code, out = run(["complete", save(tmp_path / "g.json", G), save(tmp_path / "a.json", a), "--k", 2], capsys)
    assert code == 0 and out["flags"] == []
    X = np.array(out["X"])
    assert out["rank"] <= 3 and numeric_rank(X) <= 3 and is_psd(X)
    assert max(abs(X[k] - v) for k, v in a.items()) <= 1e-7


def test_complete_infeasible_exits_3(tmp_path, capsys):
    G = Graph(2, [(0, 1)])
    a = PartialMatrix(G, {(0, 0): 1.0, (1, 1): 1.0, (0, 1): 2.0})
    code, _ = run(["complete", save(tmp_path / "g.json", G), save(tmp_path / "a.json", a), "--k", 1], capsys)
    assert code == 3


def test_parse_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["certify", bad], capsys)[0] == 2
    assert run(["certify", tmp_path / "missing.json"], capsys)[0] == 2
    assert run(["certify", "named:nope"], capsys)[0] == 2
    assert run(["witness", "k33"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["complete", "named:C4"])
    assert exc.value.code == 2


def test_solver_failure_exits_4(tmp_path, capsys):
    p = maxcut_relaxation(named_graph("Petersen"))
    code, _ = run(["solve", save(tmp_path / "p.json", p), "--max-iters", 1], capsys)
    assert code == 4


def test_maxcut_c4(capsys):
    code, out = run(["maxcut", "named:C4"], capsys)
    assert code == 0
    assert out["value"] == pytest.approx(4, abs=1e-6)
    assert out["reduced_value"] == pytest.approx(4, abs=1e-6)
    assert out["reduced_rank"] == 1


def test_solve_then_reduce(tmp_path, capsys):
    p = maxcut_relaxation(named_graph("C5"))
    pp = save(tmp_path / "p.json", p)
    code, sol = run(["solve", pp], capsys)
    assert code == 0 and sol["status"] == "optimal"
    sp = save(tmp_path / "s.json", sol)
    code, red = run(["reduce", pp, sp, "--preserve-objective"], capsys)
    assert code == 0
    assert red["rank"] * (red["rank"] + 1) // 2 <= p.m + 1
    assert red["objective"] == pytest.approx(sol["primal_value"], abs=1e-6)


def test_stretch_c4(capsys):
    code, out = run(["stretch", "named:C4", cli.fixture_path("c4.partial.json"), "--pair", 0, 2], capsys)
    assert code == 0
    assert out["pair"] == [0, 2]
    assert abs(out["optimum"]) == pytest.approx(1, abs=1e-7)
    assert out["equilibrium_residual"] <= 1e-7


def test_convert_round_trip(tmp_path, capsys):
    rng = np.random.default_rng(13)
    G = rand_graph(rng, 5)
    # dyadic values survive both maps exactly
    X = np.round(wishart(rng, 5) * 64) / 64
    a = project_to_graph(X, G)
    code, d = run(["convert", save(tmp_path / "a.json", a), "--gram-to-edm"], capsys)
    assert code == 0 and d == phi(a).to_dict()
    code, back = run(["convert", save(tmp_path / "d.json", d), "--edm-to-gram"], capsys)
    assert code == 0 and PartialMatrix.from_dict(back) == a


def test_oracle_gram_and_distance(tmp_path, capsys):
    w = k222_witness()
    gp = save(tmp_path / "g.json", w.graph)
    code, out = run(["oracle", gp, save(tmp_path / "a.json", w.partial), "--k", 5, "--restarts", 5], capsys)
    assert code == 0 and out["converged"]
    d = phi(w.partial)
    code, out = run(["oracle", save(tmp_path / "sg.json", d.graph), save(tmp_path / "d.json", d), "--k", 5,
                     "--restarts", 5], capsys)
    assert code == 0 and out["converged"]
    assert run(["oracle", gp, save(tmp_path / "d2.json", d), "--k", 5], capsys)[0] == 2


def test_output_file_and_determinism(tmp_path, capsys):
    f1, f2 = tmp_path / "1.json", tmp_path / "2.json"
    for f in (f1, f2):
        argv = ["oracle", "named:C4", cli.fixture_path("c4.partial.json"), "--k", 2, "-o", f]
        assert cli.main([str(a) for a in argv]) == 0
    assert f1.read_bytes() == f2.read_bytes()
    assert capsys.readouterr().out == ""
    text = f1.read_text()
    assert cli.dumps(json.loads(text)) == text


def test_env_and_flag_precedence(monkeypatch):
    args = cli.build_parser().parse_args(["maxcut", "named:C4"])
    monkeypatch.setenv("GRAMFORGE_TOL_FEAS", "1e-5")
    monkeypatch.setenv("GRAMFORGE_SEED", "7")
    cfg = cli._config(args)
    assert cfg.tol_feas == 1e-5 and cfg.seed == 7
    args = cli.build_parser().parse_args(["maxcut", "named:C4", "--tol-feas", "1e-9", "--seed", "3"])
    cfg = cli._config(args)
    assert cfg.tol_feas == 1e-9 and cfg.seed == 3
    monkeypatch.setenv("GRAMFORGE_TOL_FEAS", "-1")
    assert cli.main(["maxcut", "named:C4"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "gramforge", "certify", "named:K4"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["upper"] == 4
