"""Command-line front end.

Every subcommand reads JSON, calls one library routine, re-checks the
result with an independent verifier and writes JSON. Floats are written
with Python's shortest round-trip repr, so identical inputs give
byte-identical output.

Exit codes: 0 success (problems that are not fatal appear under
``"flags"``), 2 bad input, 3 infeasible data, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import completion, oracle, sdp
from .config import RunConfig
from .errors import GramforgeError, InfeasibleError, NumericalError, ParseError
from .graphs import Graph, named_graph
from .numerics import eig_sym, is_psd, numeric_rank
from .partial import PartialMatrix

log = logging.getLogger("gramforge")

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# I/O


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(payload) -> str:
    return json.dumps(payload, indent=2, default=_jsonable) + "\n"


def read_json(path):
    try:
        if str(path) == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc


def load_graph(spec: str) -> Graph:
    """A graph file, or ``named:<name>`` for a built-in graph."""
    if spec.startswith("named:"):
        return named_graph(spec[len("named:"):])
    return Graph.from_dict(read_json(spec))


def load_partial(path, G: Graph | None = None) -> PartialMatrix:
    return PartialMatrix.from_dict(read_json(path), graph=G)


def matrix_to_dict(X) -> dict:
    X = np.asarray(X, dtype=float)
    return {"n": X.shape[0], "rows": X.tolist()}


def matrix_from_dict(data) -> np.ndarray:
    """Matrix JSON, or any object carrying ``X`` (solutions, completions)."""
    try:
        rows = data["rows"] if "rows" in data else data["X"]
        X = np.array(rows, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1] or ("n" in data and X.shape[0] != int(data["n"])):
            raise ValueError(f"bad matrix shape {X.shape}")
        return X
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid matrix JSON: {exc}") from exc


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("gramforge") / "fixtures" / name))


def load_fixture(name: str):
    with open(fixture_path(name), encoding="utf-8") as fh:
        return json.load(fh)


def _write(payload, out):
    text = dumps(payload)
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _fail_unless(problems, what):
    if problems:
        raise NumericalError(f"{what} failed re-verification: " + "; ".join(problems))


# ---------------------------------------------------------------------------
# subcommands


def _certify_one(spec, budget, recheck):
    G = load_graph(spec)
    cert = completion.certify(G, budget=budget)
    _fail_unless(completion.verify_certificate(G, cert, recheck_minor_free=recheck), "certificate")
    out = cert.to_dict()
    out["trace"] = _rule_trace(cert)
    out["input"] = spec
    return out


def _rule_trace(cert) -> list:
    lines = [f"lower {cert.lower}: {cert.lower_minor} minor"]
    for rule in completion.UPPER_RULES:
        if rule in cert.rules:
            mark = " (binding)" if rule == cert.upper_witness else ""
            lines.append(f"upper <= {cert.rules[rule]} by {rule}{mark}")
    if not cert.exhaustive:
        lines.append("a minor search hit its budget; bounds use only the finished searches")
    return lines


def cmd_certify(args, cfg):
    if args.jobs > 1 and len(args.graphs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_certify_one, args.graphs, [args.budget] * len(args.graphs),
                                    [args.recheck] * len(args.graphs)))
    else:
        results = [_certify_one(g, args.budget, args.recheck) for g in args.graphs]
    return results[0] if len(results) == 1 else results


def cmd_complete(args, cfg):
    G = load_graph(args.graph)
    a = load_partial(args.partial, G)
    X0 = sdp.psd_completion_feasible(G, a, tol_feas=cfg.tol_feas, tol_gap=cfg.tol_gap, max_iters=cfg.max_iters)
    res = completion.ktree_complete(G, a, args.k, X0=X0, tol_rank=cfg.tol_rank)
    _fail_unless(completion.verify_completion(a, res, tol_feas=cfg.tol_feas, tol_rank=cfg.tol_rank), "completion")
    out = res.to_dict()
    out["flags"] = [] if res.rank <= args.k + 1 else [f"rank {res.rank} exceeds k+1"]
    return out


def cmd_stretch(args, cfg):
    G = load_graph(args.graph)
    a = load_partial(args.partial, G)
    pair = tuple(args.pair) if args.pair else sdp.suggest_stretch_pair(G)
    if pair is None:
        raise ParseError("graph is complete; there is no non-edge to stretch")
    sol, cert, P = sdp.stretch(G, a, pair, regularize_eps=cfg.regularize_eps, tol_gap=cfg.tol_gap,
                               tol_feas=cfg.tol_feas, max_iters=cfg.max_iters)
    a_used = a if not sol.regularization else a.map_values(
        lambda k, v: v + sol.regularization if k[0] == k[1] else v)
    _fail_unless(completion.verify_completion(a_used, sol.X, tol_feas=cfg.tol_feas * 10,
                                              tol_rank=cfg.tol_rank), "stretch optimum")
    eq = sdp.equilibrium_residual(P, cert, G)
    flags = []
    if not is_psd(cert.omega, cfg.tol_rank):
        flags.append(f"stress matrix has eigenvalue {eig_sym(cert.omega)[0][-1]:.3e}")
    if cert.complementarity > cfg.tol_comp:
        flags.append(f"complementarity {cert.complementarity:.3e} above {cfg.tol_comp:.1e}")
    if sol.regularization:
        flags.append(f"diagonal regularized by {sol.regularization:g}")
    return {
        "pair": list(cert.e0),
        "optimum": float(sol.X[cert.e0]),
        "solution": sol.to_dict(),
        "certificate": cert.to_dict(),
        "equilibrium_residual": eq,
        "configuration": {"k": P.shape[1], "points": P.tolist()},
        "flags": flags,
    }


def cmd_solve(args, cfg):
    p = sdp.SdpProblem.from_dict(read_json(args.problem))
    sol = sdp.sdp_solve(p, tol_gap=cfg.tol_gap, tol_feas=cfg.tol_feas, max_iters=cfg.max_iters)
    if sol.status in ("primal_infeasible", "dual_infeasible"):
        raise InfeasibleError(f"solver reports {sol.status}")
    if not sol.ok:
        raise NumericalError(f"solver ended with status {sol.status}")
    return sol.to_dict()


def cmd_reduce(args, cfg):
    p = sdp.SdpProblem.from_dict(read_json(args.problem))
    X = matrix_from_dict(read_json(args.solution))
    try:
        red = sdp.rank_reduce(p, X, preserve_objective=args.preserve_objective, tol_rank=cfg.tol_rank,
                              tol_feas=cfg.tol_feas)
    except ValueError as exc:
        raise InfeasibleError(str(exc)) from exc
    drift = float(np.max(np.abs(p.constraint_values(red.X) - p.b)))
    problems = [] if is_psd(red.X, cfg.tol_rank) else ["reduced matrix is not psd"]
    if drift > cfg.tol_feas * (1 + np.max(np.abs(p.b))):
        problems.append(f"constraint drift {drift:.3e}")
    _fail_unless(problems, "reduced solution")
    out = red.to_dict()
    out["drift"] = drift
    out["objective"] = p.objective(red.X)
    out["flags"] = ["rank reduction stalled"] if red.stalled else []
    return out


def cmd_convert(args, cfg):
    data = read_json(args.input)
    if args.gram_to_edm:
        x = PartialMatrix.from_dict(data)
        d = completion.phi(x)
        _fail_unless([] if _close(completion.phi_inv(d), x) else ["round trip"], "conversion")
        return d.to_dict()
    d = completion.DistanceData.from_dict(data)
    x = completion.phi_inv(d)
    back = completion.phi(x)
    _fail_unless([] if max(abs(back[k] - v) for k, v in d.items()) <= 1e-12 * (1 + max(abs(v) for _, v in d.items()))
                 else ["round trip"], "conversion")
    return x.to_dict()


def _close(x, y, tol=1e-12):
    scale = 1 + max(abs(v) for v in y.values.values())
    return x.graph == y.graph and all(abs(x.values[k] - v) <= tol * scale for k, v in y.values.items())


def cmd_witness(args, cfg):
    if args.name.lower() not in ("k222", "k_{2,2,2}"):
        raise ParseError(f"unknown witness {args.name!r}; only k222 is available")
    w = completion.k222_witness()
    forced = {f"{i},{j}": v for (i, j), v in sorted(w.forced_entries.items())}
    B = w.partial.block(w.block)
    X = sdp.psd_completion_feasible(w.graph, w.partial, tol_feas=cfg.tol_feas, tol_gap=cfg.tol_gap,
                                    max_iters=cfg.max_iters)
    checks = {
        "block_singular": float(eig_sym(B)[0][-1]),
        "kernel_residual": float(np.linalg.norm(B @ w.kernel)),
        "gram_matches_partial": completion.entry_residual(w.gram, w.partial),
        "gram_rank": numeric_rank(w.gram, cfg.tol_rank),
        "forced_match_gram": max(abs(w.gram[k] - v) for k, v in w.forced_entries.items()),
        "feasible_completion_forced_error": max(abs(X[k] - v) for k, v in w.forced_entries.items()),
    }
    ok = (checks["kernel_residual"] < 1e-12 and checks["gram_rank"] == 5
          and checks["forced_match_gram"] < 1e-12 and checks["feasible_completion_forced_error"] < 1e-6)
    if args.oracle:
        fits = {k: oracle.lowrank_fit(w.graph, w.partial, k, restarts=args.restarts, seed=cfg.seed,
                                      warm_start=False) for k in (4, 5)}
        checks["fit_k4_residual"] = fits[4].residual
        checks["fit_k5_residual"] = fits[5].residual
        ok = ok and not fits[4].converged and fits[4].residual > 1e-3 and fits[5].converged
    _fail_unless([] if ok else ["witness checks"], "K222 witness")
    bundle = {
        "graph": w.graph.to_dict(),
        "partial": w.partial.to_dict(),
        "gram": matrix_to_dict(w.gram),
        "forced_entries": forced,
        "block": list(w.block),
        "kernel": w.kernel.tolist(),
        "derivation": w.derivation,
        "checks": checks,
    }
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for key, name in (("graph", "graph.json"), ("partial", "partial.json"), ("gram", "gram.json"),
                          ("forced_entries", "forced.json")):
            (out / name).write_text(dumps(bundle[key]), encoding="utf-8")
        (out / "bundle.json").write_text(dumps(bundle), encoding="utf-8")
    return bundle


def cmd_oracle(args, cfg):
    G = load_graph(args.graph)
    data = read_json(args.partial)
    if "distances" in data:
        d = completion.DistanceData.from_dict(data)
        if d.graph != G:
            raise ParseError("distance data live on a different graph")
        fit = oracle.edm_fit(G, d, args.k, restarts=args.restarts, seed=cfg.seed)
        check = oracle.edm_residual(fit.points, d)
    else:
        a = PartialMatrix.from_dict(data, graph=G)
        fit = oracle.lowrank_fit(G, a, args.k, restarts=args.restarts, seed=cfg.seed)
        check = oracle.fit_residual(fit.points, a)
    _fail_unless([] if abs(check - fit.residual) <= 1e-12 * (1 + check) else ["residual mismatch"], "fit")
    return fit.to_dict()


def cmd_maxcut(args, cfg):
    G = load_graph(args.graph)
    p = sdp.maxcut_relaxation(G)
    sol = sdp.sdp_solve(p, tol_gap=cfg.tol_gap, tol_feas=cfg.tol_feas, max_iters=cfg.max_iters)
    if not sol.ok:
        raise NumericalError(f"max-cut solve ended with status {sol.status}")
    red = sdp.rank_reduce(p, sol.X, preserve_objective=True, tol_rank=cfg.tol_rank, tol_feas=cfg.tol_feas)
    problems = [] if is_psd(red.X, cfg.tol_rank) else ["reduced matrix is not psd"]
    if np.max(np.abs(np.diag(red.X) - 1)) > cfg.tol_feas:
        problems.append("unit diagonal lost")
    _fail_unless(problems, "max-cut solution")
    return {
        "value": sol.primal_value,
        "dual_value": sol.dual_value,
        "gap": sol.gap,
        "reduced_value": p.objective(red.X),
        "reduced_rank": red.rank,
        "X": red.X.tolist(),
        "flags": ["rank reduction stalled"] if red.stalled else [],
    }


# ---------------------------------------------------------------------------
# argument parsing


def _tolerance_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("tolerances (override GRAMFORGE_* environment variables)")
    g.add_argument("--tol-gap", type=float)
    g.add_argument("--tol-feas", type=float)
    g.add_argument("--tol-rank", type=float)
    g.add_argument("--tol-comp", type=float)
    g.add_argument("--max-iters", type=int)
    g.add_argument("--regularize-eps", type=float)
    g.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", help="write JSON here instead of stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _tolerance_flags()
    parser = argparse.ArgumentParser(prog="gramforge", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("certify", parents=[common], help="bounds on the Gram dimension")
    s.add_argument("graphs", nargs="+", metavar="GRAPH")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--budget", type=int, default=completion.DEFAULT_MINOR_BUDGET)
    s.add_argument("--recheck", action="store_true", help="re-run minor-freeness searches when verifying")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("complete", parents=[common], help="rank <= k+1 completion on a partial k-tree")
    s.add_argument("graph")
    s.add_argument("partial")
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(func=cmd_complete)

    s = sub.add_parser("stretch", parents=[common], help="stretch a non-edge and extract the stress")
    s.add_argument("graph")
    s.add_argument("partial")
    s.add_argument("--pair", type=int, nargs=2, metavar=("I", "J"))
    s.set_defaults(func=cmd_stretch)

    s = sub.add_parser("solve", parents=[common], help="solve an SDP problem file")
    s.add_argument("problem")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("reduce", parents=[common], help="rank reduction of a feasible solution")
    s.add_argument("problem")
    s.add_argument("solution")
    s.add_argument("--preserve-objective", action="store_true")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("convert", parents=[common], help="Gram data <-> distance data on the suspension")
    s.add_argument("input")
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--gram-to-edm", action="store_true")
    mode.add_argument("--edm-to-gram", action="store_true")
    s.set_defaults(func=cmd_convert)

    s = sub.add_parser("witness", parents=[common], help="the K_{2,2,2} rank-5 witness bundle")
    s.add_argument("name", help="k222")
    s.add_argument("--out-dir")
    s.add_argument("--oracle", action="store_true", help="also run low-rank fits at k = 4 and 5")
    s.add_argument("--restarts", type=int, default=100)
    s.set_defaults(func=cmd_witness)

    s = sub.add_parser("oracle", parents=[common], help="local-search fit in dimension k")
    s.add_argument("graph")
    s.add_argument("partial", help="partial matrix or distance data")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--restarts", type=int, default=20)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("maxcut", parents=[common], help="max-cut relaxation and a reduced-rank optimum")
    s.add_argument("graph")
    s.set_defaults(func=cmd_maxcut)
    return parser


def _config(args) -> RunConfig:
    keys = ("tol_rank", "tol_feas", "tol_gap", "tol_comp", "seed", "max_iters", "regularize_eps")
    return RunConfig.from_env(**{k: getattr(args, k, None) for k in keys})


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        payload = args.func(args, cfg)
        _write(payload, args.output)
        return EXIT_OK
    except InfeasibleError as exc:
        log.error("infeasible: %s", exc)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except (ParseError, ValueError) as exc:
        log.error("bad input: %s", exc)
        return EXIT_PARSE
    except GramforgeError as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
