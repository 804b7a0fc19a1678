"""Low-rank psd completion and Gram dimension certificates.

Conventions: the apex of a suspension is the last node (label ``n`` for a
graph on ``0..n-1``); distance data live on the edges of the suspension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import config
from .errors import (
    InconsistentOverlapError,
    InfeasibleDataError,
    InvalidEDMDataError,
    NotPSDError,
    ParseError,
    RankStructureError,
    SearchBudgetExceeded,
)
from .graphs import (
    DEFAULT_MINOR_BUDGET,
    Graph,
    MinorModel,
    TreeDecomposition,
    complete_graph,
    contract_edge,
    k222,
    ktree_clique_tree,
    suspension,
    treewidth,
)
from .numerics import as_symmetric, eig_sym, gram, gram_factor, is_psd, numeric_rank, procrustes_align
from .partial import PartialMatrix, project_to_graph
from .sdp import psd_completion_feasible

__all__ = [
    "Certificate",
    "CompletionResult",
    "DistanceData",
    "K222Witness",
    "PartialMatrix",
    "apex_complete",
    "barvinok_bound",
    "certify",
    "clique_sum_complete",
    "contract_lift",
    "gram_to_edm_points",
    "k222_witness",
    "ktree_complete",
    "phi",
    "phi_inv",
    "project_to_graph",
    "verify_certificate",
    "verify_completion",
    "zero_extend",
]


# ---------------------------------------------------------------------------
# certificates


def barvinok_bound(G: Graph) -> int:
    """Largest ``r`` with ``r(r+1)/2 <= |V| + |E|``."""
    m = G.n + G.m
    return (math.isqrt(8 * m + 1) - 1) // 2


UPPER_RULES = ("edgeless", "forest", "no-K4", "no-K5-no-K222", "treewidth+1", "barvinok")


@dataclass
class Certificate:
    """Certified interval ``lower <= gd(G) <= upper``.

    ``lower_witness`` is a minor model of ``K_lower`` (or of ``K_{2,2,2}``
    when ``lower_minor == "K222"``). ``upper_witness`` names the binding
    rule; ``upper_data`` keeps its evidence and ``rules`` the value of every
    rule that applied. ``exhaustive`` is false when a minor search ran out
    of budget, in which case only the rules that did not need it are used.
    """

    lower: int
    upper: int
    lower_witness: MinorModel | None
    lower_minor: str
    upper_witness: str
    upper_data: dict
    rules: dict
    exhaustive: bool = True

    @property
    def tight(self) -> bool:
        return self.lower == self.upper

    def to_dict(self) -> dict:
        data = dict(self.upper_data)
        td = data.get("decomposition")
        if td is not None:
            data["decomposition"] = {
                "bags": [sorted(b) for b in td.bags],
                "tree_edges": [list(e) for e in td.tree_edges],
                "exact": td.exact,
            }
        return {
            "lower": self.lower,
            "upper": self.upper,
            "lower_witness": {
                "minor": self.lower_minor,
                "branch_sets": None if self.lower_witness is None else self.lower_witness.to_dict()["branch_sets"],
            },
            "upper_witness": {"rule": self.upper_witness, **data},
            "rules": dict(self.rules),
            "exhaustive": self.exhaustive,
        }


def _find_minor(G, H, budget):
    # returns (model or None, finished)
    from .graphs import has_minor

    try:
        return has_minor(G, H, budget=budget), True
    except SearchBudgetExceeded:
        return None, False


def certify(G: Graph, max_clique_minor: int = 8, budget: int | None = DEFAULT_MINOR_BUDGET) -> Certificate:
    """Bounds on the Gram dimension of ``G`` with re-checkable witnesses.

    Lower bound: the largest ``r <= max_clique_minor`` with a ``K_r`` minor,
    raised to 5 by a ``K_{2,2,2}`` minor. Upper bound: the smallest of the
    rules in ``UPPER_RULES`` that apply. Minor searches are exponential in
    the worst case; ``budget`` caps each one (see :func:`has_minor`).
    """
    if G.n == 0:
        raise ValueError("graph has no nodes")
    exhaustive = True
    lower, model, lower_minor = 1, MinorModel((frozenset([0]),)), "K1"
    no_kr = set()
    tw, td = treewidth(G)
    for r in range(2, min(max_clique_minor, G.n) + 1):
        if tw < r - 1 and td.exact:
            no_kr.add(r)
            break
        found, finished = _find_minor(G, complete_graph(r), budget)
        if found is None:
            if finished:
                no_kr.add(r)
            else:
                exhaustive = False
            break
        lower, model, lower_minor = r, found, f"K{r}"
    k222_found = None
    no_k222 = False
    if lower < 5 and G.n >= 6:
        k222_found, finished = _find_minor(G, k222(), budget)
        if k222_found is not None:
            lower, model, lower_minor = 5, k222_found, "K222"
        elif finished:
            no_k222 = True
        else:
            exhaustive = False
    elif G.n < 6:
        no_k222 = True

    rules, data = {}, {}
    if G.m == 0:
        rules["edgeless"] = 1
    if G.is_forest():
        rules["forest"] = 2
    # no K_r minor implies no K_s minor for every s >= r
    absent = min(no_kr, default=G.n + 1)
    if absent <= 4:
        rules["no-K4"] = 3
    if absent <= 5 and no_k222:
        rules["no-K5-no-K222"] = 4
    rules["treewidth+1"] = tw + 1
    data["treewidth+1"] = {"width": tw, "decomposition": td}
    rules["barvinok"] = barvinok_bound(G)
    data["barvinok"] = {"m": G.n + G.m}
    tag = min(UPPER_RULES, key=lambda t: (rules.get(t, math.inf), UPPER_RULES.index(t)))
    return Certificate(
        lower=lower,
        upper=rules[tag],
        lower_witness=model,
        lower_minor=lower_minor,
        upper_witness=tag,
        upper_data=data.get(tag, {}),
        rules=rules,
        exhaustive=exhaustive,
    )


def verify_certificate(G: Graph, cert: Certificate, recheck_minor_free: bool = True) -> list:
    """Independent re-check of a certificate; returns a list of problems."""
    from .graphs import has_minor

    problems = []
    if cert.lower > cert.upper:
        problems.append(f"lower {cert.lower} exceeds upper {cert.upper}")
    H = k222() if cert.lower_minor == "K222" else complete_graph(int(cert.lower_minor[1:]))
    if cert.lower_minor == "K222" and cert.lower != 5:
        problems.append("a K222 minor certifies exactly 5")
    if cert.lower_minor != "K222" and H.n != cert.lower:
        problems.append("lower bound does not match the witness minor")
    if cert.lower_witness is None:
        problems.append("missing lower witness")
    else:
        problems += [f"lower witness: {p}" for p in cert.lower_witness.problems(G, H)]
    tag = cert.upper_witness
    if cert.rules.get(tag) != cert.upper:
        problems.append(f"rule {tag} does not give {cert.upper}")
    if tag == "edgeless" and G.m:
        problems.append("graph has edges")
    elif tag == "forest" and not G.is_forest():
        problems.append("graph has a cycle")
    elif tag == "treewidth+1":
        td = cert.upper_data["decomposition"]
        problems += [f"decomposition: {p}" for p in td.problems(G)]
        if td.width + 1 != cert.upper:
            problems.append("decomposition width does not match")
    elif tag == "barvinok":
        m = G.n + G.m
        r = cert.upper
        if not (r * (r + 1) // 2 <= m < (r + 1) * (r + 2) // 2):
            problems.append("Barvinok bound miscomputed")
    elif tag in ("no-K4", "no-K5-no-K222") and recheck_minor_free:
        forbidden = [complete_graph(4)] if tag == "no-K4" else [complete_graph(5), k222()]
        for F in forbidden:
            if F.n <= G.n and has_minor(G, F, budget=None) is not None:
                problems.append(f"graph has a forbidden minor on {F.n} nodes")
    return problems


# ---------------------------------------------------------------------------
# completion results


@dataclass
class CompletionResult:
    X: np.ndarray
    rank: int
    method: str
    residual: float
    points: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def build(cls, X, a: PartialMatrix, method: str, points=None, tol_rank: float | None = None):
        X = as_symmetric(X, check=False)
        return cls(X, numeric_rank(X, tol_rank), method, entry_residual(X, a), points)

    def to_dict(self) -> dict:
        return {"rank": self.rank, "residual": self.residual, "method": self.method, "X": self.X.tolist()}


def entry_residual(X, a: PartialMatrix) -> float:
    X = np.asarray(X)
    return float(max((abs(X[i, j] - v) for (i, j), v in a.values.items()), default=0.0))


def verify_completion(a: PartialMatrix, result, tol_feas: float | None = None, tol_rank: float | None = None) -> list:
    """Check entry match, psd-ness and the reported rank; returns problems."""
    cfg = config.DEFAULT
    tol_feas = cfg.tol_feas if tol_feas is None else tol_feas
    X = result.X if isinstance(result, CompletionResult) else np.asarray(result, dtype=float)
    problems = []
    if X.shape != (a.n, a.n):
        return [f"shape {X.shape} does not match {a.n} nodes"]
    if not np.allclose(X, X.T, atol=1e-12 * (1 + np.abs(X).max(initial=0))):
        problems.append("matrix is not symmetric")
    res = entry_residual(X, a)
    if res > tol_feas:
        problems.append(f"entry residual {res:.3e} exceeds {tol_feas:.1e}")
    if not is_psd(X, tol_rank):
        problems.append(f"not psd (lambda_min = {eig_sym(X)[0][-1]:.3e})")
    if isinstance(result, CompletionResult):
        r = numeric_rank(X, tol_rank)
        if r != result.rank:
            problems.append(f"reported rank {result.rank}, numeric rank {r}")
        if abs(result.residual - res) > 1e-12 * (1 + res):
            problems.append("reported residual is stale")
    return problems


def _as_matrix(out):
    return out.X if isinstance(out, CompletionResult) else as_symmetric(out, check=False)


# ---------------------------------------------------------------------------
# constructive completions


def ktree_complete(G: Graph, a: PartialMatrix, k: int, X0=None, tol_rank: float | None = None) -> CompletionResult:
    """A completion of rank at most ``k + 1`` for ``G`` of treewidth ``<= k``.

    Start from any psd completion ``X0`` (an interior one is computed when
    absent), factor every bag block of a k-tree containing ``G`` into
    ``R^{k+1}`` and glue the pieces along the clique tree by orthogonal
    alignment on the shared k-cliques.
    """
    cfg = config.DEFAULT
    tol_rank = cfg.tol_rank if tol_rank is None else tol_rank
    if a.graph != G:
        raise ValueError("partial matrix lives on a different graph")
    ct = ktree_clique_tree(G, k)
    if X0 is None:
        X0 = psd_completion_feasible(G, a)
    X0 = as_symmetric(X0).copy()
    if X0.shape != (G.n, G.n):
        raise ValueError("X0 has the wrong shape")
    scale = 1 + np.abs(X0).max(initial=0)
    drift = entry_residual(X0, a)
    if drift > 10 * cfg.tol_feas * scale:
        raise ValueError(f"X0 does not match the data (residual {drift:.3e})")
    # snap the specified entries when every bag block stays psd; otherwise
    # keep X0 as is so that blocks still agree on their overlaps
    X1 = X0.copy()
    for (i, j), v in a.values.items():
        X1[i, j] = X1[j, i] = v
    if all(is_psd(X1[np.ix_(sorted(b), sorted(b))], tol_rank) for b in ct.bags):
        X0 = X1
    dim = k + 1
    P = np.zeros((G.n, dim))
    placed = np.zeros(G.n, dtype=bool)
    for idx, bag in enumerate(ct.bags):
        nodes = sorted(bag)
        Q = gram_factor(X0[np.ix_(nodes, nodes)], tol_rel=tol_rank, dim=max(dim, len(nodes)))
        Q = Q[:, :dim] if Q.shape[1] > dim else Q
        if idx == 0:
            P[nodes] = Q
            placed[nodes] = True
            continue
        shared = [t for t, v in enumerate(nodes) if placed[v]]
        U = procrustes_align(Q[shared], P[[nodes[t] for t in shared]], range(len(shared)), tol=1e-6)
        for t, v in enumerate(nodes):
            if not placed[v]:
                P[v] = U @ Q[t]
                placed[v] = True
    return CompletionResult.build(gram(P), a, "ktree", points=P, tol_rank=tol_rank)


def _shared_pairs(shared):
    pairs = []
    for s in shared:
        if isinstance(s, (tuple, list)):
            pairs.append((int(s[0]), int(s[1])))
        else:
            pairs.append((int(s), int(s)))
    return pairs


def clique_sum_graph(G1: Graph, G2: Graph, shared) -> tuple:
    """Union graph of a clique sum and the map from ``G2``-labels to it.

    ``shared`` lists nodes as ``(node in G1, node in G2)`` pairs (a bare
    integer means the same label in both). ``G1`` keeps its labels; the
    remaining ``G2`` nodes follow in increasing order.
    """
    pairs = _shared_pairs(shared)
    to_union = {j: i for i, j in pairs}
    nxt = G1.n
    for v in range(G2.n):
        if v not in to_union:
            to_union[v] = nxt
            nxt += 1
    edges = set(G1.edges) | {(to_union[u], to_union[v]) for u, v in G2.edges}
    return Graph(nxt, edges), to_union


def clique_sum_complete(G1, a1, G2, a2, shared, k: int, X1=None, X2=None, completer=None, tol_feas=None):
    """Glue completions of the two parts of a clique sum.

    Part completions come from ``X1``/``X2`` when given, otherwise from
    ``completer(G, a)`` (default: :func:`ktree_complete` at the part's
    treewidth). Returns ``(CompletionResult, union_graph, union_partial)``.
    """
    cfg = config.DEFAULT
    tol_feas = cfg.tol_feas if tol_feas is None else tol_feas
    pairs = _shared_pairs(shared)
    s1 = [i for i, _ in pairs]
    s2 = [j for _, j in pairs]
    if not G1.is_clique(s1) or not G2.is_clique(s2):
        raise ValueError("shared nodes must form a clique in both graphs")
    for (i, j), (p, q) in zip(((x, y) for x in s1 for y in s1), ((x, y) for x in s2 for y in s2)):
        if abs(a1[i, j] - a2[p, q]) > tol_feas * (1 + abs(a1[i, j])):
            raise InconsistentOverlapError(f"data disagree on shared entry ({i}, {j}): {a1[i, j]} vs {a2[p, q]}")
    if completer is None:
        def completer(G, a):
            return ktree_complete(G, a, max(treewidth(G)[0], 0))
    M1 = as_symmetric(X1) if X1 is not None else _as_matrix(completer(G1, a1))
    M2 = as_symmetric(X2) if X2 is not None else _as_matrix(completer(G2, a2))
    r1, r2 = numeric_rank(M1), numeric_rank(M2)
    if max(r1, r2) > k:
        raise RankStructureError(f"part ranks {r1}, {r2} exceed k = {k}", {"ranks": [r1, r2]})
    P1 = gram_factor(M1, dim=k)
    P2 = gram_factor(M2, dim=k)
    U = procrustes_align(P2[s2], P1[s1], range(len(pairs)), tol=1e-6)
    G, to_union = clique_sum_graph(G1, G2, pairs)
    P = np.zeros((G.n, k))
    P[: G1.n] = P1
    for v in range(G2.n):
        if v not in s2:
            P[to_union[v]] = U @ P2[v]
    vals = dict(a1.values)
    for (i, j), v in a2.values.items():
        key = tuple(sorted((to_union[i], to_union[j])))
        vals.setdefault(key, v)
    a = PartialMatrix(G, vals)
    return CompletionResult.build(gram(P), a, "clique-sum", points=P), G, a


def _contraction_map(n, e):
    u, v = sorted(e)
    last = n - 1

    def f(w):
        if w == v:
            return u
        if w == last and v != last:
            return v
        return w

    return f


def lift_contracted(G: Graph, e, a_contracted: PartialMatrix) -> PartialMatrix:
    """Data on ``G`` whose contracted node is duplicated onto both ends of ``e``."""
    u, v = sorted(e)
    if not G.has_edge(u, v):
        raise ValueError(f"({u}, {v}) is not an edge")
    if a_contracted.graph != contract_edge(G, (u, v)):
        raise ValueError("partial matrix does not live on the contracted graph")
    f = _contraction_map(G.n, (u, v))
    vals = {(w, w): a_contracted[f(w), f(w)] for w in range(G.n)}
    for i, j in G.edges:
        vals[(i, j)] = a_contracted[u, u] if (i, j) == (u, v) else a_contracted[f(i), f(j)]
    return PartialMatrix(G, vals)


def contract_lift(G: Graph, e, a_contracted: PartialMatrix, completer) -> CompletionResult:
    """Complete data on ``G/e`` by completing its duplicated-row lift on ``G``.

    ``completer(G, a)`` returns a matrix or a :class:`CompletionResult`. The
    result is the principal submatrix on the surviving nodes, relabelled as
    in :func:`contract_edge`.
    """
    u, v = sorted(e)
    lifted = lift_contracted(G, (u, v), a_contracted)
    X = _as_matrix(completer(G, lifted))
    f = _contraction_map(G.n, (u, v))
    keep = [w for w in range(G.n) if w != v]
    idx = [f(w) for w in keep]
    Xc = np.zeros((G.n - 1, G.n - 1))
    Xc[np.ix_(idx, idx)] = X[np.ix_(keep, keep)]
    return CompletionResult.build(Xc, a_contracted, "contract-lift")


def _split_suspension(y: PartialMatrix):
    H = y.graph
    n = H.n - 1
    if n < 0 or any(not H.has_edge(i, n) for i in range(n)):
        raise ValueError("graph is not a suspension with the apex as last node")
    G = H.induced(range(n))
    return G, n


def apex_complete(y: PartialMatrix, inner_completer, k: int, tol: float | None = None) -> CompletionResult:
    """Completion of rank ``<= k + 1`` on a suspension from a rank-``k`` completer for ``G``.

    The Schur complement of the apex entry turns the data on ``G``'s part
    into ``Y = A - a a^T / alpha``; a completion ``Z`` of ``Y`` lifts back
    to ``[[Z + a a^T / alpha, a], [a^T, alpha]]`` whose rank is
    ``rank(Z) + 1``.
    """
    tol = config.DEFAULT.tol_rank if tol is None else tol
    G, apex = _split_suspension(y)
    alpha = y[apex, apex]
    a = np.array([y[i, apex] for i in range(apex)])
    if alpha < -tol:
        raise NotPSDError(f"apex diagonal {alpha:.3e} is negative", {"alpha": alpha})
    n = apex
    if alpha <= tol:
        if np.max(np.abs(a), initial=0.0) > math.sqrt(tol):
            raise InfeasibleDataError("zero apex diagonal with a nonzero border has no psd completion")
        inner = PartialMatrix(G, {key: y[key] for key in list(((i, i) for i in range(n))) + list(G.edges)})
        Z = _as_matrix(inner_completer(G, inner))
        X = np.zeros((n + 1, n + 1))
        X[:n, :n] = Z
        return CompletionResult.build(X, y, "apex")
    vals = {(i, i): y[i, i] - a[i] * a[i] / alpha for i in range(n)}
    vals.update({(i, j): y[i, j] - a[i] * a[j] / alpha for i, j in G.edges})
    Z = _as_matrix(inner_completer(G, PartialMatrix(G, vals)))
    rz = numeric_rank(Z)
    if rz > k:
        raise RankStructureError(f"inner completion has rank {rz} > k = {k}", {"rank": rz})
    X = np.empty((n + 1, n + 1))
    X[:n, :n] = Z + np.outer(a, a) / alpha
    X[:n, n] = X[n, :n] = a
    X[n, n] = alpha
    return CompletionResult.build(X, y, "apex")


def zero_extend(G: Graph, x: PartialMatrix) -> PartialMatrix:
    """The data ``(x, 0)`` on the suspension: apex diagonal 1, apex edges 0."""
    if x.graph != G:
        raise ValueError("partial matrix lives on a different graph")
    vals = dict(x.values)
    vals[(G.n, G.n)] = 1.0
    vals.update({(i, G.n): 0.0 for i in range(G.n)})
    return PartialMatrix(suspension(G), vals)


# ---------------------------------------------------------------------------
# Gram <-> distance data


class DistanceData:
    """Squared distances on the edges of a graph (no diagonal)."""

    def __init__(self, graph: Graph, values):
        vals = {}
        for (i, j), v in dict(values).items():
            i, j = int(i), int(j)
            vals[(min(i, j), max(i, j))] = float(v)
        if set(vals) != set(graph.edges):
            raise ValueError("distances must be given on exactly the edges of the graph")
        if not all(math.isfinite(v) for v in vals.values()):
            raise ValueError("distances must be finite")
        self.graph = graph
        self.values = vals

    @property
    def n(self) -> int:
        return self.graph.n

    def __getitem__(self, ij) -> float:
        i, j = ij
        return self.values[(min(i, j), max(i, j))]

    def __eq__(self, other):
        return isinstance(other, DistanceData) and self.graph == other.graph and self.values == other.values

    def __repr__(self):
        return f"DistanceData(n={self.n}, m={self.graph.m})"

    def items(self) -> list:
        return sorted(self.values.items())

    def to_dict(self) -> dict:
        return {"graph": self.graph.to_dict(), "distances": [{"i": i, "j": j, "d": v} for (i, j), v in self.items()]}

    @classmethod
    def from_dict(cls, data) -> "DistanceData":
        try:
            g = Graph.from_dict(data["graph"])
            vals = {}
            for e in data["distances"]:
                key = tuple(sorted((int(e["i"]), int(e["j"]))))
                if key in vals:
                    raise ValueError(f"duplicate entry {key}")
                vals[key] = float(e["d"])
            return cls(g, vals)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid distance JSON: {exc}") from exc


def phi(x: PartialMatrix) -> DistanceData:
    """``d(apex, i) = x_ii`` and ``d(i, j) = x_ii + x_jj - 2 x_ij`` on the suspension."""
    G = x.graph
    apex = G.n
    vals = {(i, apex): x[i, i] for i in range(G.n)}
    vals.update({(i, j): x[i, i] + x[j, j] - 2 * x[i, j] for i, j in G.edges})
    return DistanceData(suspension(G), vals)


def phi_inv(d: DistanceData) -> PartialMatrix:
    """Inverse of :func:`phi`; rejects negative squared distances."""
    neg = [(k, v) for k, v in d.values.items() if v < 0]
    if neg:
        raise InvalidEDMDataError(f"negative squared distance at {neg[0][0]}: {neg[0][1]}")
    H = d.graph
    apex = H.n - 1
    if apex < 0 or any(not H.has_edge(i, apex) for i in range(apex)):
        raise InvalidEDMDataError("distances must live on a suspension with the apex as last node")
    G = H.induced(range(apex))
    vals = {(i, i): d[i, apex] for i in range(apex)}
    vals.update({(i, j): (d[i, apex] + d[j, apex] - d[i, j]) / 2 for i, j in G.edges})
    return PartialMatrix(G, vals)


def gram_to_edm_points(P) -> np.ndarray:
    """Append the origin (the apex) to a Gram configuration.

    Squared distances between the rows of the result reproduce
    ``phi(Gram(P))`` on every pair, in the same ambient dimension.
    """
    P = np.asarray(P, dtype=float)
    return np.vstack([P, np.zeros((1, P.shape[1]))])


def squared_distances(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    g = np.sum(P * P, axis=1)
    return np.maximum(g[:, None] + g[None, :] - 2 * P @ P.T, 0.0)


# ---------------------------------------------------------------------------
# the K_{2,2,2} witness


class K222Witness(NamedTuple):
    graph: Graph
    partial: PartialMatrix
    gram: np.ndarray
    forced_entries: dict
    block: tuple
    kernel: np.ndarray
    derivation: str


def k222_vectors() -> np.ndarray:
    """``e1, ..., e5`` and ``(e1 + e2)/sqrt(2)`` as rows."""
    P = np.zeros((6, 5))
    P[:5] = np.eye(5)
    P[5, :2] = 1 / math.sqrt(2)
    return P


def k222_witness() -> K222Witness:
    """Data on ``K_{2,2,2}`` whose only psd completion has rank 5.

    Nodes are 0-based, the deleted matching is ``(0,3), (1,4), (2,5)``.
    The fully specified block on ``{0, 1, 5}`` is singular; its kernel
    vector ``v`` gives the column relation ``X v = 0`` for every psd
    completion, and each unspecified entry is solved from that relation
    using specified entries only.
    """
    G = k222()
    X = gram(k222_vectors())
    x = project_to_graph(X, G)
    block = (0, 1, 5)
    B = x.block(block)
    w, V = np.linalg.eigh(B)
    if abs(w[0]) > 1e-12:
        raise RankStructureError("witness block is not singular")
    v = V[:, 0]
    v = v / v[2]  # scale so the node-5 coefficient is 1
    c = dict(zip(block, v))
    # row r of X v = 0:  sum_b c_b X[r, b] = 0, one unknown per row
    forced = {}
    for r, s in ((3, 0), (4, 1), (2, 5)):
        known = sum(c[b] * x[r, b] for b in block if b != s)
        forced[(min(r, s), max(r, s))] = float(-known / c[s]) + 0.0  # no negative zero
    derivation = (
        "block {0,1,5} is singular with kernel (-1/sqrt2, -1/sqrt2, 1); every psd completion "
        "satisfies C5 = (C0 + C1)/sqrt2 on its columns, which fixes X[0,3], X[1,4], X[2,5]"
    )
    return K222Witness(G, x, X, forced, block, v, derivation)
