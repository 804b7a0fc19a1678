"""Graphs, minor operations, tree decompositions and the named graphs.

Nodes are always the integers ``0..n-1``. Edges are stored as ``(i, j)``
tuples with ``i < j``. All graph values are immutable.
"""
from __future__ import annotations

import itertools
import math
import random
import re
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx

from .errors import InfeasibleWidthError, InvalidEdgeError, ParseError, SearchBudgetExceeded

EXACT_TREEWIDTH_MAX_NODES = 20
DEFAULT_MINOR_BUDGET = 2_000_000


def _norm(i, j):
    return (i, j) if i < j else (j, i)


class Graph:
    """Undirected simple graph on the nodes ``0..n-1``."""

    __slots__ = ("n", "edges", "__dict__")

    def __init__(self, n: int, edges=()):
        n = int(n)
        if n < 0:
            raise ValueError("node count must be non-negative")
        normalized = set()
        for e in edges:
            i, j = (int(x) for x in e)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) has an endpoint outside 0..{n - 1}")
            normalized.add(_norm(i, j))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(normalized))

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple:
        adj = [set() for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return tuple(frozenset(a) for a in adj)

    def neighbors(self, v: int) -> frozenset:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, i: int, j: int) -> bool:
        return i != j and _norm(i, j) in self.edges

    def sorted_edges(self) -> list:
        return sorted(self.edges)

    def non_edges(self) -> list:
        return [(i, j) for i, j in itertools.combinations(range(self.n), 2) if (i, j) not in self.edges]

    def complement(self) -> "Graph":
        return Graph(self.n, self.non_edges())

    def induced(self, nodes) -> "Graph":
        """Induced subgraph, relabeled in increasing order of ``nodes``."""
        nodes = sorted(nodes)
        index = {v: k for k, v in enumerate(nodes)}
        return Graph(len(nodes), [(index[i], index[j]) for i, j in self.edges if i in index and j in index])

    def components(self) -> list:
        seen, comps = set(), []
        for s in range(self.n):
            if s in seen:
                continue
            comp, stack = {s}, [s]
            while stack:
                v = stack.pop()
                for w in self.adjacency[v]:
                    if w not in comp:
                        comp.add(w)
                        stack.append(w)
            seen |= comp
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return self.n <= 1 or len(self.components()) == 1

    def is_forest(self) -> bool:
        return self.m == self.n - len(self.components())

    def is_clique(self, nodes) -> bool:
        return all(self.has_edge(i, j) for i, j in itertools.combinations(nodes, 2))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "Graph":
        index = {v: k for k, v in enumerate(sorted(g.nodes))}
        return cls(len(index), [(index[u], index[v]) for u, v in g.edges if u != v])

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_dict(cls, data) -> "Graph":
        try:
            return cls(data["n"], [tuple(e) for e in data["edges"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid graph JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# minor operations


def delete_edge(G: Graph, e) -> Graph:
    e = _norm(*e)
    if e not in G.edges:
        raise InvalidEdgeError(f"{e} is not an edge")
    return Graph(G.n, G.edges - {e})


def contract_edge(G: Graph, e) -> Graph:
    """Contract ``e = (u, v)``.

    The smaller endpoint ``u`` survives; node ``n-1`` is then relabeled
    into the hole left by ``v`` so the labels stay ``0..n-2``.
    """
    u, v = _norm(*e)
    if (u, v) not in G.edges:
        raise InvalidEdgeError(f"{(u, v)} is not an edge")
    last = G.n - 1

    def relabel(x):
        if x == v:
            x = u
        return v if x == last else x

    edges = set()
    for i, j in G.edges:
        a, b = relabel(i), relabel(j)
        if a != b:
            edges.add(_norm(a, b))
    return Graph(G.n - 1, edges)


def delete_node(G: Graph, v: int) -> Graph:
    """Delete node ``v``; node ``n-1`` takes its label."""
    last = G.n - 1

    def relabel(x):
        return v if x == last else x

    return Graph(G.n - 1, [(relabel(i), relabel(j)) for i, j in G.edges if v not in (i, j)])


def suspension(G: Graph) -> Graph:
    """Add apex node ``n`` adjacent to every node of ``G``."""
    return Graph(G.n + 1, list(G.edges) + [(i, G.n) for i in range(G.n)])


def apex_iterate(G: Graph, k: int) -> Graph:
    if k < 0:
        raise ValueError("k must be non-negative")
    for _ in range(k):
        G = suspension(G)
    return G


# ---------------------------------------------------------------------------
# named graphs


def complete_graph(n: int) -> Graph:
    return Graph(n, itertools.combinations(range(n), 2))


def complete_bipartite(n: int, m: int) -> Graph:
    """Sides ``0..n-1`` and ``n..n+m-1``."""
    return Graph(n + m, [(i, n + j) for i in range(n) for j in range(m)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 nodes")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def k222() -> Graph:
    """Octahedron: K6 minus the matching (0,3), (1,4), (2,5)."""
    return Graph(6, [e for e in itertools.combinations(range(6), 2) if e not in {(0, 3), (1, 4), (2, 5)}])


def wagner_v8() -> Graph:
    """8-cycle ``0..7`` plus the long diagonals ``(i, i+4)``."""
    return Graph(8, [(i, (i + 1) % 8) for i in range(8)] + [(i, i + 4) for i in range(4)])


def prism_c5xc2() -> Graph:
    """Outer 5-cycle ``0..4``, inner 5-cycle ``5..9``, spokes ``(i, i+5)``."""
    outer = [(i, (i + 1) % 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 1) % 5) for i in range(5)]
    return Graph(10, outer + inner + [(i, i + 5) for i in range(5)])


def petersen() -> Graph:
    """Outer 5-cycle ``0..4``, inner pentagram on ``5..9``, spokes ``(i, i+5)``."""
    outer = [(i, (i + 1) % 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, outer + inner + [(i, i + 5) for i in range(5)])


_NAME_PATTERNS = [
    (re.compile(r"^K_?\{?2,2,2\}?$|^K222$|^octahedron$", re.I), lambda m: k222()),
    (re.compile(r"^K_?\{?(\d+),(\d+)\}?$"), lambda m: complete_bipartite(int(m[1]), int(m[2]))),
    (re.compile(r"^K_?\{?(\d+)\}?$"), lambda m: complete_graph(int(m[1]))),
    (re.compile(r"^C_?\{?(\d+)\}?$"), lambda m: cycle_graph(int(m[1]))),
    (re.compile(r"^P_?\{?(\d+)\}?$"), lambda m: path_graph(int(m[1]))),
    (re.compile(r"^V_?8$|^wagner$", re.I), lambda m: wagner_v8()),
    (re.compile(r"^C5x(C2|K2)$|^prism$", re.I), lambda m: prism_c5xc2()),
    (re.compile(r"^petersen$", re.I), lambda m: petersen()),
]


def named_graph(name: str) -> Graph:
    """Look up a graph by name: ``K5``, ``K_{3,4}``, ``K_{2,2,2}``, ``C6``,
    ``P4``, ``V8``, ``C5xC2``, ``Petersen``."""
    key = name.strip().replace(" ", "")
    for pattern, build in _NAME_PATTERNS:
        m = pattern.match(key)
        if m:
            try:
                return build(m)
            except ValueError as exc:
                raise ParseError(f"bad parameters for graph {name!r}: {exc}") from exc
    raise ParseError(f"unknown graph name {name!r}")


# ---------------------------------------------------------------------------
# tree decompositions


@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple
    tree_edges: tuple
    exact: bool = True
    order: tuple = field(default=(), compare=False)

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def is_valid(self, G: Graph) -> bool:
        return not self.problems(G)

    def problems(self, G: Graph) -> list:
        out = []
        covered = set().union(*self.bags) if self.bags else set()
        if covered != set(range(G.n)):
            out.append("bags do not cover the node set")
        for i, j in G.edges:
            if not any(i in b and j in b for b in self.bags):
                out.append(f"edge ({i}, {j}) not in any bag")
        t = nx.Graph()
        t.add_nodes_from(range(len(self.bags)))
        t.add_edges_from(self.tree_edges)
        if self.bags and not nx.is_tree(t):
            out.append("bag graph is not a tree")
            return out
        for v in range(G.n):
            holding = [k for k, b in enumerate(self.bags) if v in b]
            if holding and not nx.is_connected(t.subgraph(holding)):
                out.append(f"bags holding node {v} are not connected")
        return out


def _adj_dict(G: Graph) -> dict:
    return {v: set(G.adjacency[v]) for v in range(G.n)}


def _eliminate(adj: dict, v) -> dict:
    nb = adj[v]
    new = {u: set(s) for u, s in adj.items() if u != v}
    for a in nb:
        new[a].discard(v)
        new[a] |= nb - {a}
    return new


def _fill_count(adj: dict, v) -> int:
    nb = list(adj[v])
    return sum(1 for a, b in itertools.combinations(nb, 2) if b not in adj[a])


def _min_fill_order(adj: dict) -> tuple:
    adj = {u: set(s) for u, s in adj.items()}
    order, width = [], -1
    while adj:
        v = min(adj, key=lambda u: (_fill_count(adj, u), len(adj[u]), u))
        width = max(width, len(adj[v]))
        order.append(v)
        adj = _eliminate(adj, v)
    return width, order


def _minor_min_width(adj: dict) -> int:
    """Lower bound on treewidth (Gogate and Dechter)."""
    adj = {u: set(s) for u, s in adj.items()}
    best = 0
    while len(adj) > 1:
        v = min(adj, key=lambda u: (len(adj[u]), u))
        best = max(best, len(adj[v]))
        if not adj[v]:
            del adj[v]
            continue
        w = min(adj[v], key=lambda u: (len(adj[u] & adj[v]), u))
        # contract v into w
        for a in adj[v]:
            if a != w:
                adj[a].discard(v)
                adj[a].add(w)
                adj[w].add(a)
        adj[w].discard(v)
        del adj[v]
    return best


def _is_clique_in(adj: dict, nodes) -> bool:
    return all(b in adj[a] for a, b in itertools.combinations(nodes, 2))


def _exact_order(adj: dict) -> tuple:
    """Branch and bound over elimination orderings (QuickBB style)."""
    ub, ub_order = _min_fill_order(adj)
    lb0 = _minor_min_width(adj)
    best = [ub, ub_order]
    if lb0 >= ub:
        return best[0], best[1]
    memo: dict = {}

    def rec(adj, order, width):
        if width >= best[0]:
            return
        if len(adj) - 1 <= width:
            best[0], best[1] = width, order + list(adj)
            return
        key = frozenset(adj)
        if memo.get(key, math.inf) <= width:
            return
        memo[key] = width
        lb = max(width, _minor_min_width(adj))
        if lb >= best[0]:
            return
        for v in sorted(adj, key=lambda u: (len(adj[u]), u)):
            if _is_clique_in(adj, adj[v]) or len(adj[v]) <= lb and any(
                _is_clique_in(adj, adj[v] - {a}) for a in adj[v]
            ):
                rec(_eliminate(adj, v), order + [v], max(width, len(adj[v])))
                return
        for v in sorted(adj, key=lambda u: (_fill_count(adj, u), len(adj[u]), u)):
            d = len(adj[v])
            if d >= best[0]:
                continue
            rec(_eliminate(adj, v), order + [v], max(width, d))

    rec({u: set(s) for u, s in adj.items()}, [], -1)
    return best[0], best[1]


def decomposition_from_order(G: Graph, order, exact: bool = False) -> TreeDecomposition:
    """Tree decomposition induced by eliminating nodes in ``order``."""
    pos = {v: k for k, v in enumerate(order)}
    adj = _adj_dict(G)
    bags, higher = [], []
    for v in order:
        nb = adj[v]
        bags.append(frozenset(nb | {v}))
        higher.append(nb)
        adj = _eliminate(adj, v)
    edges = []
    for k, nb in enumerate(higher):
        if nb:
            edges.append((k, pos[min(nb, key=pos.__getitem__)]))
        elif k + 1 < len(order):
            edges.append((k, k + 1))
    return TreeDecomposition(tuple(bags), tuple(edges), exact, tuple(order))


def treewidth(G: Graph, exact_max_nodes: int = EXACT_TREEWIDTH_MAX_NODES) -> tuple:
    """Return ``(width, decomposition)``.

    Exact by branch and bound for ``n <= exact_max_nodes``, min-fill upper
    bound beyond; ``decomposition.exact`` records which. Worst case is
    exponential in ``n``.
    """
    if G.n == 0:
        raise ValueError("treewidth of the empty graph is undefined")
    adj = _adj_dict(G)
    if G.n <= exact_max_nodes:
        width, order = _exact_order(adj)
        exact = True
    else:
        width, order = _min_fill_order(adj)
        exact = False
    td = decomposition_from_order(G, order, exact)
    return td.width, td


def treewidth_upper_bound(G: Graph) -> int:
    return _min_fill_order(_adj_dict(G))[0] if G.n else -1


@dataclass(frozen=True)
class CliqueTree:
    """Clique tree of a k-tree: ``bags[0]`` is the root; every other bag
    has ``k+1`` nodes and shares exactly ``k`` of them with its parent."""

    k: int
    bags: tuple
    parents: tuple

    def separator(self, idx: int) -> frozenset:
        return self.bags[idx] & self.bags[self.parents[idx]]

    def graph(self, n: int) -> Graph:
        edges = set()
        for b in self.bags:
            edges.update(itertools.combinations(sorted(b), 2))
        return Graph(n, edges)


def ktree_clique_tree(G: Graph, k: int, td: TreeDecomposition = None) -> CliqueTree:
    """Clique tree of a k-tree containing ``G`` (same node set).

    Needs ``treewidth(G) <= k``. For ``n <= k + 1`` the single bag is all
    of ``V``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if G.n <= k + 1:
        if G.n == 0:
            raise ValueError("empty graph")
        return CliqueTree(k, (frozenset(range(G.n)),), (None,))
    if td is None:
        _, td = treewidth(G)
    if td.width > k:
        if td.exact:
            raise InfeasibleWidthError(f"treewidth {td.width} exceeds k = {k}")
        _, td = treewidth(G, exact_max_nodes=max(G.n, EXACT_TREEWIDTH_MAX_NODES))
        if td.width > k:
            raise InfeasibleWidthError(f"treewidth {td.width} exceeds k = {k}")
    order = list(td.order) if td.order else None
    if order is None or len(order) != G.n:
        raise ValueError("decomposition lacks an elimination order")
    pos = {v: i for i, v in enumerate(order)}
    adj = _adj_dict(G)
    higher = {}
    for v in order:
        higher[v] = set(adj[v])
        adj = _eliminate(adj, v)
    n = G.n
    root = frozenset(order[n - k - 1:])
    bags, parents = [root], [None]
    bag_of = {v: 0 for v in root}
    for i in range(n - k - 2, -1, -1):
        v = order[i]
        nplus = higher[v]
        parent = bag_of[min(nplus, key=pos.__getitem__)] if nplus else 0
        base = bags[parent]
        assert nplus <= base, "elimination order is not perfect"
        drop = max(base - nplus, key=pos.__getitem__)
        bags.append((base - {drop}) | {v})
        parents.append(parent)
        bag_of[v] = len(bags) - 1
    return CliqueTree(k, tuple(bags), tuple(parents))


def embed_in_ktree(G: Graph, k: int) -> Graph:
    """A k-tree on the same node set containing ``G`` as a subgraph.

    For ``n <= k + 1`` no k-tree on ``n`` nodes exists; the complete graph
    is returned instead.
    """
    return ktree_clique_tree(G, k).graph(G.n)


def is_ktree(G: Graph, k: int) -> bool:
    """Recognize k-trees by peeling simplicial nodes of degree k."""
    if G.n < k + 1:
        return False
    if G.m != k * G.n - k * (k + 1) // 2:
        return False
    adj = _adj_dict(G)
    while len(adj) > k + 1:
        for v in adj:
            if len(adj[v]) == k and _is_clique_in(adj, adj[v]):
                adj = _eliminate(adj, v)
                break
        else:
            return False
    return _is_clique_in(adj, list(adj))


# ---------------------------------------------------------------------------
# minors


@dataclass(frozen=True)
class MinorModel:
    """``branch_sets[h]`` is the set of ``G``-nodes contracted onto ``H``-node ``h``."""

    branch_sets: tuple

    def problems(self, G: Graph, H: Graph) -> list:
        out = []
        if len(self.branch_sets) != H.n:
            return [f"expected {H.n} branch sets, got {len(self.branch_sets)}"]
        seen = set()
        for h, bs in enumerate(self.branch_sets):
            if not bs:
                out.append(f"branch set {h} is empty")
                continue
            if seen & set(bs):
                out.append(f"branch set {h} overlaps an earlier one")
            seen |= set(bs)
            if any(not 0 <= v < G.n for v in bs):
                out.append(f"branch set {h} has nodes outside G")
                continue
            if not G.induced(bs).is_connected():
                out.append(f"branch set {h} is not connected")
        for a, b in H.edges:
            A, B = self.branch_sets[a], self.branch_sets[b]
            if not any(G.has_edge(u, v) for u in A for v in B):
                out.append(f"no G-edge between branch sets {a} and {b}")
        return out

    def is_valid(self, G: Graph, H: Graph) -> bool:
        return not self.problems(G, H)

    def to_dict(self) -> dict:
        return {"branch_sets": [sorted(b) for b in self.branch_sets]}


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def tick(self):
        self.used += 1
        if self.limit is not None and self.used > self.limit:
            raise SearchBudgetExceeded(f"minor search exceeded {self.limit} states")


def _spanning_match(q_adj: dict, H: Graph):
    """Bijection quotient -> H with every H-edge present, or None."""
    nodes = sorted(q_adj)
    if H.m == H.n * (H.n - 1) // 2:
        if all(len(q_adj[v]) == len(nodes) - 1 for v in nodes):
            return dict(zip(nodes, range(H.n)))
        return None
    q = nx.Graph()
    q.add_nodes_from(nodes)
    q.add_edges_from((a, b) for a in nodes for b in q_adj[a] if a < b)
    matcher = nx.algorithms.isomorphism.GraphMatcher(q, H.to_networkx())
    for mapping in matcher.subgraph_monomorphisms_iter():
        return mapping
    return None


def _merge(parts: dict, adj: dict, x, y):
    keep, gone = min(x, y), max(x, y)
    parts = dict(parts)
    parts[keep] = parts[keep] | parts.pop(gone)
    new = {u: set(s) for u, s in adj.items() if u != gone}
    for a in adj[gone]:
        if a != keep:
            new[a].discard(gone)
            new[a].add(keep)
            new[keep].add(a)
    new[keep].discard(gone)
    return parts, new, keep


def _search_connected(adj0: dict, H: Graph, budget: _Budget):
    """Exhaustive search for a connected ``H`` in a connected graph.

    Branch sets may be assumed to cover the whole component, so the search
    runs over connected partitions. Each step takes the unfrozen part of
    least degree and either freezes it as a final branch set or merges it
    with an unfrozen neighbour.
    """
    hn, hm = H.n, H.m
    delta = min(H.degree(v) for v in range(hn))
    max_nondeg = max(hn - 1 - H.degree(v) for v in range(hn))
    seen = set()

    def rec(parts, adj, frozen):
        budget.tick()
        key = (frozenset(parts.values()), frozenset(parts[f] for f in frozen))
        if key in seen:
            return None
        seen.add(key)
        q = len(parts)
        if q < hn or sum(len(s) for s in adj.values()) // 2 < hm:
            return None
        if q == hn:
            mapping = _spanning_match(adj, H)
            return (parts, mapping) if mapping else None
        if len(frozen) >= hn:
            return None
        for f in frozen:
            if len(adj[f]) < delta:
                return None
            if sum(1 for g in frozen if g != f and g not in adj[f]) > max_nondeg:
                return None
        free = [v for v in parts if v not in frozen]
        x = min(free, key=lambda v: (len(adj[v]), v))
        free_nb = sorted(v for v in adj[x] if v not in frozen)
        options = []
        if len(adj[x]) >= delta:
            options.append(None)
        if delta >= 3 and len(adj[x]) <= 2 and len(free_nb) == len(adj[x]):
            options += free_nb[:1]
        else:
            options += free_nb
        for y in options:
            if y is None:
                found = rec(parts, adj, frozen | {x})
            else:
                p2, a2, keep = _merge(parts, adj, x, y)
                fr = frozenset(keep if f in (x, y) else f for f in frozen)
                found = rec(p2, a2, fr)
            if found:
                return found
        return None

    parts = {v: frozenset([v]) for v in adj0}
    res = rec(parts, {v: set(s) for v, s in adj0.items()}, frozenset())
    if not res:
        return None
    parts, mapping = res
    sets = [None] * hn
    for qnode, h in mapping.items():
        sets[h] = parts[qnode]
    return MinorModel(tuple(frozenset(s) for s in sets))


def _search_general(G: Graph, H: Graph, budget: _Budget):
    """H is a subgraph of some contraction of G; used for disconnected H."""
    hdeg = sorted((H.degree(v) for v in range(H.n)), reverse=True)
    seen = set()

    def rec(parts, adj):
        budget.tick()
        key = frozenset(parts.values())
        if key in seen:
            return None
        seen.add(key)
        if len(parts) < H.n or sum(len(s) for s in adj.values()) // 2 < H.m:
            return None
        qdeg = sorted((len(s) for s in adj.values()), reverse=True)
        if all(a >= b for a, b in zip(qdeg, hdeg)):
            q = nx.Graph()
            q.add_nodes_from(adj)
            q.add_edges_from((a, b) for a in adj for b in adj[a] if a < b)
            matcher = nx.algorithms.isomorphism.GraphMatcher(q, H.to_networkx())
            for mapping in matcher.subgraph_monomorphisms_iter():
                sets = [None] * H.n
                for qnode, h in mapping.items():
                    sets[h] = parts[qnode]
                return MinorModel(tuple(frozenset(s) for s in sets))
        for a in sorted(adj):
            for b in sorted(adj[a]):
                if a < b:
                    p2, a2, _ = _merge(parts, adj, a, b)
                    found = rec(p2, a2)
                    if found:
                        return found
        return None

    return rec({v: frozenset([v]) for v in range(G.n)}, _adj_dict(G))


def _greedy_minor(adj0: dict, H: Graph, tries: int, seed: int = 0):
    """Randomized contraction heuristic; only ever returns verified models."""
    rng = random.Random(seed)
    for _ in range(tries):
        parts = {v: frozenset([v]) for v in adj0}
        adj = {v: set(s) for v, s in adj0.items()}
        while len(parts) > H.n:
            x = min(adj, key=lambda v: (len(adj[v]), rng.random()))
            if not adj[x]:
                break
            y = min(adj[x], key=lambda v: (len(adj[v] & adj[x]), rng.random()))
            parts, adj, _ = _merge(parts, adj, x, y)
        if len(parts) == H.n:
            mapping = _spanning_match(adj, H)
            if mapping:
                sets = [None] * H.n
                for qnode, h in mapping.items():
                    sets[h] = parts[qnode]
                return MinorModel(tuple(frozenset(s) for s in sets))
    return None


def has_minor(G: Graph, H: Graph, budget: int | None = DEFAULT_MINOR_BUDGET):
    """Return a :class:`MinorModel` of ``H`` in ``G``, or ``None``.

    The search is exhaustive and exponential in the worst case; it is meant
    for small pattern graphs (``H`` with at most 8 nodes). Raises
    :class:`SearchBudgetExceeded` if more than ``budget`` search states are
    visited (``budget=None`` disables the limit).
    """
    if H.n == 0:
        return MinorModel(())
    if H.n > G.n or H.m > G.m:
        return None
    if H.m == 0:
        return MinorModel(tuple(frozenset([v]) for v in range(H.n)))
    counter = _Budget(budget)
    if not H.is_connected():
        return _search_general(G, H, counter)
    tw_h = treewidth(H)[0]
    if treewidth_upper_bound(G) < tw_h:
        return None
    for comp in G.components():
        if len(comp) < H.n:
            continue
        adj = {v: set(G.adjacency[v]) for v in comp}
        if sum(len(s) for s in adj.values()) // 2 < H.m:
            continue
        if len(comp) > 12:
            model = _greedy_minor(adj, H, tries=20)
            if model is not None:
                return model
        model = _search_connected(adj, H, counter)
        if model is not None:
            return model
    return None
