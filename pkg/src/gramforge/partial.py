"""Partial matrices: values on the diagonal and on the edges of a graph."""
from __future__ import annotations

import math

import networkx as nx
import numpy as np

from .errors import ParseError
from .graphs import Graph


def _key(i, j):
    return (i, j) if i <= j else (j, i)


class PartialMatrix:
    """A vector indexed by ``V ∪ E`` of ``graph``.

    ``values`` maps ``(i, i)`` for every node and ``(i, j)`` for every edge
    to a float. Any other key, or a missing one, is rejected.
    """

    def __init__(self, graph: Graph, values):
        vals = {}
        for (i, j), v in dict(values).items():
            vals[_key(int(i), int(j))] = float(v)
        expected = {(i, i) for i in range(graph.n)} | set(graph.edges)
        if set(vals) != expected:
            missing = sorted(expected - set(vals))
            extra = sorted(set(vals) - expected)
            raise ValueError(f"entries must cover exactly V and E (missing {missing[:5]}, extra {extra[:5]})")
        if not all(math.isfinite(v) for v in vals.values()):
            raise ValueError("entries must be finite")
        self.graph = graph
        self.values = vals

    @property
    def n(self) -> int:
        return self.graph.n

    def __getitem__(self, ij) -> float:
        return self.values[_key(*ij)]

    def __eq__(self, other):
        return isinstance(other, PartialMatrix) and self.graph == other.graph and self.values == other.values

    def __repr__(self):
        return f"PartialMatrix(n={self.n}, m={self.graph.m})"

    def keys(self) -> list:
        return sorted(self.values)

    def items(self) -> list:
        return [(k, self.values[k]) for k in self.keys()]

    def diagonal(self) -> np.ndarray:
        return np.array([self.values[(i, i)] for i in range(self.n)])

    def dense(self, fill=np.nan) -> np.ndarray:
        X = np.full((self.n, self.n), fill, dtype=float)
        for (i, j), v in self.values.items():
            X[i, j] = X[j, i] = v
        return X

    def block(self, nodes) -> np.ndarray:
        """Principal block on ``nodes``; they must form a clique."""
        nodes = list(nodes)
        B = np.empty((len(nodes), len(nodes)))
        for a, i in enumerate(nodes):
            for b, j in enumerate(nodes):
                B[a, b] = self[i, j]
        return B

    def clique_violations(self, tol: float = 1e-8) -> list:
        """Maximal cliques whose fully specified block is not psd."""
        bad = []
        for clique in nx.find_cliques(self.graph.to_networkx()):
            w = np.linalg.eigvalsh(self.block(sorted(clique)))
            if w[0] < -tol * (1 + max(w[-1], 0.0)):
                bad.append((sorted(clique), float(w[0])))
        return bad

    def map_values(self, fn) -> "PartialMatrix":
        return PartialMatrix(self.graph, {k: fn(k, v) for k, v in self.values.items()})

    @classmethod
    def from_matrix(cls, X, graph: Graph) -> "PartialMatrix":
        return project_to_graph(X, graph)

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "entries": [{"i": i, "j": j, "v": v} for (i, j), v in self.items()],
        }

    @classmethod
    def from_dict(cls, data, graph: Graph | None = None) -> "PartialMatrix":
        try:
            g = Graph.from_dict(data["graph"]) if "graph" in data else graph
            if g is None:
                raise KeyError("graph")
            if graph is not None and g != graph:
                raise ValueError("partial matrix graph differs from the given graph")
            vals = {}
            for e in data["entries"]:
                k = _key(int(e["i"]), int(e["j"]))
                if k in vals:
                    raise ValueError(f"duplicate entry {k}")
                vals[k] = float(e["v"])
            return cls(g, vals)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid partial matrix JSON: {exc}") from exc


def project_to_graph(X, G: Graph) -> PartialMatrix:
    """Copy the diagonal and the edge entries of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.shape != (G.n, G.n):
        raise ValueError(f"matrix shape {X.shape} does not match graph with {G.n} nodes")
    vals = {(i, i): X[i, i] for i in range(G.n)}
    vals.update({(i, j): (X[i, j] + X[j, i]) / 2 for i, j in G.edges})
    return PartialMatrix(G, vals)
