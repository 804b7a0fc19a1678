"""Brute-force and local-search verifiers.

These are independent checks on the constructive code: a low-rank fit that
converges shows a rank-``k`` completion exists; one that fails after many
restarts is evidence only, never a proof of nonexistence.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .completion import DistanceData
from .errors import GramforgeError
from .graphs import Graph
from .partial import PartialMatrix

TOL_FIT = 1e-10
NEAR_FIT = 1e-4
FIRST_PASS = 200
MAX_BF_NODES = 12


@dataclass
class FitResult:
    points: np.ndarray
    residual: float
    restarts_used: int
    converged: bool
    seed: int
    k: int

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "points": self.points.tolist(),
            "residual": self.residual,
            "converged": self.converged,
            "restarts_used": self.restarts_used,
            "seed": self.seed,
        }


def _pairs(a):
    keys = a.keys() if isinstance(a, PartialMatrix) else [k for k, _ in a.items()]
    idx = np.array(keys, dtype=int).reshape(-1, 2)
    vals = np.array([a.values[tuple(k)] for k in keys], dtype=float)
    return idx[:, 0], idx[:, 1], vals


def fit_residual(P, a: PartialMatrix) -> float:
    """``sum over V u E of (<p_i, p_j> - a_ij)^2``, computed entry by entry."""
    P = np.asarray(P, dtype=float)
    return float(sum((float(np.dot(P[i], P[j])) - v) ** 2 for (i, j), v in a.items()))


def fit_gradient(P, a: PartialMatrix) -> np.ndarray:
    """Gradient of :func:`fit_residual` with respect to the rows of ``P``."""
    P = np.asarray(P, dtype=float)
    I, J, v = _pairs(a)
    r = np.einsum("ij,ij->i", P[I], P[J]) - v
    g = np.zeros_like(P)
    np.add.at(g, I, 2 * r[:, None] * P[J])
    np.add.at(g, J, 2 * r[:, None] * P[I])
    return g


def edm_residual(P, d: DistanceData) -> float:
    """``sum over E of (||p_i - p_j||^2 - d_ij)^2``."""
    P = np.asarray(P, dtype=float)
    return float(sum((float(np.sum((P[i] - P[j]) ** 2)) - v) ** 2 for (i, j), v in d.items()))


def _gram_problem(a: PartialMatrix, k: int):
    I, J, v = _pairs(a)
    n = a.n
    rows = np.arange(len(v))

    def fun(z):
        P = z.reshape(n, k)
        return np.einsum("ij,ij->i", P[I], P[J]) - v

    def jac(z):
        P = z.reshape(n, k)
        Jm = np.zeros((len(v), n, k))
        Jm[rows, I] += P[J]
        Jm[rows, J] += P[I]
        return Jm.reshape(len(v), n * k)

    return fun, jac


def _solve(fun, jac, z0, iters):
    sol = least_squares(fun, z0, jac=jac, method="trf", ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=iters)
    return sol.x


def _compress_and_solve(P, make_problem, residual, iters, tol_fit):
    """Re-solve a near-fit in fewer dimensions.

    When ``k`` exceeds the smallest rank of a fit, local search drifts
    towards rank-deficient solutions where the Jacobian is singular and
    convergence is sublinear. Truncating the near-fit to its top ``r``
    singular directions and solving in ``R^r`` (``r`` increasing) reaches
    an isolated solution quickly. The result is zero-padded back to ``k``.
    """
    n, k = P.shape
    best, best_res = P, residual(P)
    U, sv, _ = np.linalg.svd(P, full_matrices=False)
    for r in range(1, k):
        fun, jac = make_problem(r)
        Q = _solve(fun, jac, (U[:, :r] * sv[:r]).ravel(), min(iters, FIRST_PASS)).reshape(n, r)
        Q = np.hstack([Q, np.zeros((n, k - r))])
        res = residual(Q)
        if res < best_res:
            best, best_res = Q, res
        if best_res < tol_fit:
            break
    return best, best_res


def _warm_start(G, a, k):
    from .numerics import gram_factor
    from .sdp import psd_completion_feasible

    try:
        X = psd_completion_feasible(G, a)
    except GramforgeError:
        return None
    P = gram_factor(X, tol_rel=1e-12)
    if P.shape[1] >= k:
        return P[:, :k]
    return np.hstack([P, np.zeros((G.n, k - P.shape[1]))])


def lowrank_fit(
    G: Graph,
    a: PartialMatrix,
    k: int,
    restarts: int = 20,
    iters: int = 2000,
    seed: int = 0,
    tol_fit: float = TOL_FIT,
    warm_start: bool = True,
) -> FitResult:
    """Search for ``p_1..p_n`` in ``R^k`` with ``<p_i, p_j> = a_ij`` on ``V u E``.

    Each restart draws row ``i`` from ``N(0, a_ii / k)`` and runs a
    trust-region least-squares solve; the first restart whose residual is
    below ``tol_fit`` ends the search. With ``warm_start`` the first
    attempt instead starts from the top-``k`` factor of an interior
    completion. Deterministic for a given ``seed``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if a.graph != G:
        raise ValueError("partial matrix lives on a different graph")
    rng = np.random.default_rng(seed)
    fun, jac = _gram_problem(a, k)
    scale = np.sqrt(np.maximum(a.diagonal(), 1e-12) / k)
    starts = []
    if warm_start:
        P0 = _warm_start(G, a, k)
        if P0 is not None:
            starts.append(P0)
    best = None
    for t in range(restarts):
        P0 = starts[t] if t < len(starts) else rng.standard_normal((G.n, k)) * scale[:, None]
        P = _solve(fun, jac, P0.ravel(), min(iters, FIRST_PASS)).reshape(G.n, k)
        res = fit_residual(P, a)
        if tol_fit <= res < NEAR_FIT:
            P, res = _compress_and_solve(P, lambda r: _gram_problem(a, r), lambda Q: fit_residual(Q, a), iters, tol_fit)
        if tol_fit <= res and iters > FIRST_PASS:
            P = _solve(fun, jac, P.ravel(), iters - FIRST_PASS).reshape(G.n, k)
            res = fit_residual(P, a)
        if best is None or res < best[1]:
            best = (P, res)
        if res < tol_fit:
            return FitResult(P, res, t + 1, True, seed, k)
    return FitResult(best[0], best[1], restarts, False, seed, k)


def edm_fit(
    G: Graph,
    d: DistanceData,
    k: int,
    restarts: int = 20,
    iters: int = 2000,
    seed: int = 0,
    tol_fit: float = TOL_FIT,
) -> FitResult:
    """Search for points in ``R^k`` with ``||p_i - p_j||^2 = d_ij`` on ``E``.

    Node 0 is pinned at the origin to remove translations.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if d.graph != G:
        raise ValueError("distance data live on a different graph")
    if any(v < 0 for v in d.values.values()):
        raise ValueError("squared distances must be nonnegative")
    n = G.n
    items = d.items()
    I = np.array([i for (i, _), _ in items], dtype=int)
    J = np.array([j for (_, j), _ in items], dtype=int)
    v = np.array([val for _, val in items], dtype=float)
    rows = np.arange(len(v))

    def problem(k):
        def full(z):
            return np.vstack([np.zeros((1, k)), z.reshape(n - 1, k)])

        def fun(z):
            P = full(z)
            diff = P[I] - P[J]
            return np.einsum("ij,ij->i", diff, diff) - v

        def jac(z):
            P = full(z)
            diff = 2 * (P[I] - P[J])
            Jm = np.zeros((len(v), n, k))
            Jm[rows, I] += diff
            Jm[rows, J] -= diff
            return Jm[:, 1:].reshape(len(v), (n - 1) * k)

        return fun, jac, full

    def pinned(r):
        f, j, _ = problem(r)
        # the compressed start keeps node 0 at the origin; drop its row
        return (lambda z: f(z[r:]), lambda z: np.hstack([np.zeros((len(v), r)), j(z[r:])]))

    fun, jac, full = problem(k)
    rng = np.random.default_rng(seed)
    spread = np.sqrt(max(float(np.mean(v)) if len(v) else 1.0, 1e-12) / k)
    best = None
    for t in range(restarts):
        if n == 1 or len(v) == 0:
            P = np.zeros((n, k))
        else:
            z0 = rng.standard_normal((n - 1) * k) * spread
            P = full(_solve(fun, jac, z0, min(iters, FIRST_PASS)))
            res = edm_residual(P, d)
            if tol_fit <= res < NEAR_FIT:
                P, res = _compress_and_solve(P, pinned, lambda Q: edm_residual(Q, d), iters, tol_fit)
                P = P - P[0]
            if tol_fit <= res and iters > FIRST_PASS:
                P = full(_solve(fun, jac, P[1:].ravel(), iters - FIRST_PASS))
        res = edm_residual(P, d)
        if best is None or res < best[1]:
            best = (P, res)
        if res < tol_fit:
            return FitResult(P, res, t + 1, True, seed, k)
    return FitResult(best[0], best[1], restarts, False, seed, k)


def orthogonality_dimension_search(G: Graph, kmax: int | None = None, restarts: int = 20, seed: int = 0):
    """Smallest ``k`` with unit vectors in ``R^k`` orthogonal across every edge of ``G``.

    This is ``gd(G, x)`` for ``x`` = (unit diagonal, zero on every edge of
    ``G``), so ``omega(G) <= k <= chi(G)``. In the language of
    orthogonal representations of the complement, the input graph is the
    complement ``Gbar`` of the graph being represented: pass ``G`` to get
    ``gd(G, 0)``.

    Worked example, the 5-cycle 0-1-2-3-4-0: the constraints are
    ``p0.p1 = p1.p2 = p2.p3 = p3.p4 = p4.p0 = 0``. In ``R^2`` the vectors
    would alternate between two orthogonal lines around an odd cycle,
    which is impossible, and ``R^3`` works (3-colour the cycle), so the
    search returns 3, between ``omega = 2`` and ``chi = 3``.

    Returns ``None`` if no fit is found up to ``kmax`` (default ``n``).
    """
    if G.n > 10:
        raise ValueError("orthogonality dimension search is limited to 10 nodes")
    kmax = G.n if kmax is None else kmax
    vals = {(i, i): 1.0 for i in range(G.n)}
    vals.update({e: 0.0 for e in G.edges})
    x = PartialMatrix(G, vals)
    for k in range(1, kmax + 1):
        if lowrank_fit(G, x, k, restarts=restarts, seed=seed).converged:
            return k
    return None


def _guard(G):
    if G.n > MAX_BF_NODES:
        raise ValueError(f"brute force is limited to {MAX_BF_NODES} nodes")


def clique_number_bf(G: Graph) -> int:
    _guard(G)
    for size in range(G.n, 0, -1):
        for nodes in itertools.combinations(range(G.n), size):
            if G.is_clique(nodes):
                return size
    return 0


def chromatic_number_bf(G: Graph) -> int:
    _guard(G)
    if G.n == 0:
        return 0
    order = sorted(range(G.n), key=G.degree, reverse=True)

    def colourable(k):
        colour = {}

        def place(t):
            if t == len(order):
                return True
            v = order[t]
            used = {colour[u] for u in G.neighbors(v) if u in colour}
            # new colours are interchangeable: only try the first unused one
            top = max(colour.values(), default=-1)
            for c in range(min(k, top + 2)):
                if c not in used:
                    colour[v] = c
                    if place(t + 1):
                        return True
                    del colour[v]
            return False

        return place(0)

    for k in range(1, G.n + 1):
        if colourable(k):
            return k
    return G.n
