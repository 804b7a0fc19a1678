"""Small dense semidefinite programs.

The solver is a primal-dual path-following method (HKM search direction,
Mehrotra predictor-corrector) for problems in the form::

    optimize <C, X>   s.t.  <A_j, X> = b_j  (j = 1..m),  X psd

Internally everything is a minimization of ``<C', X>`` with ``C' = C``
(``sense="min"``) or ``C' = -C`` (``sense="max"``). The reported ``y`` and
``S`` belong to that form: ``S = C' - sum_j y_j A_j``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from . import config
from .errors import InfeasibleDataError, InvalidStretchError, NumericalError, ParseError
from .graphs import Graph
from .numerics import as_symmetric, gram_factor, numeric_rank
from .partial import PartialMatrix

log = logging.getLogger(__name__)

SIGMA_MIN = 0.1


def unit_matrix(n: int, i: int, j: int) -> np.ndarray:
    """``E_ij = (e_i e_j^T + e_j e_i^T) / 2``."""
    E = np.zeros((n, n))
    E[i, j] += 0.5
    E[j, i] += 0.5
    return E


@dataclass
class SdpProblem:
    C: np.ndarray
    A: list
    b: np.ndarray
    sense: str = "max"

    def __post_init__(self):
        self.C = as_symmetric(self.C)
        self.A = [as_symmetric(a) for a in self.A]
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        if not self.A:
            raise ValueError("at least one constraint is required")
        if len(self.A) != len(self.b):
            raise ValueError("constraint count and right-hand side length differ")
        if any(a.shape != self.C.shape for a in self.A):
            raise ValueError("all matrices must be n x n")

    @property
    def n(self) -> int:
        return self.C.shape[0]

    @property
    def m(self) -> int:
        return len(self.A)

    def constraint_values(self, X) -> np.ndarray:
        return np.array([np.sum(a * X) for a in self.A])

    def objective(self, X) -> float:
        return float(np.sum(self.C * X))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "objective": self.C.tolist(),
            "constraints": [{"A": a.tolist(), "b": float(bj)} for a, bj in zip(self.A, self.b)],
            "sense": self.sense,
        }

    @classmethod
    def from_dict(cls, data) -> "SdpProblem":
        try:
            n = int(data["n"])
            C = np.array(data["objective"], dtype=float).reshape(n, n)
            A = [np.array(c["A"], dtype=float).reshape(n, n) for c in data["constraints"]]
            b = [float(c["b"]) for c in data["constraints"]]
            return cls(C, A, b, data.get("sense", "max"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid SDP problem JSON: {exc}") from exc


@dataclass
class SdpSolution:
    X: np.ndarray
    y: np.ndarray
    S: np.ndarray
    status: str
    primal_value: float
    dual_value: float
    gap: float
    primal_infeasibility: float
    dual_infeasibility: float
    iterations: int
    regularization: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "residuals": {"primal": self.primal_infeasibility, "dual": self.dual_infeasibility},
            "iterations": self.iterations,
            "regularization": self.regularization,
        }


def _max_step(X, dX) -> float:
    """Largest ``t`` with ``X + t dX`` psd."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _max_step_unguarded(X, dX)


def _max_step_unguarded(X, dX) -> float:
    try:
        L = np.linalg.cholesky(X)
        T = sla.solve_triangular(L, dX, lower=True)
        T = sla.solve_triangular(L, T.T, lower=True)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(X)
        w = np.maximum(w, 1e-300)
        R = V / np.sqrt(w)
        T = R.T @ dX @ R
    T = (T + T.T) / 2
    if not np.all(np.isfinite(T)):
        return 0.0
    try:
        lam = np.linalg.eigvalsh(T)[0]
    except np.linalg.LinAlgError:
        return 0.0
    return math.inf if lam >= 0 else -1.0 / lam


def _independent_rows(Avec, b, tol=1e-10):
    """Indices of a maximal independent subset of constraint rows."""
    _, R, piv = sla.qr(Avec.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > tol * (d[0] if len(d) else 1.0)))
    keep = np.sort(piv[:rank])
    dropped = np.setdiff1d(np.arange(len(b)), keep)
    consistent = True
    if len(dropped):
        coef, *_ = np.linalg.lstsq(Avec[keep].T, Avec[dropped].T, rcond=None)
        consistent = bool(np.all(np.abs(coef.T @ b[keep] - b[dropped]) <= 1e-8 * (1 + np.abs(b[dropped]))))
    return keep, dropped, consistent


def sdp_solve(
    p: SdpProblem,
    tol_gap: float | None = None,
    tol_feas: float | None = None,
    max_iters: int | None = None,
) -> SdpSolution:
    """Solve ``p`` by infeasible-start primal-dual path following.

    Status is one of ``optimal``, ``primal_infeasible``, ``dual_infeasible``,
    ``max_iters`` or ``stalled``; the last iterate is always returned.
    Deterministic: the method has no random components.
    """
    cfg = config.DEFAULT
    tol_gap = cfg.tol_gap if tol_gap is None else tol_gap
    tol_feas = cfg.tol_feas if tol_feas is None else tol_feas
    max_iters = cfg.max_iters if max_iters is None else max_iters
    n, m_all = p.n, p.m
    sign = -1.0 if p.sense == "max" else 1.0
    C = sign * p.C
    Avec_all = np.array([a.ravel() for a in p.A])
    norms = np.linalg.norm(Avec_all, axis=1)
    if np.any(norms == 0):
        zero = np.where(norms == 0)[0]
        if np.any(np.abs(p.b[zero]) > 0):
            raise ValueError("a zero constraint matrix has a nonzero right-hand side")
        norms[zero] = 1.0
    Avec_all = Avec_all / norms[:, None]
    b_all = p.b / norms
    keep, dropped, consistent = _independent_rows(Avec_all, b_all)
    if len(dropped):
        log.debug("dropping %d linearly dependent constraints", len(dropped))
    Avec, b = Avec_all[keep], b_all[keep]
    m = len(keep)
    Amats = Avec.reshape(m, n, n)

    def A_op(Z):
        return Avec @ Z.ravel()

    def A_adj(v):
        return (Avec.T @ v).reshape(n, n)

    normC = np.linalg.norm(C)
    xi = max(10.0, math.sqrt(n), math.sqrt(n) * np.max(1 + np.abs(b)))
    eta = max(10.0, math.sqrt(n), normC)
    X = xi * np.eye(n)
    S = eta * np.eye(n)
    y = np.zeros(m)
    status, history = "max_iters", []
    stall = 0
    it = 0
    last_ap = last_ad = 1.0

    def finish(status, it):
        y_full = np.zeros(m_all)
        y_full[keep] = y / norms[keep]
        pobj = float(np.sum(C * X))
        dobj = float(b @ y)
        return SdpSolution(
            X=as_symmetric(X, check=False),
            y=y_full,
            S=as_symmetric(S, check=False),
            status=status,
            primal_value=sign * pobj,
            dual_value=sign * dobj,
            gap=abs(pobj - dobj),
            primal_infeasibility=float(np.linalg.norm(b - A_op(X)) / (1 + np.linalg.norm(b))),
            dual_infeasibility=float(np.linalg.norm(C - A_adj(y) - S) / (1 + normC)),
            iterations=it,
            history=history,
        )

    if not consistent:
        return finish("primal_infeasible", 0)

    for it in range(max_iters + 1):
        rp = b - A_op(X)
        Rd = C - A_adj(y) - S
        pobj, dobj = float(np.sum(C * X)), float(b @ y)
        comp = float(np.sum(X * S))
        mu = comp / n
        rel_gap = max(comp, abs(pobj - dobj)) / (1 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rp) / (1 + np.linalg.norm(b))
        dinf = np.linalg.norm(Rd) / (1 + normC)
        history.append((pobj, dobj, comp, pinf, dinf))
        if rel_gap <= tol_gap and pinf <= tol_feas and dinf <= tol_feas:
            status = "optimal"
            break
        if dobj > 0 and dinf <= tol_feas:
            lam = np.linalg.eigvalsh(A_adj(y))[-1]
            if lam <= 1e-8 * dobj and dobj > 1e8 * (1 + normC):
                status = "primal_infeasible"
                break
        if pobj < 0 and pinf <= tol_feas:
            if np.linalg.norm(A_op(X)) <= 1e-8 * -pobj and -pobj > 1e8 * (1 + np.linalg.norm(b)):
                status = "dual_infeasible"
                break
        if it == max_iters:
            break
        try:
            Ls = sla.cho_factor(S, lower=True)
            Sinv = sla.cho_solve(Ls, np.eye(n))
        except np.linalg.LinAlgError:
            Sinv = np.linalg.pinv(S, hermitian=True)
        Sinv = (Sinv + Sinv.T) / 2
        G = np.einsum("ab,jbc,cd->jad", Sinv, Amats, X)
        M = Avec @ G.reshape(m, n * n).T
        M = (M + M.T) / 2
        try:
            fac = sla.cho_factor(M, lower=True)

            def solve_M(r):
                return sla.cho_solve(fac, r)
        except np.linalg.LinAlgError:
            Mp = np.linalg.pinv(M, hermitian=True)

            def solve_M(r):
                return Mp @ r

        XRdSinv = A_op(X @ Rd @ Sinv)

        def direction(Rc):
            dy = solve_M(rp + XRdSinv - A_op(Rc @ Sinv))
            dS = Rd - A_adj(dy)
            dX = (Rc - X @ dS) @ Sinv
            return (dX + dX.T) / 2, dy, (dS + dS.T) / 2

        XS = X @ S
        dX, dy, dS = direction(-XS)
        ap = min(1.0, _max_step(X, dX))
        ad = min(1.0, _max_step(S, dS))
        mu_aff = max(float(np.sum((X + ap * dX) * (S + ad * dS))) / n, 0.0)
        # small predictor steps mean the iterate is off-centre: centre more
        expon = max(1.0, 3 * min(ap, ad) ** 2)
        sigma = min(1.0, max(SIGMA_MIN, (mu_aff / mu) ** expon)) if mu > 0 else 0.0
        Rc = sigma * mu * np.eye(n) - XS - dX @ dS
        dX, dy, dS = direction(Rc)
        tau = 0.9 + 0.09 * min(last_ap, last_ad)
        ap = min(1.0, tau * _max_step(X, dX))
        ad = min(1.0, tau * _max_step(S, dS))
        X = X + ap * dX
        y = y + ad * dy
        S = S + ad * dS
        X, S = (X + X.T) / 2, (S + S.T) / 2
        last_ap, last_ad = ap, ad
        if max(ap, ad) < 1e-9:
            stall += 1
            if stall >= 3:
                status = "stalled"
                break
        else:
            stall = 0
    if status == "optimal":
        X, y, S = _recenter(X, y, S, C, Avec, b, tol_feas)
        X = _purify(X, S, Avec, b, tol_feas)
    return finish(status, it)


def _hkm_step(X, y, S, C, Avec, b, Rc):
    n, m = X.shape[0], len(b)
    rp = b - Avec @ X.ravel()
    Rd = C - (Avec.T @ y).reshape(n, n) - S
    Sinv = np.linalg.inv(S)
    Sinv = (Sinv + Sinv.T) / 2
    G = np.einsum("ab,jbc,cd->jad", Sinv, Avec.reshape(m, n, n), X)
    M = Avec @ G.reshape(m, n * n).T
    M = (M + M.T) / 2
    rhs = rp + Avec @ (X @ Rd @ Sinv).ravel() - Avec @ (Rc @ Sinv).ravel()
    dy = np.linalg.lstsq(M, rhs, rcond=None)[0]
    dS = Rd - (Avec.T @ dy).reshape(n, n)
    dX = (Rc - X @ dS) @ Sinv
    return (dX + dX.T) / 2, dy, (dS + dS.T) / 2


def _recenter(X, y, S, C, Avec, b, tol_feas, steps=8):
    """Pure centering steps at the final barrier parameter.

    Off-centre iterates have ``||XS||`` of order ``sqrt(<X, S>)``; on the
    central path ``XS = mu I``. A few Newton steps towards the central point
    shrink ``||XS||`` without moving the objective.
    """
    n = X.shape[0]
    best = (np.linalg.norm(X @ S), X, y, S)
    feas0 = np.linalg.norm(b - Avec @ X.ravel())
    for _ in range(steps):
        mu = float(np.sum(X * S)) / n
        try:
            dX, dy, dS = _hkm_step(X, y, S, C, Avec, b, mu * np.eye(n) - X @ S)
        except np.linalg.LinAlgError:
            break
        a = min(1.0, 0.95 * _max_step(X, dX), 0.95 * _max_step(S, dS))
        if a <= 0:
            break
        X, y, S = X + a * dX, y + a * dy, S + a * dS
        X, S = (X + X.T) / 2, (S + S.T) / 2
        score = np.linalg.norm(X @ S)
        feas = np.linalg.norm(b - Avec @ X.ravel())
        if score < best[0] and feas <= max(feas0, tol_feas * 1e-2 * (1 + np.linalg.norm(b))):
            best = (score, X, y, S)
    return best[1], best[2], best[3]


def _purify(X, S, Avec, b, tol_feas, thresh=1e-6):
    """Project ``X`` onto the face complementary to the range of ``S``.

    Interior-point iterates are only approximately complementary; when the
    spectrum of ``S`` separates cleanly, restricting ``X`` to the null space
    of ``S`` gives a much smaller ``||X S||``. Two candidates are tried: the
    plain projection and one with a least-norm constraint correction
    (small singular values truncated). A candidate is kept only if it is
    psd, feasible to within ``tol_feas / 10`` and more complementary.
    """
    n = X.shape[0]
    w, V = np.linalg.eigh(S)
    W = V[:, w <= thresh * max(1.0, w[-1])]
    k = W.shape[1]
    if k in (0, n):
        return X
    mats = Avec.reshape(-1, n, n)
    T, iu = _svec_rows(W, mats)
    Z0 = W.T @ X @ W
    resid = b - Avec @ (W @ Z0 @ W.T).ravel()
    d, *_ = np.linalg.lstsq(T, resid, rcond=1e-10)
    budget = max(np.linalg.norm(b - Avec @ X.ravel()), tol_feas * 0.1 * (1 + np.linalg.norm(b)))
    best, score = X, np.linalg.norm(X @ S)
    for Z in (Z0, Z0 + _smat(d, iu, k)):
        Z = (Z + Z.T) / 2
        if np.linalg.eigvalsh(Z)[0] < -1e-12 * max(1.0, np.abs(Z).max()):
            continue
        Xp = W @ Z @ W.T
        Xp = (Xp + Xp.T) / 2
        if np.linalg.norm(b - Avec @ Xp.ravel()) > budget:
            continue
        s = np.linalg.norm(Xp @ S)
        if s < score:
            best, score = Xp, s
    return best


# ---------------------------------------------------------------------------
# completion-flavoured programs


def completion_constraints(a: PartialMatrix):
    """``<E_ij, X> = a_ij`` for every ``ij`` in ``V ∪ E`` (sorted keys)."""
    n = a.n
    keys = a.keys()
    return keys, [unit_matrix(n, i, j) for i, j in keys], np.array([a.values[k] for k in keys])


def _kernel_basis(a: PartialMatrix, tol: float) -> np.ndarray:
    """Vectors every psd completion must annihilate (from singular clique blocks)."""
    import networkx as nx

    vecs = []
    for clique in nx.find_cliques(a.graph.to_networkx()):
        clique = sorted(clique)
        w, V = np.linalg.eigh(a.block(clique))
        scale = max(1.0, w[-1])
        for lam, v in zip(w, V.T):
            if lam <= tol * scale:
                full = np.zeros(a.n)
                full[clique] = v
                vecs.append(full)
    if not vecs:
        return np.zeros((a.n, 0))
    U, s, _ = np.linalg.svd(np.array(vecs).T, full_matrices=False)
    return U[:, s > 1e-10 * s[0]]


def _face_solve(a: PartialMatrix, tol_feas, tol_gap, max_iters):
    """Zero-objective solve on the face cut out by singular clique blocks."""
    n = a.n
    N = _kernel_basis(a, tol=1e-10)
    W = sla.null_space(N.T) if N.shape[1] else np.eye(n)
    keys, mats, b = completion_constraints(a)
    if W.shape[1] == 0:
        return np.zeros((n, n)), None
    red = [W.T @ E @ W for E in mats]
    k = W.shape[1]
    problem = SdpProblem(np.zeros((k, k)), red, b, sense="min")
    sol = sdp_solve(problem, tol_gap=tol_gap, tol_feas=min(tol_feas, 1e-9), max_iters=max_iters or 200)
    w, V = np.linalg.eigh(sol.X)
    Z = (V * np.maximum(w, 0)) @ V.T
    return W @ Z @ W.T, sol


def psd_completion_feasible(
    G: Graph,
    a: PartialMatrix,
    tol_feas: float | None = None,
    tol_gap: float | None = None,
    max_iters: int | None = None,
) -> np.ndarray:
    """A psd completion of ``a``, as well-conditioned as the data allow.

    Singular fully specified cliques force kernel vectors on every
    completion; those are factored out first (one facial-reduction step).
    On the remaining face the solver runs with a zero objective, whose
    central path is the maximum-determinant completion. If the data have
    no strictly feasible point even there, the diagonal is shifted by a
    small ``eps``, the shifted problem is solved and ``eps I`` is taken
    back off (negative eigenvalues clipped). Raises
    :class:`InfeasibleDataError` when no psd completion is found.
    """
    cfg = config.DEFAULT
    tol_feas = cfg.tol_feas if tol_feas is None else tol_feas
    if a.graph != G:
        raise ValueError("partial matrix lives on a different graph")
    bad = a.clique_violations(tol=cfg.tol_rank)
    if bad:
        clique, lam = bad[0]
        raise InfeasibleDataError(f"specified block on {clique} is not psd (lambda_min = {lam:.3e})")
    scale = 1 + max(abs(v) for v in a.values.values())
    limit = tol_feas * scale

    def residual(X):
        return max(abs(X[i, j] - v) for (i, j), v in a.items())

    X, sol = _face_solve(a, tol_feas, tol_gap, max_iters)
    if sol is not None and sol.status == "primal_infeasible":
        raise InfeasibleDataError("no psd completion exists (dual certificate found)")
    status = "optimal" if sol is None else sol.status
    if residual(X) > limit:
        for eps in (1e-9 * scale, 1e-8 * scale, 1e-7 * scale):
            shifted = a.map_values(lambda k, v: v + eps if k[0] == k[1] else v)
            Xs, sol = _face_solve(shifted, tol_feas, tol_gap, max_iters)
            if sol is not None and sol.status == "primal_infeasible":
                raise InfeasibleDataError("no psd completion exists (dual certificate found)")
            w, V = np.linalg.eigh(Xs - eps * np.eye(G.n))
            Xs = (V * np.maximum(w, 0)) @ V.T
            log.debug("shifted completion eps=%.1e status=%s residual=%.3e", eps, sol and sol.status, residual(Xs))
            if residual(Xs) <= limit:
                X = Xs
                break
    X = as_symmetric(X, check=False)
    resid = residual(X)
    if resid > limit:
        if status in ("optimal", "primal_infeasible"):
            raise InfeasibleDataError(f"no psd completion found (entry residual {resid:.3e})")
        raise NumericalError(
            f"feasibility solve ended with status {status} (entry residual {resid:.3e})",
            {"status": status, "residual": resid},
        )
    return X


# ---------------------------------------------------------------------------
# stretching


@dataclass
class StressCertificate:
    """Dual certificate of the stretching program.

    ``omega`` is the stress matrix ``sum_ij w_ij E_ij - E_{i0 j0}``.
    ``coefficients`` holds the ``w_ij`` as coefficients of ``E_ij`` (so the
    stretched pair carries ``-1``); ``stress(i, j)`` reads entries of
    ``omega`` (the stretched pair reads ``-1/2``).
    """

    e0: tuple
    omega: np.ndarray
    coefficients: dict
    complementarity: float

    def stress(self, i: int, j: int) -> float:
        return float(self.omega[i, j])

    def stresses(self) -> dict:
        keys = sorted(self.coefficients)
        return {k: float(self.omega[k]) for k in keys}

    def to_dict(self) -> dict:
        return {
            "e0": list(self.e0),
            "omega": self.omega.tolist(),
            "stresses": [{"i": i, "j": j, "w": w} for (i, j), w in self.stresses().items()],
            "complementarity": self.complementarity,
        }


class StretchResult(NamedTuple):
    solution: SdpSolution
    certificate: StressCertificate
    points: np.ndarray


def suggest_stretch_pair(G: Graph):
    """Non-edge maximizing ``min(deg i0, deg j0)``; ties go to the smallest pair."""
    pairs = G.non_edges()
    if not pairs:
        return None
    return max(pairs, key=lambda e: (min(G.degree(e[0]), G.degree(e[1])), -e[0], -e[1]))


def _stretch_once(G, a, e0, tol_gap, tol_feas, max_iters):
    keys, mats, b = completion_constraints(a)
    problem = SdpProblem(unit_matrix(G.n, *e0), mats, b, sense="max")
    return problem, keys, sdp_solve(problem, tol_gap=tol_gap, tol_feas=tol_feas, max_iters=max_iters)


def stretch(
    G: Graph,
    a: PartialMatrix,
    e0,
    regularize: bool = True,
    regularize_eps: float | None = None,
    tol_gap: float | None = None,
    tol_feas: float | None = None,
    max_iters: int | None = None,
) -> StretchResult:
    """Maximize the entry at the non-edge ``e0`` over all psd completions of ``a``.

    Returns the primal solution, the stress certificate read off the dual
    slack, and a Gram factorization of the optimum. If the plain solve does
    not converge (data without a positive definite completion) and
    ``regularize`` is set, the diagonal is raised by ``eps``, ``eps/10``,
    ``eps/100`` in turn and the last stage is returned, its ``eps`` stored
    in ``solution.regularization``.
    """
    cfg = config.DEFAULT
    tol_gap = cfg.tol_gap if tol_gap is None else tol_gap
    tol_feas = cfg.tol_feas if tol_feas is None else tol_feas
    max_iters = max(cfg.max_iters, 100) if max_iters is None else max_iters
    eps = cfg.regularize_eps if regularize_eps is None else regularize_eps
    i0, j0 = sorted(int(v) for v in e0)
    if i0 == j0 or not (0 <= i0 < G.n and 0 <= j0 < G.n):
        raise InvalidStretchError(f"invalid pair {e0}")
    if G.has_edge(i0, j0):
        raise InvalidStretchError(f"({i0}, {j0}) is an edge; only non-edges can be stretched")
    if a.graph != G:
        raise ValueError("partial matrix lives on a different graph")
    problem, keys, sol = _stretch_once(G, a, (i0, j0), tol_gap, tol_feas, max_iters)
    scale = 1 + max(abs(v) for v in a.values.values())
    if not sol.ok or np.max(np.abs(sol.y)) > 1e6 * scale:
        if sol.status == "primal_infeasible":
            raise InfeasibleDataError("partial matrix has no psd completion")
        if not regularize:
            raise NumericalError(f"stretch solve ended with status {sol.status}", {"solution": sol})
        for stage in range(3):
            e = eps * 10.0**-stage
            a_reg = a.map_values(lambda k, v: v + e if k[0] == k[1] else v)
            problem, keys, trial = _stretch_once(G, a_reg, (i0, j0), tol_gap, tol_feas, max_iters)
            if not trial.ok:
                break
            sol = trial
            sol.regularization = e
        if not sol.ok:
            raise NumericalError(f"regularized stretch solve ended with status {sol.status}", {"solution": sol})
    omega = sol.S
    coeffs = {k: -float(yj) for k, yj in zip(keys, sol.y)}
    coeffs[(i0, j0)] = -1.0
    cert = StressCertificate((i0, j0), omega, coeffs, float(np.linalg.norm(sol.X @ omega)))
    return StretchResult(sol, cert, gram_factor(sol.X, tol_rel=cfg.tol_rank))


def equilibrium_residual(P, cert: StressCertificate, G: Graph) -> float:
    """``max_i || omega_ii p_i + sum_j omega_ij p_j ||`` over the support of ``omega``."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != G.n or cert.omega.shape != (G.n, G.n):
        raise ValueError("configuration, certificate and graph dimensions disagree")
    return float(np.max(np.linalg.norm(cert.omega @ P, axis=1), initial=0.0))


# ---------------------------------------------------------------------------
# rank reduction


@dataclass
class ReducedSolution:
    X: np.ndarray
    rank: int
    constraint_count: int
    bound_met: bool
    stalled: bool
    steps: int

    def to_dict(self) -> dict:
        return {
            "X": self.X.tolist(),
            "rank": self.rank,
            "constraint_count": self.constraint_count,
            "bound_met": self.bound_met,
            "stalled": self.stalled,
            "steps": self.steps,
        }


def _svec_rows(V, mats):
    r = V.shape[1]
    iu = np.triu_indices(r)
    weight = np.where(iu[0] == iu[1], 1.0, 2.0)
    return np.array([(V.T @ A @ V)[iu] * weight for A in mats]), iu


def _smat(vec, iu, r):
    D = np.zeros((r, r))
    D[iu] = vec
    return D + np.triu(D, 1).T


def rank_reduce(
    p: SdpProblem,
    X,
    preserve_objective: bool = False,
    tol_rank: float | None = None,
    tol_feas: float | None = None,
) -> ReducedSolution:
    """Move a feasible ``X`` to a face of rank ``r`` with ``r(r+1)/2 <= m``.

    ``m`` counts the constraints, plus one when ``preserve_objective`` pins
    ``<C, X>``. Each step picks a symmetric direction in the null space of
    the constraints restricted to the range of ``X`` and walks to the
    boundary of the psd cone, which drops the rank.
    """
    cfg = config.DEFAULT
    tol_rank = cfg.tol_rank if tol_rank is None else tol_rank
    tol_feas = cfg.tol_feas if tol_feas is None else tol_feas
    X = as_symmetric(X)
    mats = list(p.A) + ([p.C] if preserve_objective else [])
    target = np.concatenate([p.b, [p.objective(X)]]) if preserve_objective else p.b.copy()
    drift0 = np.max(np.abs(np.array([np.sum(A * X) for A in mats]) - target))
    if drift0 > tol_feas * (1 + np.max(np.abs(target))):
        raise ValueError(f"starting point is infeasible (max constraint violation {drift0:.3e})")
    m = len(mats)
    V = gram_factor(X, tol_rel=tol_rank)
    stalled, steps = False, 0
    while True:
        r = V.shape[1]
        if r * (r + 1) // 2 <= m or r == 0:
            break
        T, iu = _svec_rows(V, mats)
        null = sla.null_space(T)
        if null.shape[1] == 0:
            stalled = True
            break
        D = _smat(null[:, 0], iu, r)
        lam = np.linalg.eigvalsh(D)
        if lam[-1] <= 0:
            D, lam = -D, -lam[::-1]
        w, Q = np.linalg.eigh(np.eye(r) - D / lam[-1])
        keep = w > 1e-10 * max(1.0, w[-1])
        V_new = (V @ Q[:, keep]) * np.sqrt(w[keep])
        steps += 1
        if V_new.shape[1] >= r:
            stalled = True
            break
        V = V_new
    V = _polish(V, mats, target)
    Xr = V @ V.T
    r = numeric_rank(Xr, tol_rank)
    return ReducedSolution(as_symmetric(Xr, check=False), r, m, r * (r + 1) // 2 <= m, stalled, steps)


def _polish(V, mats, target):
    """Least-norm correction inside the range of ``V`` that restores the constraints."""
    r = V.shape[1]
    if r == 0:
        return V
    resid = target - np.array([np.sum(A * (V @ V.T)) for A in mats])
    if np.max(np.abs(resid)) == 0:
        return V
    T, iu = _svec_rows(V, mats)
    d, *_ = np.linalg.lstsq(T, resid, rcond=None)
    M = np.eye(r) + _smat(d, iu, r)
    w, Q = np.linalg.eigh(M)
    if w[0] <= 0:
        return V
    V2 = (V @ Q) * np.sqrt(w)
    new = target - np.array([np.sum(A * (V2 @ V2.T)) for A in mats])
    return V2 if np.max(np.abs(new)) < np.max(np.abs(resid)) else V


# ---------------------------------------------------------------------------
# max-cut


def laplacian(G: Graph) -> np.ndarray:
    L = np.zeros((G.n, G.n))
    for i, j in G.edges:
        L[i, i] += 1
        L[j, j] += 1
        L[i, j] -= 1
        L[j, i] -= 1
    return L


def maxcut_relaxation(G: Graph) -> SdpProblem:
    """``max (1/4) <L, X>`` subject to ``X_ii = 1``."""
    return SdpProblem(laplacian(G) / 4, [unit_matrix(G.n, i, i) for i in range(G.n)], np.ones(G.n), "max")


def aggregated_sparsity(p: SdpProblem) -> Graph:
    """Union of the off-diagonal supports of the objective and the constraints."""
    support = np.zeros((p.n, p.n), dtype=bool)
    for M in [p.C] + list(p.A):
        support |= M != 0
    return Graph(p.n, [(i, j) for i in range(p.n) for j in range(i + 1, p.n) if support[i, j]])
