"""Decide whether a norm is Euclidean, with a checkable witness when it is not.

For a non-Euclidean norm the pipeline builds a symmetric operator ``B``
whose quadratic-form norm is strictly below its operator norm:

1. Fit the minimum-volume origin-centred ellipsoid around the unit ball and
   map it to the Euclidean ball; call the image of the unit ball ``K'``.
2. Among contact points (on both ``K'`` and the sphere) find ``u, v`` whose
   normalized midpoint leaves ``K'``.
3. With ``e1, e2`` the normalized ``u + v`` and ``u - v`` and ``kappa`` the
   largest ``|e1^T x|`` over ``K'``, the operator
   ``(1/kappa^2) e1 e1^T - e2 e2^T`` has ``||Q|| <= 1 < <B u, v>``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .normed_space import (NormSpec, dual_norm_eval, norm_eval,
                           parallelogram_residual, sample_unit_sphere)
from .quadnorms import SymmetricOperator, operator_norm, quadratic_form_norm
from .verdict import Verdict, jsonable

log = logging.getLogger(__name__)

EUCLIDEAN = "EUCLIDEAN"
NON_EUCLIDEAN = "NON_EUCLIDEAN"
INCONCLUSIVE = "INCONCLUSIVE"


class CertificationError(ValueError):
    pass


@dataclass
class CertifyConfig:
    euclid_tol: float = 1e-9
    pairs: int = 1000
    samples: int = 4096
    mvee_tol: float = 1e-7
    margin: float = 1e-3
    seed: int = 0
    max_iter: int = 200_000

    def to_dict(self):
        return dict(self.__dict__)


# -- minimum-volume enclosing ellipsoid --------------------------------------


def _greedy_core(P):
    """Indices of ``n`` points spanning R^n, chosen by largest residual norm."""
    n = P.shape[1]
    R = P.copy()
    idx = []
    for _ in range(n):
        r = np.einsum("ij,ij->i", R, R)
        i = int(np.argmax(r))
        if r[i] <= 1e-20:
            raise CertificationError("point set does not span R^n")
        idx.append(i)
        q = R[i] / np.sqrt(r[i])
        R = R - np.outer(R @ q, q)
    return idx


def mvee_origin(points, tol=1e-7, max_iter=200_000):
    """Minimum-volume origin-centred ellipsoid ``{x : x^T A x <= 1}`` around ``points``.

    Solves the D-optimal design problem ``max log det sum_i u_i p_i p_i^T``
    over the simplex by Frank-Wolfe with away steps (Khachiyan's step with
    the Todd-Yildirim drop rule).  Stops when ``max_i g_i <= n (1 + tol)``
    and ``min_{u_i > 0} g_i >= n (1 - tol)``, where ``g_i = p_i^T M^{-1} p_i``.

    Returns ``(A, contact_indices, residual)``.  ``A`` is scaled so that the
    largest ``p^T A p`` is exactly 1, so every input point is enclosed.
    Contacts are the points with ``p^T A p >= 1 - 10 tol``.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or len(P) == 0:
        raise CertificationError("need a non-empty (m, n) point array")
    m, n = P.shape
    if np.linalg.matrix_rank(P) < n:
        raise CertificationError("degenerate point set: points do not span R^n")

    u = np.zeros(m)
    u[_greedy_core(P)] = 1.0 / n

    def full_g(u):
        Minv = np.linalg.inv(P.T @ (u[:, None] * P))
        return np.einsum("ij,jk,ik->i", P, Minv, P), Minv

    g, Minv = full_g(u)
    it = 0
    for it in range(max_iter):
        if it % 500 == 499:
            g, Minv = full_g(u)
        j = int(np.argmax(g))
        support = u > 0
        k = int(np.flatnonzero(support)[np.argmin(g[support])])
        up, down = g[j] / n - 1, 1 - g[k] / n
        if up <= tol and down <= tol:
            break
        if up >= down:
            # move weight toward p_j
            lam = (g[j] / n - 1) / (g[j] - 1)
            p, a, c = P[j], 1 - lam, lam / (1 - lam)
            u *= 1 - lam
            u[j] += lam
        else:
            # move weight away from p_k, dropping it if the step hits the boundary
            gk = g[k]
            lam_max = u[k] / (1 - u[k])
            lam = min((1 - gk / n) / (gk - 1), lam_max) if gk > 1 else lam_max
            p, a, c = P[k], 1 + lam, -lam / (1 + lam)
            u *= 1 + lam
            u[k] -= lam
            if lam == lam_max:
                u[k] = 0.0
        # M' = a (M + c p p^T); Sherman-Morrison update of g and M^{-1}
        w = P @ (Minv @ p)
        gp = p @ Minv @ p
        denom = 1 + c * gp
        g = (g - c * w * w / denom) / a
        mp = Minv @ p
        Minv = (Minv - c * np.outer(mp, mp) / denom) / a
    g, Minv = full_g(u)
    residual = max(g.max() / n - 1, 1 - g[u > 0].min() / n, 0.0)
    A = Minv / g.max()
    A = 0.5 * (A + A.T)
    contacts = np.flatnonzero(np.einsum("ij,jk,ik->i", P, A, P) >= 1 - 10 * tol)
    log.debug("mvee: %d iterations, residual %.3g, %d contacts", it, residual, len(contacts))
    return A, contacts, float(residual)


# -- ellipsoid model ---------------------------------------------------------


@dataclass
class EllipsoidModel:
    A: np.ndarray
    map: np.ndarray
    contact_points: np.ndarray
    residual: float
    spec: NormSpec
    tol: float
    sample_points: np.ndarray = field(repr=False, default=None)
    containment_excess: float = 0.0

    @property
    def mapped_spec(self):
        """The norm of ``K' = map K``: ``x -> ||map^{-1} x||``."""
        return NormSpec.transformed(self.spec, self.map)

    def to_dict(self):
        return {"A": self.A, "map": self.map, "contact_points": self.contact_points,
                "residual": self.residual, "containment_excess": self.containment_excess,
                "sample_count": len(self.sample_points), "tol": self.tol}


def _sym_sqrt(A):
    w, V = np.linalg.eigh(A)
    return (V * np.sqrt(w)) @ V.T


def lowner_transform(spec, samples=4096, seed=0, tol=1e-7, max_iter=200_000, rounds=8):
    """Fit the enclosing ellipsoid of the unit ball and map it to the Euclidean ball.

    The map is the symmetric square root of the ellipsoid matrix.  Sphere
    samples drawn in standard coordinates can miss the thin directions of
    an elongated ball, so after each fit fresh directions are drawn in the
    fitted ellipsoid's own frame; if any of them leaves the mapped ball by
    more than ``100 tol`` they join the sample and the fit is repeated (at
    most ``rounds`` times).  Contact points are returned in mapped
    coordinates, normalized onto the sphere.
    """
    if spec.dim < 2:
        raise CertificationError("need dim >= 2")
    n = spec.dim
    S = sample_unit_sphere(spec, samples, seed)
    S = np.vstack([S, -S])
    rng = np.random.default_rng([seed, 1])
    excess = np.inf
    for _ in range(rounds):
        A, idx, residual = mvee_origin(S, tol, max_iter)
        L = _sym_sqrt(A)
        X = rng.standard_normal((samples, n)) @ np.linalg.inv(L).T
        X /= norm_eval(spec, X)[:, None]
        excess = float(np.linalg.norm(X @ L.T, axis=1).max() - 1)
        if excess <= 100 * tol:
            break
        S = np.vstack([S, X, -X])
    else:
        log.warning("ellipsoid fit still leaves %.3g outside the ball", excess)
    C = S[idx] @ L.T
    C = C / np.linalg.norm(C, axis=1, keepdims=True)
    C = _dedupe(C)
    return EllipsoidModel(A, L, C, residual, spec, tol, S, excess)


def _dedupe(C, atol=1e-9):
    keep = np.empty((0, C.shape[1]))
    for c in C:
        if not len(keep) or np.abs(keep - c).max(axis=1).min() > atol:
            keep = np.vstack([keep, c])
    return keep


# -- witness pair ----------------------------------------------------------


def _midpoint_norms(C, spec_prime):
    I, J = np.triu_indices(len(C), k=1)
    # drop collinear pairs
    ok = np.abs(np.einsum("ij,ij->i", C[I], C[J])) < 1 - 1e-9
    I, J = I[ok], J[ok]
    pairs = list(zip(I.tolist(), J.tolist()))
    if not pairs:
        return pairs, np.empty(0)
    Mid = C[I] + C[J]
    Mid /= np.linalg.norm(Mid, axis=1, keepdims=True)
    return pairs, norm_eval(spec_prime, Mid)


def _polytope_vertices(C, tol=1e-9):
    """Vertices of ``{x : x^T c <= 1 for every contact c}`` by enumeration."""
    n = C.shape[1]
    out = []
    for rows in itertools.combinations(range(len(C)), n):
        Y = C[list(rows)]
        if abs(np.linalg.det(Y)) < 1e-12:
            continue
        x = np.linalg.solve(Y, np.ones(n))
        if np.all(C @ x <= 1 + tol):
            out.append(x)
    return np.array(out)


def find_witness_pair(model, spec_prime=None, margin=1e-3, diagnostics=None):
    """Contact points ``u, v`` whose normalized midpoint has ``||.||' >= 1 + margin``.

    Searches all non-collinear contact pairs and returns the one with the
    largest midpoint norm (first in index order on ties).  If none clears
    the margin, falls back to maximizing ``||x||_2`` over the polytope cut
    out by the contacts and retries with the contacts active at the
    maximizer.  Returns ``None`` when no pair qualifies.
    """
    C = model.contact_points
    if len(C) == 0:
        raise CertificationError("empty contact set")
    spec_prime = spec_prime or model.mapped_spec
    diag = diagnostics if diagnostics is not None else {}
    pairs, vals = _midpoint_norms(C, spec_prime)
    diag["contact_count"] = len(C)
    diag["best_midpoint_norm"] = float(vals.max()) if len(vals) else None
    if len(vals) and vals.max() >= 1 + margin:
        i, j = pairs[int(np.argmax(vals))]
        return C[i], C[j]
    if spec_prime.dim <= 4 and len(C) <= 64:
        V = _polytope_vertices(C)
        if len(V):
            xbar = V[int(np.argmax(np.einsum("ij,ij->i", V, V)))]
            diag["polytope_max_norm"] = float(np.linalg.norm(xbar))
            active = C[np.abs(C @ xbar - 1) <= 1e-7]
            pairs, vals = _midpoint_norms(active, spec_prime)
            if len(vals) and vals.max() >= 1 + margin:
                i, j = pairs[int(np.argmax(vals))]
                return active[i], active[j]
    return None


# -- witness operator --------------------------------------------------------


@dataclass
class WitnessCertificate:
    u: np.ndarray
    v: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    alpha: float
    beta: float
    kappa: float
    B_tilde: SymmetricOperator
    B: SymmetricOperator
    map: np.ndarray
    qnorm_upper: float
    opnorm_lower: float
    bilinear_uv: float
    spec: NormSpec
    tol: float
    opnorm_exact: Optional[float] = None

    @property
    def gap_ratio(self):
        return self.opnorm_lower / self.qnorm_upper

    def to_dict(self):
        return jsonable({
            "u": self.u, "v": self.v, "e1": self.e1, "e2": self.e2,
            "alpha": self.alpha, "beta": self.beta, "kappa": self.kappa,
            "B_tilde": self.B_tilde.matrix, "B": self.B.matrix, "map": self.map,
            "qnorm_upper": self.qnorm_upper, "opnorm_lower": self.opnorm_lower,
            "opnorm_exact": self.opnorm_exact, "bilinear_uv": self.bilinear_uv,
            "gap_ratio": self.gap_ratio, "norm": self.spec.to_dict(), "tol": self.tol,
        })


def build_witness(model, spec, u, v, tol=None):
    """Rank-2 operator with ``||Q_B|| < ||B||`` from a witness pair.

    ``kappa`` is the dual norm of ``e1`` under the ``K'`` norm, evaluated
    in closed form through the map.  The certificate carries the exact
    quadratic-form norm of ``B_tilde`` (upper end of the gap) and the
    ratio ``<B_tilde u, v> / (||u||' ||v||')`` (lower end).
    """
    tol = model.tol if tol is None else tol
    sp = NormSpec.transformed(spec, model.map)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    alpha = float(np.linalg.norm(u + v))
    beta = float(np.linalg.norm(u - v))
    e1 = (u + v) / alpha
    e2 = (u - v) / beta
    kappa = float(dual_norm_eval(sp, e1))
    if not 0 < kappa < 1 - tol:
        raise CertificationError(f"kappa = {kappa!r} is not below 1 - tol; pair is not a witness")
    Bt = SymmetricOperator(np.outer(e1, e1) / kappa ** 2 - np.outer(e2, e2))
    buv = float(Bt.bilinear(u, v))
    predicted = (1 - kappa ** 2) / kappa ** 2 * alpha ** 2 / 4 + 1
    if not np.isclose(buv, predicted, rtol=1e-9, atol=1e-12) or buv <= 1:
        raise CertificationError(f"<B u, v> = {buv!r} disagrees with closed form {predicted!r}")
    qn = quadratic_form_norm(Bt, sp)
    if not qn.exact:
        raise CertificationError("quadratic-form norm not computable exactly at this size")
    op_lower = buv / (float(norm_eval(sp, u)) * float(norm_eval(sp, v)))
    op = operator_norm(Bt, sp)
    Lm = model.map
    B = SymmetricOperator(Lm.T @ Bt.matrix @ Lm)
    return WitnessCertificate(
        u, v, e1, e2, alpha, beta, kappa, Bt, B, Lm, qn.value, op_lower, buv, spec, tol,
        opnorm_exact=op.value if op.exact else None,
    )


def verify_certificate(cert, spec=None, tol=None):
    """Re-check a certificate from its raw fields."""
    spec = spec or cert.spec
    tol = cert.tol if tol is None else tol
    L = np.asarray(cert.map, dtype=float)
    sp = NormSpec.transformed(spec, L)
    u, v = np.asarray(cert.u), np.asarray(cert.v)
    nu_, nv_ = float(norm_eval(sp, u)), float(norm_eval(sp, v))
    alpha, beta = np.linalg.norm(u + v), np.linalg.norm(u - v)
    e1, e2 = (u + v) / alpha, (u - v) / beta
    kappa = float(dual_norm_eval(sp, e1))
    Bt = np.outer(e1, e1) / kappa ** 2 - np.outer(e2, e2)
    buv = float(v @ Bt @ u)
    qn_t = quadratic_form_norm(Bt, sp)
    B = L.T @ Bt @ L
    qn = quadratic_form_norm(B, spec)
    x, y = np.linalg.solve(L, u), np.linalg.solve(L, v)
    bxy = float(y @ B @ x)
    nx, ny = float(norm_eval(spec, x)), float(norm_eval(spec, y))
    checks = {
        "u_in_ball": nu_ <= 1 + 10 * tol,
        "v_in_ball": nv_ <= 1 + 10 * tol,
        "unit_euclidean": abs(np.linalg.norm(u) - 1) <= 1e-12 and abs(np.linalg.norm(v) - 1) <= 1e-12,
        "orthonormal": abs(e1 @ e2) <= 1e-12,
        "parallelogram": abs(alpha ** 2 / 4 + beta ** 2 / 4 - 1) <= 1e-12,
        "kappa_range": 0 < kappa < 1,
        "kappa_matches": np.isclose(kappa, cert.kappa, rtol=1e-12, atol=0),
        "B_tilde_matches": np.allclose(Bt, cert.B_tilde.matrix, rtol=1e-10, atol=1e-12),
        "bilinear_formula": np.isclose(buv, (1 - kappa ** 2) / kappa ** 2 * alpha ** 2 / 4 + 1,
                                       rtol=1e-9),
        "qnorm_matches": np.isclose(qn_t.value, cert.qnorm_upper, rtol=1e-9),
        "qnorm_at_most_one": qn_t.value <= 1 + 10 * tol,
        "pullback_qnorm": np.isclose(qn.value, qn_t.value, rtol=1e-8),
        "pullback_gap": bxy / (nx * ny) > qn.value,
        "gap": qn_t.value < buv / (nu_ * nv_),
    }
    details = {"kappa": kappa, "qnorm": qn_t.value, "bilinear_uv": buv,
               "opnorm_lower": buv / (nu_ * nv_), "pullback_qnorm": qn.value,
               "pullback_ratio": bxy / (nx * ny)}
    return Verdict.from_checks({k: bool(c) for k, c in checks.items()}, details)


# -- top level -------------------------------------------------------------


@dataclass
class Certification:
    verdict: str
    residual: float
    certificate: Optional[WitnessCertificate] = None
    model: Optional[EllipsoidModel] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return jsonable({
            "verdict": self.verdict,
            "parallelogram_residual": self.residual,
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "ellipsoid": self.model.to_dict() if self.model else None,
            "diagnostics": self.diagnostics,
        })


def max_parallelogram_residual(spec, pairs=1000, seed=0):
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((pairs, spec.dim))
    V = rng.standard_normal((pairs, spec.dim))
    U /= norm_eval(spec, U)[:, None]
    V /= norm_eval(spec, V)[:, None]
    return float(parallelogram_residual(spec, U, V).max())


def certify(spec, config=None):
    """EUCLIDEAN, NON_EUCLIDEAN (with a certificate) or INCONCLUSIVE.

    A small parallelogram residual over seeded unit pairs short-circuits to
    EUCLIDEAN.  Otherwise the witness pipeline runs; if it cannot produce a
    certificate the verdict is INCONCLUSIVE, never EUCLIDEAN.
    """
    cfg = config or CertifyConfig()
    if spec.dim < 2:
        raise CertificationError("need dim >= 2")
    res = max_parallelogram_residual(spec, cfg.pairs, cfg.seed)
    diag = {"config": cfg.to_dict()}
    if res <= cfg.euclid_tol:
        return Certification(EUCLIDEAN, res, diagnostics=diag)
    try:
        model = lowner_transform(spec, cfg.samples, cfg.seed, cfg.mvee_tol, cfg.max_iter)
    except CertificationError as exc:
        diag["error"] = str(exc)
        return Certification(INCONCLUSIVE, res, diagnostics=diag)
    diag["mvee_residual"] = model.residual
    pair = find_witness_pair(model, margin=cfg.margin, diagnostics=diag)
    if pair is None:
        diag["error"] = "no contact pair clears the margin"
        return Certification(INCONCLUSIVE, res, model=model, diagnostics=diag)
    try:
        cert = build_witness(model, spec, *pair)
    except CertificationError as exc:
        diag["error"] = str(exc)
        return Certification(INCONCLUSIVE, res, model=model, diagnostics=diag)
    check = verify_certificate(cert, spec)
    diag["reverification"] = check.to_dict()
    if not check.passed:
        diag["error"] = "certificate failed re-verification"
        return Certification(INCONCLUSIVE, res, cert, model, diag)
    return Certification(NON_EUCLIDEAN, res, cert, model, diag)
