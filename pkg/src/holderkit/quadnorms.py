"""Operator norms ``||B||`` and quadratic-form norms ``||Q_B||``.

For a symmetric matrix ``B`` and a norm on R^n::

    ||B||   = max{ y^T B x : ||x|| = ||y|| = 1 }
    ||Q_B|| = max{ |x^T B x| : ||x|| = 1 }

Euclidean kinds are solved spectrally.  Under ``l1`` the operator norm is
the largest entry.  Under ``linf`` the bilinear maximum is attained at cube
vertices, so the operator norm enumerates sign vectors.  Quadratic-form
norms under ``l1``/``linf`` are maxima of an indefinite quadratic over a
polytope; they are computed exactly by enumerating faces and solving for the
stationary point of the quadratic restricted to each face.  Both enumerations
are exponential and capped; above the cap a sampled lower bound is returned
with ``exact=False``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .normed_space import sample_unit_sphere
from .verdict import Verdict

LINF_OPNORM_CAP = 14
FACE_CAP = 10
FEASIBILITY_TOL = 1e-9
SANDWICH_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SymmetricOperator:
    """Self-adjoint ``B`` stored as a dense symmetric matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"operator must be a square matrix, got shape {M.shape}")
        scale = max(1.0, float(np.abs(M).max(initial=0.0)))
        if not np.allclose(M, M.T, rtol=0, atol=1e-12 * scale):
            raise ValueError("operator matrix is not symmetric")
        M = 0.5 * (M + M.T)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def bilinear(self, x, y):
        return np.einsum("...i,ij,...j->...", y, self.matrix, x)

    def quadratic(self, x):
        return self.bilinear(x, x)

    def is_psd(self, tol=1e-12):
        ev = np.linalg.eigvalsh(self.matrix)
        return bool(ev.min() >= -tol * max(1.0, np.abs(ev).max()))

    def to_dict(self):
        return {"matrix": self.matrix.tolist()}


def as_operator(B):
    return B if isinstance(B, SymmetricOperator) else SymmetricOperator(B)


class NormValue(NamedTuple):
    value: float
    witness: object
    exact: bool


def _check(B, spec):
    B = as_operator(B)
    if B.dim != spec.dim:
        raise ValueError(f"operator is {B.dim}x{B.dim} but norm has dim {spec.dim}")
    return B


def _whitening(spec):
    """``W`` with ``||W^T x||_2 = ||x||`` for the Euclidean kinds: x = W^{-T} u."""
    G = spec.gram()
    return np.linalg.cholesky(G)


def _spectral(B, spec):
    # x = R^{-T} u turns ||x||^2 = x^T G x into u^T u, where G = R R^T
    R = _whitening(spec)
    Rinv = np.linalg.inv(R)
    C = Rinv @ B.matrix @ Rinv.T
    C = 0.5 * (C + C.T)
    w, V = np.linalg.eigh(C)
    i = int(np.argmax(np.abs(w)))
    x = Rinv.T @ V[:, i]
    return float(abs(w[i])), x, float(np.sign(w[i]) or 1.0)


def operator_norm(B, spec, cap=LINF_OPNORM_CAP, samples=20_000, seed=0):
    """``||B||`` with a witness pair ``(x, y)`` achieving it.

    Returns a :class:`NormValue`; ``exact`` is False only for ``linf`` above
    the enumeration cap, where the value is a sampled lower bound.
    """
    B = _check(B, spec)
    M = B.matrix
    n = spec.dim
    if spec.kind == "transformed":
        A = spec.map
        inner = operator_norm(A.T @ M @ A, spec.base, cap, samples, seed)
        x, y = inner.witness
        return NormValue(inner.value, (A @ x, A @ y), inner.exact)
    if spec.is_euclidean_kind:
        val, x, s = _spectral(B, spec)
        return NormValue(val, (x, s * x), True)
    if spec.kind == "l1":
        i, j = np.unravel_index(int(np.argmax(np.abs(M))), M.shape)
        x = np.zeros(n)
        y = np.zeros(n)
        x[j] = 1.0
        y[i] = 1.0 if M[i, j] >= 0 else -1.0
        return NormValue(float(abs(M[i, j])), (x, y), True)
    # linf: max over sign vectors s of ||M s||_1, with y = sign(M s)
    if n <= cap:
        S = np.array(list(itertools.product((1.0, -1.0), repeat=n - 1)))
        S = np.hstack([np.ones((len(S), 1)), S]) if n > 1 else np.ones((1, 1))
        exact = True
    else:
        rng = np.random.default_rng(seed)
        S = np.where(rng.random((samples, n)) < 0.5, -1.0, 1.0)
        for _ in range(20):
            # alternating maximization x -> sign(M sign(M x))
            S = np.where(np.where(S @ M < 0, -1.0, 1.0) @ M < 0, -1.0, 1.0)
        exact = False
    vals = np.abs(S @ M).sum(axis=1)
    k = int(np.argmax(vals))
    x = S[k]
    y = np.where(M @ x < 0, -1.0, 1.0)
    return NormValue(float(vals[k]), (x, y), exact)


def _box_candidates(M):
    """Stationary points of ``x^T M x`` on every face of ``[-1, 1]^n``.

    A face fixes the coordinates in ``C`` to signs ``s`` and leaves ``F``
    free; its stationary point solves ``M_FF x_F = -M_FC s``.  Faces whose
    reduced matrix is singular are represented by the minimum-norm solution
    when consistent: the quadratic is constant along the null directions, so
    the face maximum is also reached on a smaller face that is enumerated
    anyway.  ``x -> -x`` symmetry halves the sign patterns.
    """
    n = M.shape[0]
    out = []
    for mask in range(2 ** n):
        F = [i for i in range(n) if mask >> i & 1]
        C = [i for i in range(n) if not mask >> i & 1]
        k = len(C)
        if k:
            S = np.array(list(itertools.product((1.0, -1.0), repeat=k - 1)))
            S = np.hstack([np.ones((len(S), 1)), S]) if k > 1 else np.ones((1, 1))
        else:
            S = np.zeros((1, 0))
        X = np.zeros((len(S), n))
        X[:, C] = S
        if F:
            MFF = M[np.ix_(F, F)]
            rhs = -(S @ M[np.ix_(C, F)])
            ev = np.linalg.eigvalsh(MFF)
            if np.abs(ev).min() > 1e-12 * max(1.0, np.abs(ev).max()):
                XF = np.linalg.solve(MFF, rhs.T).T
            else:
                XF = np.linalg.lstsq(MFF, rhs.T, rcond=None)[0].T
                consistent = np.all(np.isclose(XF @ MFF, rhs, rtol=0, atol=1e-9), axis=1)
                XF[~consistent] = np.inf
            ok = np.all(np.abs(XF) <= 1 + FEASIBILITY_TOL, axis=1)
            X = X[ok]
            X[:, F] = np.clip(XF[ok], -1.0, 1.0)
        out.append(X)
    return np.vstack(out)


def _cross_polytope_candidates(M):
    """Stationary points of ``x^T M x`` on every face of the l1 sphere.

    A face is a support ``S`` with signs ``sigma``; on it ``x = sigma * t``
    with ``t`` in the simplex.  The stationary point solves the KKT system
    ``D M_SS D t = lam 1``, ``1^T t = 1``.
    """
    n = M.shape[0]
    out = []
    for mask in range(1, 2 ** n):
        S = [i for i in range(n) if mask >> i & 1]
        k = len(S)
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=k - 1)))
        signs = np.hstack([np.ones((len(signs), 1)), signs]) if k > 1 else np.ones((1, 1))
        MSS = M[np.ix_(S, S)]
        P = len(signs)
        K = np.zeros((P, k + 1, k + 1))
        K[:, :k, :k] = signs[:, :, None] * MSS[None] * signs[:, None, :]
        K[:, :k, k] = 1.0
        K[:, k, :k] = 1.0
        rhs = np.zeros((P, k + 1))
        rhs[:, k] = 1.0
        T = np.full((P, k), np.inf)
        good = np.linalg.cond(K) < 1e12
        if good.any():
            T[good] = np.linalg.solve(K[good], rhs[good][..., None])[:, :k, 0]
        for p in np.flatnonzero(~good):
            sol, *_ = np.linalg.lstsq(K[p], rhs[p], rcond=None)
            if np.allclose(K[p] @ sol, rhs[p], rtol=0, atol=1e-9):
                T[p] = sol[:k]
        ok = np.all(np.isfinite(T) & (T >= -FEASIBILITY_TOL), axis=1)
        T = np.clip(T[ok], 0.0, None)
        T /= T.sum(axis=1, keepdims=True)
        X = np.zeros((len(T), n))
        X[:, S] = signs[ok] * T
        out.append(X)
    return np.vstack(out)


def quadratic_form_norm(B, spec, cap=FACE_CAP, samples=20_000, seed=0):
    """``||Q_B||`` with a unit witness ``x`` achieving it."""
    B = _check(B, spec)
    M = B.matrix
    n = spec.dim
    if spec.kind == "transformed":
        A = spec.map
        inner = quadratic_form_norm(A.T @ M @ A, spec.base, cap, samples, seed)
        return NormValue(inner.value, A @ inner.witness, inner.exact)
    if spec.is_euclidean_kind:
        val, x, _ = _spectral(B, spec)
        return NormValue(val, x, True)
    if n <= cap:
        X = _box_candidates(M) if spec.kind == "linf" else _cross_polytope_candidates(M)
        exact = True
    else:
        X = sample_unit_sphere(spec, samples, seed)
        exact = False
    vals = np.abs(np.einsum("ij,jk,ik->i", X, M, X))
    i = int(np.argmax(vals))
    return NormValue(float(vals[i]), X[i], exact)


def gap_report(B, spec, tol=SANDWICH_TOL):
    """Check ``||B||/2 <= ||Q_B|| <= ||B||``, with equality where it must hold.

    Equality is required when the norm is Euclidean by construction or when
    ``B`` is positive semidefinite.
    """
    B = _check(B, spec)
    op = operator_norm(B, spec)
    qn = quadratic_form_norm(B, spec)
    psd = B.is_psd()
    eucl = spec.is_euclidean_kind
    scale = max(1.0, op.value)
    checks = {
        "lower": 0.5 * op.value - tol * scale <= qn.value,
        "upper": qn.value <= op.value + tol * scale,
    }
    if eucl or psd:
        checks["equality"] = abs(op.value - qn.value) <= tol * scale
    details = {
        "opnorm": op.value,
        "qnorm": qn.value,
        "ratio": qn.value / op.value if op.value > 0 else 1.0,
        "psd": psd,
        "euclidean": eucl,
        "exact": op.exact and qn.exact,
        "opnorm_witness": op.witness,
        "qnorm_witness": qn.witness,
        "norm": spec.to_dict(),
    }
    if not (op.exact and qn.exact):
        return Verdict("INCONCLUSIVE", checks, details,
                       "enumeration cap exceeded; values are sampled lower bounds")
    return Verdict.from_checks(checks, details)


def rank2_operator(phi, psi, sign=1):
    """``phi phi^T + sign * psi psi^T`` for linearly independent ``phi, psi``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if phi.shape != psi.shape or phi.ndim != 1:
        raise ValueError("phi and psi must be vectors of equal length")
    if np.linalg.matrix_rank(np.vstack([phi, psi])) < 2:
        raise ValueError("phi and psi are linearly dependent; result would have rank < 2")
    return SymmetricOperator(np.outer(phi, phi) + sign * np.outer(psi, psi))
