"""Norms on R^n, their duals, and steepest-ascent directions.

Every norm is a :class:`NormSpec`.  Vectors and dual vectors share the same
coordinate arrays; a functional ``phi`` acts on ``h`` through the standard
pairing ``phi @ h``.  All evaluation routines broadcast over leading axes, so
``norm_eval(spec, X)`` with ``X.shape == (m, n)`` returns ``m`` norms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

KINDS = ("l1", "l2", "linf", "weighted", "transformed")

# Dual vectors are plain coordinate arrays under the standard pairing.
DualVector = np.ndarray

CLOSED_FORM_TOL = 1e-12
SAMPLED_TOL = 1e-8
MAX_CONDITION = 1e12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NormSpec:
    """A norm on R^n.

    Parameters
    ----------
    kind : {'l1', 'l2', 'linf', 'weighted', 'transformed'}
    dim : int
    weight : (n, n) array, optional
        SPD matrix ``H`` of a weighted Euclidean norm ``sqrt(x^T H x)``.
    base : NormSpec, optional
        Norm being transformed (``kind='transformed'`` only).
    map : (n, n) array, optional
        Invertible ``A`` with ``||x||' = ||A^{-1} x||_base``.

    Use the constructors :meth:`l1`, :meth:`l2`, :meth:`linf`,
    :meth:`weighted` and :meth:`transformed` rather than calling this
    directly.
    """

    kind: str
    dim: int
    weight: Optional[np.ndarray] = None
    base: Optional["NormSpec"] = None
    map: Optional[np.ndarray] = None
    _chol: Optional[np.ndarray] = field(default=None, repr=False)
    _inv_map: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        n = self.dim
        if self.kind == "weighted":
            if self.weight is None:
                raise ValueError("weighted norm needs a weight matrix")
            H = np.asarray(self.weight, dtype=float)
            if H.shape != (n, n):
                raise ValueError(f"weight must be {n}x{n}, got {H.shape}")
            if not np.allclose(H, H.T, rtol=0, atol=1e-12 * max(1.0, np.abs(H).max())):
                raise ValueError("weight matrix is not symmetric")
            H = 0.5 * (H + H.T)
            if np.linalg.eigvalsh(H).min() <= 0:
                raise ValueError("weight matrix is not positive definite")
            object.__setattr__(self, "weight", _frozen(H))
            object.__setattr__(self, "_chol", _frozen(np.linalg.cholesky(H)))
        elif self.kind == "transformed":
            if self.base is None or self.map is None:
                raise ValueError("transformed norm needs a base norm and a map")
            A = np.asarray(self.map, dtype=float)
            if A.shape != (n, n) or self.base.dim != n:
                raise ValueError("map and base norm must match dim")
            if not np.all(np.isfinite(A)) or np.linalg.cond(A) > MAX_CONDITION:
                raise ValueError("map is singular or too ill-conditioned")
            object.__setattr__(self, "map", _frozen(A))
            object.__setattr__(self, "_inv_map", _frozen(np.linalg.inv(A)))
        elif self.weight is not None or self.map is not None or self.base is not None:
            raise ValueError(f"{self.kind} norm takes no parameters")

    # constructors -------------------------------------------------------

    @classmethod
    def l1(cls, n):
        return cls("l1", n)

    @classmethod
    def l2(cls, n):
        return cls("l2", n)

    @classmethod
    def linf(cls, n):
        return cls("linf", n)

    @classmethod
    def weighted(cls, H):
        H = np.asarray(H, dtype=float)
        return cls("weighted", H.shape[0], weight=H)

    @classmethod
    def transformed(cls, base, A):
        """Norm ``x -> base(A^{-1} x)``, whose unit ball is ``A`` times the base ball."""
        A = np.asarray(A, dtype=float)
        return cls("transformed", base.dim, base=base, map=A)

    # properties ---------------------------------------------------------

    @property
    def is_polyhedral(self):
        if self.kind == "transformed":
            return self.base.is_polyhedral
        return self.kind in ("l1", "linf")

    @property
    def is_euclidean_kind(self):
        """True when the norm is induced by a scalar product by construction."""
        if self.dim == 1:
            return True
        if self.kind == "transformed":
            return self.base.is_euclidean_kind
        return self.kind in ("l2", "weighted")

    def gram(self):
        """Matrix ``G`` with ``||x||^2 = x^T G x`` for Euclidean kinds."""
        if self.kind == "l2" or (self.dim == 1 and self.kind in ("l1", "linf")):
            return np.eye(self.dim)
        if self.kind == "weighted":
            return np.array(self.weight)
        if self.kind == "transformed":
            Ainv = self._inv_map
            return Ainv.T @ self.base.gram() @ Ainv
        raise ValueError(f"{self.kind} norm is not Euclidean")

    def same_as(self, other):
        if other is None:
            return False
        if self.dim != other.dim:
            return False
        simple = ("l1", "l2", "linf")
        if self.dim == 1 and self.kind in simple and other.kind in simple:
            return True
        if self.kind != other.kind:
            return False
        if self.kind == "weighted":
            return np.array_equal(self.weight, other.weight)
        if self.kind == "transformed":
            return np.array_equal(self.map, other.map) and self.base.same_as(other.base)
        return True

    # serialization ------------------------------------------------------

    def to_dict(self):
        d = {"kind": self.kind, "dim": self.dim}
        if self.kind == "weighted":
            d["weight"] = self.weight.tolist()
        if self.kind == "transformed":
            d["map"] = self.map.tolist()
            d["base"] = self.base.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind == "weighted":
            return cls.weighted(d["weight"])
        if kind == "transformed":
            A = np.asarray(d["map"], dtype=float)
            base = d.get("base", "l2")
            if isinstance(base, str):
                base = {"kind": base, "dim": A.shape[0]}
            return cls.transformed(cls.from_dict(base), A)
        if kind not in ("l1", "l2", "linf"):
            raise ValueError(f"unknown norm kind {kind!r}")
        return cls(kind, d["dim"])

    def __repr__(self):
        return f"NormSpec({self.kind!r}, dim={self.dim})"


def _euclid(x):
    # scaled to avoid overflow and underflow in the squares
    m = np.abs(x).max(axis=-1, initial=0.0)
    safe = np.where(m > 0, m, 1.0)
    return m * np.sqrt(((x / safe[..., None]) ** 2).sum(axis=-1))


def _check_dim(spec, x, what="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != spec.dim:
        raise ValueError(f"{what} has shape {x.shape}, expected trailing dim {spec.dim}")
    return x


def norm_eval(spec, x):
    """Primal norm ``||x||``, broadcasting over leading axes."""
    x = _check_dim(spec, x)
    k = spec.kind
    if k == "l1":
        return np.abs(x).sum(axis=-1)
    if k == "l2":
        return _euclid(x)
    if k == "linf":
        return np.abs(x).max(axis=-1)
    if k == "weighted":
        # ||R^T x||_2 with H = R R^T
        return _euclid(x @ spec._chol)
    return norm_eval(spec.base, x @ spec._inv_map.T)


def dual_norm_eval(spec, phi):
    """Dual norm ``||phi||_* = max{<phi, h> : ||h|| = 1}`` in closed form."""
    phi = _check_dim(spec, phi, "phi")
    k = spec.kind
    if k == "l1":
        return np.abs(phi).max(axis=-1)
    if k == "l2":
        return _euclid(phi)
    if k == "linf":
        return np.abs(phi).sum(axis=-1)
    if k == "weighted":
        # sqrt(phi^T H^{-1} phi) = ||R^{-1} phi||_2
        z = np.linalg.solve(spec._chol, np.moveaxis(phi, -1, 0).reshape(spec.dim, -1))
        return _euclid(z.T).reshape(phi.shape[:-1])
    # h = A g with ||g||_base = 1, so <phi, A g> = <A^T phi, g>
    return dual_norm_eval(spec.base, phi @ spec.map)


def steepest_ascent_direction(spec, phi):
    """Unit vector ``d`` with ``<phi, d> = ||phi||_*``.

    Ties are broken reproducibly: under ``linf`` a zero component gets sign
    +1; under ``l1`` the smallest index among maximal ``|phi_i|`` wins.
    """
    phi = _check_dim(spec, phi, "phi")
    if np.any(dual_norm_eval(spec, phi) == 0):
        raise ValueError("steepest-ascent direction of the zero functional is undefined")
    k = spec.kind
    if k == "l2":
        return phi / np.linalg.norm(phi, axis=-1, keepdims=True)
    if k == "linf":
        return np.where(phi < 0, -1.0, 1.0)
    if k == "l1":
        i = np.argmax(np.abs(phi), axis=-1)
        d = np.zeros_like(phi)
        s = np.sign(np.take_along_axis(phi, i[..., None], axis=-1))
        np.put_along_axis(d, i[..., None], s, axis=-1)
        return d
    if k == "weighted":
        flat = np.moveaxis(phi, -1, 0).reshape(spec.dim, -1)
        d = np.linalg.solve(spec.weight, flat)
        d = np.moveaxis(d.reshape((spec.dim,) + phi.shape[:-1]), 0, -1)
        return d / dual_norm_eval(spec, phi)[..., None]
    g = steepest_ascent_direction(spec.base, phi @ spec.map)
    return g @ spec.map.T


def parallelogram_residual(spec, u, v):
    """``| ||u+v||^2 + ||u-v||^2 - 2||u||^2 - 2||v||^2 |``."""
    u = _check_dim(spec, u, "u")
    v = _check_dim(spec, v, "v")
    return np.abs(norm_eval(spec, u + v) ** 2 + norm_eval(spec, u - v) ** 2
                  - 2 * norm_eval(spec, u) ** 2 - 2 * norm_eval(spec, v) ** 2)


def unit_ball_vertices(spec):
    """Vertices of the unit ball for polyhedral kinds, else an empty array."""
    n = spec.dim
    if spec.kind == "l1":
        return np.vstack([np.eye(n), -np.eye(n)])
    if spec.kind == "linf":
        return np.array(list(itertools.product((1.0, -1.0), repeat=n)))
    if spec.kind == "transformed" and spec.base.is_polyhedral:
        return unit_ball_vertices(spec.base) @ spec.map.T
    return np.empty((0, n))


def _axis_points(spec):
    n = spec.dim
    E = np.vstack([np.eye(n), -np.eye(n)])
    # +e1, -e1, +e2, -e2, ...
    E = E.reshape(2, n, n).transpose(1, 0, 2).reshape(2 * n, n)
    return E / norm_eval(spec, E)[:, None]


def sample_unit_sphere(spec, count, seed=0):
    """Deterministic sample of ``count`` points with ``||x|| = 1``.

    The sample starts with the axis points ``±e_i / ||e_i||``, then, for
    polyhedral norms, the unit-ball vertices when axes and vertices together
    fit in ``count``; the rest are Gaussian directions scaled onto the
    sphere.
    """
    if count < 1:
        raise ValueError("count must be positive")
    n = spec.dim
    pts = _axis_points(spec)
    if spec.is_polyhedral:
        V = unit_ball_vertices(spec)
        V = V / norm_eval(spec, V)[:, None]
        keep = [v for v in V if not np.any(np.all(np.isclose(pts, v, rtol=0, atol=1e-14), axis=1))]
        if keep and len(pts) + len(keep) <= count:
            pts = np.vstack([pts, keep])
    pts = pts[:count]
    rest = count - len(pts)
    if rest > 0:
        rng = np.random.default_rng(seed)
        G = rng.standard_normal((rest, n))
        G = G[np.linalg.norm(G, axis=1) > 0]
        pts = np.vstack([pts, G / norm_eval(spec, G)[:, None]])
    return pts


def dual_norm_sampled(spec, phi, samples=10_000, refine=100, seed=0):
    """Dual norm by sphere sampling plus coordinate-ascent refinement.

    Works for any norm with an evaluation oracle.  Returns a lower bound on
    ``||phi||_*`` together with the maximizing unit vector.
    """
    phi = _check_dim(spec, phi, "phi")
    H = sample_unit_sphere(spec, samples, seed)
    vals = H @ phi
    i = int(np.argmax(vals))
    h, best = H[i].copy(), vals[i]
    step = 0.1
    for _ in range(refine):
        improved = False
        for j in range(spec.dim):
            for s in (step, -step):
                c = h.copy()
                c[j] += s
                nc = norm_eval(spec, c)
                if nc == 0:
                    continue
                c /= nc
                val = c @ phi
                if val > best:
                    h, best, improved = c, val, True
        if not improved:
            step *= 0.5
    return float(best), h
