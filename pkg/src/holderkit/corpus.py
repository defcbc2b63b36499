"""Differentiable test functions with gradient oracles and known constants.

All value and gradient callables broadcast over leading axes: ``value``
maps ``(..., n) -> (...)`` and ``gradient`` maps ``(..., n) -> (..., n)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .normed_space import NormSpec
from .quadnorms import as_operator, operator_norm, quadratic_form_norm


@dataclass(frozen=True)
class KnownConstants:
    """Exact (or oracle-computed) ``M_f(nu)`` and ``L_f(nu)`` under ``norm``."""

    M: float
    L: float
    label: str  # "reference" (hand-checked closed form) or "computed" (oracle)
    source: str = ""


@dataclass
class SmoothFunction:
    name: str
    dim: int
    value: Callable
    gradient: Callable
    known_constants: dict = field(default_factory=dict)
    norm: Optional[NormSpec] = None
    lower_bound: Optional[float] = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    informational: bool = False

    def __call__(self, x):
        return self.value(x)

    def constants_for(self, nu, spec):
        """Known constants at ``nu`` if they were computed under ``spec``."""
        c = self.known_constants.get(float(nu))
        if c is None or not spec.same_as(self.norm):
            return None
        return c

    def manifest(self):
        return {
            "id": self.name,
            "kind": self.kind,
            "dim": self.dim,
            "parameters": self.params,
            "norm": self.norm.to_dict() if self.norm is not None else None,
            "lower_bound": self.lower_bound,
            "informational": self.informational,
            "known_constants": {
                repr(nu): {"M": c.M, "L": c.L, "label": c.label, "source": c.source}
                for nu, c in sorted(self.known_constants.items())
            },
        }


def make_quadratic(B, spec=None, name="quadratic"):
    """``f(x) = x^T B x / 2`` with gradient ``B x``.

    With ``spec`` given, the nu=1 constants are ``(||B||, ||Q_B||)`` under it,
    recorded only when both norms are computed exactly.
    """
    B = as_operator(B)
    M = B.matrix

    def value(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", x, M, x)

    def gradient(x):
        return np.asarray(x, dtype=float) @ M

    known = {}
    if spec is not None:
        op = operator_norm(B, spec)
        qn = quadratic_form_norm(B, spec)
        if op.exact and qn.exact:
            known[1.0] = KnownConstants(op.value, qn.value, "computed",
                                        "exact operator / quadratic-form norms")
    return SmoothFunction(
        name, B.dim, value, gradient, known, norm=spec,
        lower_bound=0.0 if B.is_psd() else None,
        kind="quadratic", params={"B": M.tolist()},
    )


def power_constants(nu, grid=400_001, exclusion=1e-3):
    """``(M_f(nu), L_f(nu))`` of ``|x|^(1+nu)/(1+nu)`` by a 1-D dense-grid oracle.

    Both ratios are homogeneous of degree zero, so one point is fixed at
    ``x = 1`` and ``y = t`` sweeps the real line through ``t = tan(theta)``.
    The grid maximum is polished with a bounded scalar search.  Pairs with
    ``|t - 1| < exclusion`` are skipped, where the Taylor error is lost to
    cancellation (both ratios tend to their ``t -> 1`` limits, which are not
    maximal for nu < 1 and constant for nu = 1).
    """
    if not 0 < nu <= 1:
        raise ValueError("nu must lie in (0, 1]")

    def holder(t):
        g = np.sign(t) * np.abs(t) ** nu
        return np.abs(1.0 - g) / np.abs(1.0 - t) ** nu

    def approx(t):
        e = (np.abs(t) ** (1 + nu) - 1.0) - (1 + nu) * (t - 1.0)
        return np.abs(e) / np.abs(t - 1.0) ** (1 + nu)

    theta = np.linspace(-np.pi / 2, np.pi / 2, grid)[1:-1]
    t = np.tan(theta)
    t = t[np.abs(t - 1.0) >= exclusion]

    def sup(ratio):
        r = ratio(t)
        i = int(np.argmax(r))
        lo = np.arctan(t[max(i - 2, 0)])
        hi = np.arctan(t[min(i + 2, len(t) - 1)])
        res = minimize_scalar(lambda th: -float(ratio(np.tan(th))), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-14})
        return float(max(r[i], -res.fun))

    # the x = 0 pair gives L-ratio exactly 1 for every nu (the t -> inf limit)
    return sup(holder), max(sup(approx), 1.0)


def make_power(nu):
    """``f(x) = |x|^(1+nu)/(1+nu)`` on R, gradient ``sign(x)|x|^nu``."""
    nu = float(nu)
    if not 0 < nu <= 1:
        raise ValueError("nu must lie in (0, 1]")

    def value(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return np.abs(x) ** (1 + nu) / (1 + nu)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * np.abs(x) ** nu

    if nu == 1.0:
        known = {1.0: KnownConstants(1.0, 1.0, "computed", "scalar quadratic")}
    else:
        M, L = power_constants(nu)
        known = {nu: KnownConstants(M, L, "computed", "1-D dense-grid oracle")}
    return SmoothFunction(f"power:{nu:g}", 1, value, gradient, known,
                          norm=NormSpec.l2(1), lower_bound=0.0,
                          kind="power", params={"nu": nu})


def affine_shift(f, a, phi, c):
    """``g(x) = f(x + a) + <phi, x> + c``; the Hoelder and approximation
    constants are unchanged, so ``known_constants`` is copied as is."""
    a = np.asarray(a, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if a.shape != (f.dim,) or phi.shape != (f.dim,):
        raise ValueError(f"a and phi must have shape ({f.dim},)")
    c = float(c)

    def value(x):
        x = np.asarray(x, dtype=float)
        return f.value(x + a) + x @ phi + c

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return f.gradient(x + a) + phi

    return SmoothFunction(
        f"shift({f.name})", f.dim, value, gradient, dict(f.known_constants),
        norm=f.norm, lower_bound=None, kind="affine_shift",
        params={"base": f.name, "a": a.tolist(), "phi": phi.tolist(), "c": c},
    )


def make_linear(phi, c=0.0):
    phi = np.asarray(phi, dtype=float)
    n = len(phi)
    zero = SmoothFunction("zero", n, lambda x: np.zeros(np.shape(x)[:-1]),
                          lambda x: np.zeros(np.shape(x)), kind="zero",
                          params={"dim": n})
    g = affine_shift(zero, np.zeros(n), phi, c)
    g.name, g.kind = ("zero" if not phi.any() and c == 0 else "linear"), "linear"
    g.params = {"phi": phi.tolist(), "c": float(c)}
    g.lower_bound = float(c) if not phi.any() else None
    return g


def make_zero(dim):
    f = make_linear(np.zeros(dim))
    for nu in (0.25, 0.5, 0.75, 1.0):
        f.known_constants[nu] = KnownConstants(0.0, 0.0, "computed", "constant gradient")
    return f


def make_logcosh(dim):
    """``sum_i log cosh(x_i)``: convex, Hessian ``diag(sech^2) <= I``."""

    def value(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        # log cosh(x) = |x| + log1p(exp(-2|x|)) - log 2
        return (ax + np.log1p(np.exp(-2 * ax)) - np.log(2.0)).sum(axis=-1)

    def gradient(x):
        return np.tanh(np.asarray(x, dtype=float))

    known = {1.0: KnownConstants(1.0, 1.0, "computed", "Hessian spectral bound, attained at 0")}
    return SmoothFunction("logcosh", dim, value, gradient, known,
                          norm=NormSpec.l2(dim), lower_bound=0.0,
                          kind="logcosh", params={"dim": dim})


def make_cubic():
    """``x^3``: no Hoelder-continuous gradient on R; estimates grow with the box."""
    return SmoothFunction("cubic", 1, lambda x: np.asarray(x, dtype=float)[..., 0] ** 3,
                          lambda x: 3 * np.asarray(x, dtype=float) ** 2,
                          kind="cubic", informational=True)


EXAMPLE51_B = np.diag([2.0, -2.0])


def example51(spec=None):
    """``x1^2 - x2^2`` as ``Q_B / 2`` with ``B = diag(2, -2)``."""
    f = make_quadratic(EXAMPLE51_B, spec if spec is not None else NormSpec.linf(2),
                       name="example51")
    if spec is None or spec.same_as(NormSpec.linf(2)):
        f.known_constants[1.0] = KnownConstants(4.0, 2.0, "reference", "hand computation under linf")
    return f


def quad1d():
    f = make_quadratic(np.eye(1), NormSpec.l2(1), name="quad1d")
    return f


def load_matrix(path):
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("matrix", data.get("B"))
    return np.asarray(data, dtype=float)


def get_function(fid, spec):
    """Resolve a corpus id to a :class:`SmoothFunction` under ``spec``.

    Ids: ``example51``, ``zero``, ``quad1d``, ``logcosh``, ``cubic``,
    ``power:<nu>``, ``linear:<c1,c2,...>``, ``quad:<matrix.json>``.
    """
    n = spec.dim
    if fid == "example51":
        _require(n == 2, fid, spec)
        return example51(spec)
    if fid == "zero":
        return make_zero(n)
    if fid == "quad1d":
        _require(n == 1, fid, spec)
        return quad1d()
    if fid == "logcosh":
        return make_logcosh(n)
    if fid == "cubic":
        _require(n == 1, fid, spec)
        return make_cubic()
    if fid.startswith("power:"):
        _require(n == 1, fid, spec)
        return make_power(float(fid.split(":", 1)[1]))
    if fid.startswith("linear:"):
        phi = [float(v) for v in fid.split(":", 1)[1].split(",")]
        _require(len(phi) == n, fid, spec)
        return make_linear(phi)
    if fid.startswith("quad:"):
        B = load_matrix(fid.split(":", 1)[1])
        _require(B.shape == (n, n), fid, spec)
        return make_quadratic(B, spec, name=fid)
    raise KeyError(f"unknown function id {fid!r}")


def _require(ok, fid, spec):
    if not ok:
        raise ValueError(f"function {fid!r} does not live in dimension {spec.dim}")


def default_corpus(seed=0):
    """Corpus members paired with the norm their constants refer to."""
    rng = np.random.default_rng(seed)
    out = [
        (quad1d(), NormSpec.l2(1)),
        (example51(), NormSpec.linf(2)),
        (example51(NormSpec.l2(2)), NormSpec.l2(2)),
        (make_zero(3), NormSpec.l2(3)),
        (make_linear([1.0, -2.0]), NormSpec.l1(2)),
        (make_logcosh(3), NormSpec.l2(3)),
        (make_cubic(), NormSpec.l2(1)),
    ]
    for nu in (0.25, 0.5, 0.75):
        out.append((make_power(nu), NormSpec.l2(1)))
    for n, spec in ((2, NormSpec.l1(2)), (3, NormSpec.linf(3)), (3, NormSpec.l2(3))):
        G = rng.standard_normal((n, n))
        out.append((make_quadratic(G + G.T, spec, name=f"randquad{n}-{spec.kind}"), spec))
        out.append((make_quadratic(G @ G.T, spec, name=f"randpsd{n}-{spec.kind}"), spec))
    return out


def corpus_manifest(seed=0):
    return [f.manifest() for f, _ in default_corpus(seed)]
