"""Sampled lower bounds on Hoelder constants and approximation parameters.

For a pair ``x != y`` the two ratio families are::

    holder ratio   ||f'(x) - f'(y)||_* / ||x - y||^nu
    approx ratios  e / d  split by sign, where
                   e = f(y) - f(x) - <f'(x), y - x>,
                   d = ||y - x||^(1+nu) / (1 + nu)

Their suprema over all pairs are ``M_f(nu)`` and ``L_f(nu)`` (the latter
split into the one-sided parameters ``L-`` and ``L+``).  Sampling can only
bound a supremum from below, so every estimate here is a lower bound and is
reported as such.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .normed_space import dual_norm_eval, norm_eval
from .verdict import CONSISTENT, DATA_ERROR, INCONSISTENT, Verdict

EXCLUSION_RADIUS = 1e-6


@dataclass(frozen=True)
class SamplingConfig:
    pairs: int = 200_000
    refine: int = 200
    elite: int = 16
    box: float = 2.0
    delta: float = EXCLUSION_RADIUS
    seed: int = 0
    chunk: int = 50_000

    def to_dict(self):
        return asdict(self)


@dataclass
class HolderReport:
    nu: float
    M_lb: float
    L_lb: float
    Lminus_lb: float
    Lplus_lb: float
    witnesses: dict = field(default_factory=dict)
    budget: SamplingConfig = field(default_factory=SamplingConfig)
    function: str = ""
    norm: dict = field(default_factory=dict)

    @property
    def seed(self):
        return self.budget.seed

    def to_dict(self):
        return {
            "nu": self.nu,
            "estimates_are": "lower bounds on suprema over sampled pairs",
            "M_lb": self.M_lb,
            "L_lb": self.L_lb,
            "Lminus_lb": self.Lminus_lb,
            "Lplus_lb": self.Lplus_lb,
            "witnesses": {k: {"x": np.asarray(x).tolist(), "y": np.asarray(y).tolist()}
                          for k, (x, y) in sorted(self.witnesses.items())},
            "sample_budget": self.budget.to_dict(),
            "seed": self.seed,
            "function": self.function,
            "norm": self.norm,
        }


def _pair_distance(spec, x, y, delta):
    r = norm_eval(spec, np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    if np.any(r < delta):
        raise ValueError(f"pair closer than the exclusion radius {delta:g}")
    return r


def holder_ratio(f, spec, nu, x, y, delta=EXCLUSION_RADIUS):
    """``||f'(x) - f'(y)||_* / ||x - y||^nu``."""
    r = _pair_distance(spec, x, y, delta)
    return dual_norm_eval(spec, f.gradient(x) - f.gradient(y)) / r ** nu


def approx_ratios(f, spec, nu, x, y, delta=EXCLUSION_RADIUS):
    """One-sided Taylor-error ratios ``(r_minus, r_plus)``.

    ``max(r_minus, r_plus)`` is the symmetric ratio whose supremum is
    ``L_f(nu)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = _pair_distance(spec, x, y, delta)
    e = f.value(y) - f.value(x) - ((y - x) * f.gradient(x)).sum(axis=-1)
    d = r ** (1 + nu) / (1 + nu)
    return np.maximum(-e, 0.0) / d, np.maximum(e, 0.0) / d


ROUNDING_FACTOR = 16 * np.finfo(float).eps


def _batch_ratios(f, spec, nu, X, Y, delta):
    """All three ratio kinds on a batch, each reduced by its rounding-error bound.

    Pairs inside the exclusion radius get -inf.  Ranking pairs by the
    reduced value keeps the search away from short pairs whose raw ratio
    is inflated by cancellation.
    """
    D = Y - X
    r = norm_eval(spec, D)
    bad = r < delta
    r = np.where(bad, 1.0, r)
    gx, gy = f.gradient(X), f.gradient(Y)
    fx, fy = f.value(X), f.value(Y)
    M = dual_norm_eval(spec, gx - gy) / r ** nu
    e = fy - fx - (D * gx).sum(axis=-1)
    d = r ** (1 + nu) / (1 + nu)
    err_M = ROUNDING_FACTOR * (dual_norm_eval(spec, gx) + dual_norm_eval(spec, gy)) / r ** nu
    err_L = ROUNDING_FACTOR * (np.abs(fy) + np.abs(fx) + np.abs(D * gx).sum(axis=-1)) / d
    out = np.stack([M - err_M, np.maximum(-e, 0.0) / d - err_L, np.maximum(e, 0.0) / d - err_L])
    out[:, bad] = -np.inf
    return np.where(np.isnan(out), -np.inf, out)


KINDS = ("M", "Lminus", "Lplus")


def _refine(f, spec, nu, kind, Z, vals, cfg):
    """Derivative-free compass search on pairs ``z = (x, y)`` inside the box.

    Each elite keeps its own step size, halved after a sweep over all 2n
    coordinates without improvement.  Only improvements are accepted, so
    the result never falls below the starting values.
    """
    n = spec.dim
    k = KINDS.index(kind)
    step = np.full(len(Z), cfg.box / 4)
    for _ in range(cfg.refine):
        improved = np.zeros(len(Z), dtype=bool)
        for j in range(2 * n):
            for sgn in (1.0, -1.0):
                C = Z.copy()
                C[:, j] = np.clip(C[:, j] + sgn * step, -cfg.box, cfg.box)
                v = _batch_ratios(f, spec, nu, C[:, :n], C[:, n:], cfg.delta)[k]
                better = v > vals
                Z[better] = C[better]
                vals[better] = v[better]
                improved |= better
        step = np.where(improved, step, step * 0.5)
    return Z, vals


def _rounding_error(f, spec, nu, kind, x, y):
    """Bound on the floating-point error of a ratio at ``(x, y)``.

    Subtracted from reported estimates so that cancellation in the Taylor
    residual cannot push a lower bound above the true constant.
    """
    r = float(norm_eval(spec, y - x))
    gx, gy = f.gradient(x), f.gradient(y)
    if kind == "M":
        scale = float(dual_norm_eval(spec, gx) + dual_norm_eval(spec, gy)) / r ** nu
    else:
        terms = abs(float(f.value(y))) + abs(float(f.value(x))) + float(np.abs((y - x) * gx).sum())
        scale = terms * (1 + nu) / r ** (1 + nu)
    return ROUNDING_FACTOR * scale


def estimate_constants(f, spec, nu, budget=None):
    """Lower bounds on ``M_f(nu)``, ``L_f(nu)``, ``L-`` and ``L+``.

    Pairs are drawn uniformly from ``[-box, box]^n`` in fixed-size chunks,
    so a larger ``pairs`` budget with the same seed sees a superset of the
    pairs of a smaller one.  The top ``elite`` pairs of each ratio kind are
    then polished by compass search for ``refine`` sweeps.  Reported values
    are reduced by a floating-point error bound, so they stay lower bounds.
    """
    cfg = budget or SamplingConfig()
    if cfg.pairs < 1:
        raise ValueError("budget.pairs must be at least 1")
    n = spec.dim
    rng = np.random.default_rng(cfg.seed)
    keep = max(cfg.elite, 1)
    pool_Z = np.empty((0, 2 * n))
    pool_V = np.empty((3, 0))
    done = 0
    while done < cfg.pairs:
        m = min(cfg.chunk, cfg.pairs - done)
        Z = rng.uniform(-cfg.box, cfg.box, size=(m, 2 * n))
        V = _batch_ratios(f, spec, nu, Z[:, :n], Z[:, n:], cfg.delta)
        # carry forward only the best rows per kind
        top = np.unique(np.concatenate([np.argsort(-V[k], kind="stable")[:keep] for k in range(3)]))
        pool_Z = np.vstack([pool_Z, Z[top]])
        pool_V = np.hstack([pool_V, V[:, top]])
        done += m

    results = {}
    for k, kind in enumerate(KINDS):
        order = np.argsort(-pool_V[k], kind="stable")[:keep]
        Z = pool_Z[order].copy()
        vals = pool_V[k, order].copy()
        if cfg.refine > 0:
            Z, vals = _refine(f, spec, nu, kind, Z, vals, cfg)
        i = int(np.argmax(vals))
        x, y = Z[i, :n].copy(), Z[i, n:].copy()
        # recompute through the public ratio functions so the witness reproduces
        if not np.isfinite(vals[i]):
            results[kind] = (0.0, (x, y))
            continue
        if kind == "M":
            val = float(holder_ratio(f, spec, nu, x, y, cfg.delta))
        else:
            rm, rp = approx_ratios(f, spec, nu, x, y, cfg.delta)
            val = float(rm if kind == "Lminus" else rp)
        results[kind] = (max(val - _rounding_error(f, spec, nu, kind, x, y), 0.0), (x, y))

    Lm, Lp = results["Lminus"][0], results["Lplus"][0]
    return HolderReport(
        nu=float(nu),
        M_lb=results["M"][0],
        L_lb=max(Lm, Lp),
        Lminus_lb=Lm,
        Lplus_lb=Lp,
        witnesses={
            "M": results["M"][1],
            "Lminus": results["Lminus"][1],
            "Lplus": results["Lplus"][1],
            "L": results["Lminus"][1] if Lm > Lp else results["Lplus"][1],
        },
        budget=cfg,
        function=getattr(f, "name", ""),
        norm=spec.to_dict(),
    )


def _log_ratio_term(nu):
    # log((1+nu)/nu) with 0 * log(inf) read as 0 (the 0^0 = 1 convention)
    return 0.0 if nu == 0 else nu * (math.log1p(nu) - math.log(nu))


def _check_nu(nu):
    if not 0 <= nu <= 1:
        raise ValueError(f"nu must lie in [0, 1], got {nu}")


def coefficient_general(nu):
    """``2^(1-nu) ((1+nu)/nu)^nu``: the factor in ``M_f <= c L_f`` for any norm."""
    _check_nu(nu)
    return math.exp((1 - nu) * math.log(2.0) + _log_ratio_term(nu))


def coefficient_euclidean(nu):
    """``2^(1-nu) / sqrt(1+nu) ((1+nu)/nu)^(nu/2)``, for Euclidean norms."""
    _check_nu(nu)
    return math.exp((1 - nu) * math.log(2.0) + 0.5 * _log_ratio_term(nu)
                    - 0.5 * math.log1p(nu))


def coefficient_convex(nu):
    """``2^(-nu) ((1+nu)/nu)^nu``, half the general coefficient.

    Bounds ``M_f`` by ``c (L- + L+)``; for convex ``f`` (``L- = 0``) this is
    ``M_f <= c L_f``.
    """
    return coefficient_general(nu) / 2


def coefficient(nu, euclidean=False, convex=False):
    if convex:
        return coefficient_convex(nu)
    if euclidean:
        return coefficient_euclidean(nu)
    return coefficient_general(nu)


def verify_bounds(report, truth=None, euclidean=False, convex=False,
                  tol=1e-9, slack=0.02):
    """Check ``L <= M <= c(nu) L`` for the coefficient selected by the flags.

    With ``truth = (M_true, L_true)`` the inequality is asserted on the true
    constants and the report's lower bounds must not exceed them.  Without
    truth only the ratio ``M_lb / L_lb`` is available; it is compared with
    ``[1 - slack, c + slack]`` and the verdict is CONSISTENT or
    INCONSISTENT.  Lower bounds cannot falsify an upper bound, so
    that verdict is diagnostic only.
    """
    nu = report.nu
    c = coefficient(nu, euclidean, convex)
    details = {"nu": nu, "coefficient": c, "flags": {"euclidean": euclidean, "convex": convex}}
    two_sided = report.Lminus_lb + report.Lplus_lb
    if two_sided > 0:
        details["M_over_two_sided_lb"] = report.M_lb / two_sided
        details["coefficient_two_sided"] = coefficient_convex(nu)
    if truth is not None:
        M, L = map(float, truth)
        details.update(M_true=M, L_true=L)
        if L > M * (1 + tol) + tol:
            return Verdict(DATA_ERROR, {"L_le_M": False}, details,
                           "truth violates L_f <= M_f")
        details["ratio"] = M / L if L > 0 else (1.0 if M == 0 else math.inf)
        checks = {
            "L_le_M": True,
            "M_le_cL": M <= c * L * (1 + tol) + tol,
            "M_lb_le_M": report.M_lb <= M * (1 + tol) + tol,
            "L_lb_le_L": report.L_lb <= L * (1 + tol) + tol,
        }
        return Verdict.from_checks(checks, details)
    if report.L_lb <= 0:
        ok = report.M_lb <= tol
        details["ratio"] = None
        return Verdict(CONSISTENT if ok else INCONSISTENT, {"ratio_in_range": ok}, details,
                       "diagnostic only: lower bounds cannot falsify the bound")
    ratio = report.M_lb / report.L_lb
    details["ratio"] = ratio
    ok = 1 - slack <= ratio <= c + slack
    return Verdict(CONSISTENT if ok else INCONSISTENT, {"ratio_in_range": ok}, details,
                   "diagnostic only: lower bounds cannot falsify the bound")


def figure1_table(nu_grid):
    """Rows ``(nu, c_general, c_euclidean)`` over ``nu_grid``."""
    rows = []
    for nu in nu_grid:
        nu = float(nu)
        if not 0 < nu <= 1:
            raise ValueError(f"grid values must lie in (0, 1], got {nu}")
        rows.append((nu, coefficient_general(nu), coefficient_euclidean(nu)))
    return rows


def figure1_csv(rows):
    lines = ["nu,c_general,c_euclidean"]
    lines += [f"{nu:.10g},{cg:.15g},{ce:.15g}" for nu, cg, ce in rows]
    return "\n".join(lines) + "\n"
