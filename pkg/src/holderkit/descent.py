"""Normalized steepest-descent method for nu-approximable functions.

At ``x_k`` with ``n_k = ||f'(x_k)||_*`` and a unit direction ``d_k``
satisfying ``<f'(x_k), d_k> = n_k``, the method steps::

    h_k     = xi ((1 + nu) / L)^(1/nu) n_k^(1/nu)
    x_{k+1} = x_k - h_k d_k

Whenever ``L >= L_f(nu)`` each step decreases ``f`` by at least
``xi (1 - xi^nu) ((1 + nu) / L)^(1/nu) n_k^(1 + 1/nu)``, which bounds the
number of steps needed to reach ``n_k <= eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .normed_space import dual_norm_eval, steepest_ascent_direction
from .verdict import Verdict

DECREASE_RTOL = 1e-9


def default_xi(nu):
    return (1.0 / (1.0 + nu)) ** (1.0 / nu)


@dataclass
class DescentConfig:
    L: float
    nu: float
    epsilon: float
    x0: np.ndarray
    f_star: float
    xi: Optional[float] = None
    max_iter: Optional[int] = None

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if not 0 < self.nu <= 1:
            raise ValueError("nu must lie in (0, 1]; the method needs nu > 0")
        if self.xi is None:
            self.xi = default_xi(self.nu)
        if not 0 < self.xi < 1:
            raise ValueError("xi must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        self.x0 = np.array(self.x0, dtype=float).reshape(-1)

    def to_dict(self):
        return {"L": self.L, "nu": self.nu, "xi": self.xi, "epsilon": self.epsilon,
                "x0": self.x0.tolist(), "f_star": self.f_star, "max_iter": self.max_iter}


@dataclass
class StepRecord:
    k: int
    x: np.ndarray
    f: float
    n: float
    d: Optional[np.ndarray]
    h: float


@dataclass
class DescentTrace:
    records: list = field(default_factory=list)
    reason: str = ""
    config: Optional[DescentConfig] = None
    direction_quality: float = 1.0

    @property
    def iterations(self):
        """Number of steps taken (records minus the final point)."""
        return max(len(self.records) - 1, 0)

    def to_csv(self):
        lines = ["iteration,f,n_k,h_k"]
        lines += [f"{r.k},{r.f!r},{r.n!r},{r.h!r}" for r in self.records]
        return "\n".join(lines) + "\n"

    def summary(self):
        last = self.records[-1]
        return {
            "iterations": self.iterations,
            "termination": self.reason,
            "f_final": last.f,
            "n_final": last.n,
            "x_final": last.x.tolist(),
            "direction_quality": self.direction_quality,
            "config": self.config.to_dict() if self.config else None,
        }


class DescentError(RuntimeError):
    """Raised when iterates become non-finite or a known bound is broken."""


def step_size(config, n_k):
    nu = config.nu
    return config.xi * ((1 + nu) / config.L) ** (1 / nu) * n_k ** (1 / nu)


def guaranteed_decrease(config, n_k):
    nu = config.nu
    return (config.xi * (1 - config.xi ** nu) * ((1 + nu) / config.L) ** (1 / nu)
            * n_k ** (1 + 1 / nu))


def _ceil(v):
    # ceiling that ignores rounding noise just above an integer
    r = round(v)
    return int(r) if math.isclose(v, r, rel_tol=1e-12, abs_tol=1e-12) else math.ceil(v)


def iteration_bound(config, f_x0):
    """Upper bound on iterations before ``n_k <= eps``.

    For the default ``xi = (1/(1+nu))^(1/nu)`` this is
    ``ceil(eps^-(1+1/nu) (1+nu)/nu L^(1/nu) (f(x0) - f*))``; any other
    ``xi`` uses the general factor ``(L/(1+nu))^(1/nu) / (xi (1 - xi^nu))``.
    """
    nu, L, eps = config.nu, config.L, config.epsilon
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    gap = max(f_x0 - config.f_star, 0.0)
    if math.isclose(config.xi, default_xi(nu), rel_tol=1e-12):
        v = (1 + nu) / nu * L ** (1 / nu) * gap / eps ** (1 + 1 / nu)
    else:
        xi = config.xi
        v = (L / (1 + nu)) ** (1 / nu) * gap / (xi * (1 - xi ** nu)) / eps ** (1 + 1 / nu)
    return _ceil(v)


def run(f, spec, config):
    """Iterate until ``n_k <= eps``, ``max_iter`` steps, or ``f < f*``.

    The last reason means the caller's lower bound ``f*`` was wrong for this
    function (it is unbounded below or ``f*`` was a guess).  If ``f`` carries
    known constants under ``spec`` with ``L_f <= L``, a step that breaks the
    guaranteed decrease raises :class:`DescentError`.
    """
    x = config.x0.copy()
    if x.shape != (spec.dim,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({spec.dim},)")
    fx = float(f.value(x))
    if fx < config.f_star:
        raise ValueError("f(x0) is below f_star")
    max_iter = config.max_iter
    if max_iter is None:
        max_iter = max(10 * iteration_bound(config, fx), 1)
    known = f.constants_for(config.nu, spec) if hasattr(f, "constants_for") else None
    enforce = known is not None and known.L <= config.L

    trace = DescentTrace(config=config)
    quality = 1.0
    for k in range(max_iter + 1):
        g = np.asarray(f.gradient(x), dtype=float)
        n = float(dual_norm_eval(spec, g))
        if not (np.isfinite(fx) and np.isfinite(n)):
            raise DescentError(f"non-finite iterate at step {k}: L may be below L_f or f unbounded")
        if n <= config.epsilon:
            trace.records.append(StepRecord(k, x, fx, n, None, 0.0))
            trace.reason = "converged"
            break
        if fx < config.f_star:
            trace.records.append(StepRecord(k, x, fx, n, None, 0.0))
            trace.reason = "below_f_star"
            break
        if k == max_iter:
            trace.records.append(StepRecord(k, x, fx, n, None, 0.0))
            trace.reason = "max_iter"
            break
        d = steepest_ascent_direction(spec, g)
        quality = min(quality, float(g @ d) / n)
        h = step_size(config, n)
        trace.records.append(StepRecord(k, x, fx, n, d, h))
        x = x - h * d
        fnew = float(f.value(x))
        if enforce and fnew > fx - guaranteed_decrease(config, n) + DECREASE_RTOL * max(1.0, abs(fx)):
            raise DescentError(f"guaranteed decrease violated at step {k} although L >= L_f")
        fx = fnew
    trace.direction_quality = quality
    return trace


def verify_trace(trace, config, L_used=None, rtol=DECREASE_RTOL):
    """PASS iff every step meets the guaranteed decrease for ``L_used`` and
    the step count stays within :func:`iteration_bound`."""
    L_used = config.L if L_used is None else L_used
    cfg = DescentConfig(L_used, config.nu, config.epsilon, config.x0, config.f_star,
                        xi=config.xi, max_iter=config.max_iter)
    recs = trace.records
    first_bad = None
    total = 0.0
    for a, b in zip(recs, recs[1:]):
        need = guaranteed_decrease(cfg, a.n)
        total += need
        if b.f > a.f - need + rtol * max(1.0, abs(a.f)):
            first_bad = a.k
            break
    bound = iteration_bound(cfg, recs[0].f) if recs else 0
    checks = {
        "decrease": first_bad is None,
        "iterations_within_bound": trace.iterations <= bound,
    }
    details = {
        "iterations": trace.iterations,
        "iteration_bound": bound,
        "first_violation": first_bad,
        "termination": trace.reason,
        "summed_guaranteed_decrease": total,
        "actual_decrease": recs[0].f - recs[-1].f if recs else 0.0,
        "direction_quality": trace.direction_quality,
        "L_used": L_used,
    }
    msg = "" if first_bad is None else f"decrease inequality violated at step {first_bad}"
    return Verdict.from_checks(checks, details, msg)
