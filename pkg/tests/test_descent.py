import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holderkit.corpus import default_corpus, example51, make_power, make_quadratic, quad1d
from holderkit.descent import (DescentConfig, DescentError, DescentTrace, StepRecord,
                               default_xi, guaranteed_decrease, iteration_bound, run,
                               step_size, verify_trace)
from holderkit.normed_space import NormSpec

L2_1 = NormSpec.l2(1)


def cfg(**kw):
    base = dict(L=2.0, nu=1.0, epsilon=0.1, x0=[1.0], f_star=0.0, xi=0.5)
    base.update(kw)
    return DescentConfig(**base)


def test_step_size_examples():
    c = cfg()
    assert step_size(c, 1.0) == 0.5
    assert step_size(c, 0.0) == 0.0
    assert step_size(c, 4.0) == 2.0


def test_iteration_bound_examples():
    c = cfg()
    assert c.xi == default_xi(1.0)
    assert iteration_bound(c, 1.0) == 400
    assert iteration_bound(c, 0.0) == 0
    assert iteration_bound(cfg(epsilon=0.05), 1.0) == 4 * iteration_bound(c, 1.0)


def test_iteration_bound_general_xi_agrees_at_default():
    # the general factor equals the specialized one at the default xi
    for nu in (0.3, 0.5, 1.0):
        xi = default_xi(nu)
        L, eps, gap = 1.7, 0.2, 3.0
        general = (L / (1 + nu)) ** (1 / nu) * gap / (xi * (1 - xi ** nu)) / eps ** (1 + 1 / nu)
        c = DescentConfig(L, nu, eps, [0.0], -gap, xi=xi)
        assert iteration_bound(c, 0.0) == int(np.ceil(general - 1e-9))


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(xi=1.0)
    with pytest.raises(ValueError):
        cfg(nu=0.0)
    with pytest.raises(ValueError):
        cfg(L=0.0)
    with pytest.raises(ValueError):
        cfg(epsilon=0.0)


def test_quad1d_closed_form():
    # x_{k+1} = x_k (1 - xi (1 + nu) / L); L = 2, xi = 1/2 halves x each step
    c = DescentConfig(L=2.0, nu=1.0, epsilon=1e-3, x0=[1.0], f_star=0.0, xi=0.5)
    tr = run(quad1d(), L2_1, c)
    xs = [r.x[0] for r in tr.records]
    np.testing.assert_allclose(xs, 0.5 ** np.arange(len(xs)), rtol=1e-15)
    assert tr.iterations == 10 and tr.reason == "converged"
    assert verify_trace(tr, c).status == "PASS"


def test_quad1d_with_L1_lands_on_minimizer():
    c = DescentConfig(L=1.0, nu=1.0, epsilon=1e-3, x0=[1.0], f_star=0.0, xi=0.5)
    tr = run(quad1d(), L2_1, c)
    ns = [r.n for r in tr.records]
    assert all(a > b for a, b in zip(ns, ns[1:]))
    assert ns[-1] <= 1e-3
    assert verify_trace(tr, c).status == "PASS"


def test_stationary_start():
    c = cfg(x0=[0.0], epsilon=1e-3)
    tr = run(quad1d(), L2_1, c)
    assert tr.iterations == 0
    assert verify_trace(tr, c).status == "PASS"


def test_empty_trace_passes():
    tr = DescentTrace(records=[StepRecord(0, np.zeros(1), 0.0, 0.0, None, 0.0)], reason="converged")
    assert verify_trace(tr, cfg()).status == "PASS"


@pytest.mark.parametrize("kind", ["linf", "l2", "l1"])
def test_example51_with_valid_L(kind):
    spec = getattr(NormSpec, kind)(2)
    f = example51(spec)
    L = f.constants_for(1.0, spec).L
    c = DescentConfig(L=L, nu=1.0, epsilon=1e-3, x0=[1.0, 0.5], f_star=0.75 - 100)
    tr = run(f, spec, c)
    v = verify_trace(tr, c)
    assert v.status == "PASS"
    assert tr.reason == "below_f_star"


def test_undersized_L_fails_with_step_index():
    spec = NormSpec.l2(2)
    f = example51(spec)
    c = DescentConfig(L=2.0 / 4, nu=1.0, epsilon=1e-3, x0=[1.0, 0.5], f_star=0.75 - 100)
    tr = run(f, spec, c)
    v = verify_trace(tr, c)
    assert v.status == "FAIL"
    assert v.details["first_violation"] == 0


def test_run_raises_on_overflow():
    f = example51(NormSpec.l1(2))
    c = DescentConfig(L=0.25, nu=1.0, epsilon=1e-3, x0=[1.0, 0.5], f_star=0.75 - 100)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(DescentError):
            run(f, NormSpec.l1(2), c)


def test_run_asserts_decrease_with_known_constants():
    f = quad1d()
    f.known_constants[1.0] = type(f.known_constants[1.0])(1.0, 0.1, "computed", "wrong on purpose")
    c = DescentConfig(L=0.5, nu=1.0, epsilon=1e-3, x0=[1.0], f_star=0.0)
    with pytest.raises(DescentError):
        run(f, L2_1, c)


def test_trace_csv_and_summary():
    c = DescentConfig(L=2.0, nu=1.0, epsilon=1e-2, x0=[1.0], f_star=0.0)
    tr = run(quad1d(), L2_1, c)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "iteration,f,n_k,h_k"
    assert len(lines) == len(tr.records) + 1
    s = tr.summary()
    assert s["iterations"] == tr.iterations and s["termination"] == "converged"


def test_trace_is_reproducible():
    spec = NormSpec.linf(2)
    f = example51(spec)
    c = DescentConfig(L=2.0, nu=1.0, epsilon=1e-3, x0=[1.0, 0.5], f_star=-100.0)
    assert run(f, spec, c).to_csv() == run(f, spec, c).to_csv()


@pytest.mark.parametrize("nu", [0.25, 0.5, 0.75])
def test_power_family_with_known_L(nu):
    f = make_power(nu)
    L = f.known_constants[nu].L
    c = DescentConfig(L=L, nu=nu, epsilon=1e-3, x0=[1.5], f_star=0.0)
    tr = run(f, L2_1, c)
    v = verify_trace(tr, c)
    assert v.status == "PASS" and tr.reason == "converged"


def _telescoping_checks(tr, c):
    recs = tr.records
    total = sum(guaranteed_decrease(c, r.n) for r in recs[:-1])
    gap = recs[0].f - recs[-1].f
    assert total <= gap + 1e-9 * max(1.0, abs(recs[0].f))
    assert gap <= recs[0].f - c.f_star + 1e-12
    K = tr.iterations
    if K:
        nu, xi = c.nu, c.xi
        lhs = min(r.n for r in recs[:-1]) ** (1 + 1 / nu)
        rhs = (c.L / (1 + nu)) ** (1 / nu) * (recs[0].f - c.f_star) / (xi * (1 - xi ** nu)) / K
        assert lhs <= rhs * (1 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["l1", "l2", "linf"]),
       st.floats(0.2, 0.8))
def test_telescoping_on_psd_quadratics(seed, kind, xi):
    rng = np.random.default_rng(seed)
    spec = getattr(NormSpec, kind)(2)
    G = rng.standard_normal((2, 2))
    f = make_quadratic(G @ G.T + 0.1 * np.eye(2), spec)
    L = f.constants_for(1.0, spec).L
    c = DescentConfig(L=L, nu=1.0, epsilon=1e-3, x0=rng.uniform(-2, 2, 2), f_star=0.0, xi=xi)
    tr = run(f, spec, c)
    assert verify_trace(tr, c).status == "PASS"
    _telescoping_checks(tr, c)


def test_corpus_quadratics_pass():
    for f, spec in default_corpus(seed=0):
        known = f.constants_for(1.0, spec)
        if f.kind != "quadratic" or known is None or known.L == 0:
            continue
        x0 = np.linspace(1.0, 0.5, f.dim)
        f0 = float(f.value(x0))
        f_star = f.lower_bound if f.lower_bound is not None else f0 - 100
        c = DescentConfig(L=known.L, nu=1.0, epsilon=1e-3, x0=x0, f_star=f_star)
        tr = run(f, spec, c)
        v = verify_trace(tr, c)
        assert v.status == "PASS", (f.name, v.details)
        assert tr.iterations <= iteration_bound(c, f0)
