import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holderkit.corpus import (affine_shift, example51, make_cubic, make_linear, make_power,
                              make_quadratic)
from holderkit.holder import (HolderReport, SamplingConfig, approx_ratios, coefficient,
                              coefficient_convex, coefficient_euclidean, coefficient_general,
                              estimate_constants, figure1_csv, figure1_table, holder_ratio,
                              verify_bounds)
from holderkit.normed_space import NormSpec
from holderkit.quadnorms import operator_norm, quadratic_form_norm

LINF2 = NormSpec.linf(2)
SMALL = SamplingConfig(pairs=20_000, refine=60, elite=8)


def test_holder_ratio_examples():
    f = example51()
    assert holder_ratio(f, LINF2, 1.0, np.array([1.0, 1.0]), np.zeros(2)) == 4
    lin = make_linear([1.0, -3.0])
    assert holder_ratio(lin, LINF2, 0.5, np.array([1.0, 0.2]), np.array([-1.0, 0.7])) == 0
    p = make_power(0.5)
    assert np.isclose(holder_ratio(p, NormSpec.l2(1), 0.5, np.array([1.0]), np.array([-1.0])),
                      np.sqrt(2), rtol=1e-15)


def test_approx_ratio_examples():
    f = example51()
    rm, rp = approx_ratios(f, LINF2, 1.0, np.zeros(2), np.array([1.0, 0.0]))
    assert (rm, rp) == (0.0, 2.0)
    rng = np.random.default_rng(0)
    X, Y = rng.uniform(-2, 2, (2, 1000, 2))
    rm, rp = approx_ratios(f, LINF2, 1.0, X, Y)
    assert np.maximum(rm, rp).max() <= 2 + 1e-12
    G = rng.standard_normal((3, 3))
    psd = make_quadratic(G @ G.T)
    X, Y = rng.uniform(-2, 2, (2, 1000, 3))
    rm, rp = approx_ratios(psd, NormSpec.l1(3), 0.7, X, Y)
    assert np.all(rm == 0)


def test_exclusion_radius():
    f = example51()
    x = np.array([0.3, 0.4])
    with pytest.raises(ValueError):
        holder_ratio(f, LINF2, 1.0, x, x + 1e-9)
    with pytest.raises(ValueError):
        approx_ratios(f, LINF2, 1.0, x, x)


def test_coefficient_values():
    assert coefficient_general(1) == 2
    assert coefficient_general(0) == 2
    assert np.isclose(coefficient_general(0.5), np.sqrt(6), rtol=1e-15)
    assert coefficient_euclidean(1) == 1
    assert coefficient_euclidean(0) == 2
    assert np.isclose(coefficient_euclidean(0.25), 2 ** 0.75 / 1.25 ** 0.5 * 5 ** 0.125, rtol=1e-14)
    assert coefficient_convex(1) == 1
    assert coefficient_convex(0) == 1
    assert np.isclose(coefficient_convex(0.5), np.sqrt(3) / np.sqrt(2), rtol=1e-15)
    with pytest.raises(ValueError):
        coefficient_general(1.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1))
def test_coefficient_relations(nu):
    assert coefficient_convex(nu) == coefficient_general(nu) / 2
    assert coefficient_euclidean(nu) <= coefficient_general(nu) * (1 + 1e-15)
    assert coefficient(nu) == coefficient_general(nu)
    assert coefficient(nu, euclidean=True) == coefficient_euclidean(nu)


def test_coefficients_approach_two_at_zero():
    for nu in (1e-6, 1e-9):
        assert abs(coefficient_general(nu) - 2) < 1e-4
        assert abs(coefficient_euclidean(nu) - 2) < 1e-4


def test_figure1_table():
    rows = figure1_table(np.linspace(0.01, 1.0, 100))
    assert len(rows) == 100
    assert rows[-1] == (1.0, 2.0, 1.0)
    assert all(ce <= cg for _, cg, ce in rows)
    csv = figure1_csv(rows)
    assert csv.splitlines()[0] == "nu,c_general,c_euclidean"
    assert csv.splitlines()[-1] == "1,2,1"
    with pytest.raises(ValueError):
        figure1_table([0.0])


def test_verify_bounds_examples():
    rep = HolderReport(1.0, 4.0, 2.0, 0.0, 2.0)
    v = verify_bounds(rep, truth=(4.0, 2.0))
    assert v.status == "PASS" and v.details["ratio"] == 2 == coefficient_general(1)
    B = np.array([[2.0, 1.0], [1.0, -1.0]])
    rho = np.abs(np.linalg.eigvalsh(B)).max()
    v = verify_bounds(HolderReport(1.0, rho, rho, 0, rho), truth=(rho, rho), euclidean=True)
    assert v.status == "PASS" and v.details["ratio"] == 1
    assert verify_bounds(rep, truth=(1.0, 2.0)).status == "DATA_ERROR"
    # a lower bound above the truth is a failure
    assert verify_bounds(HolderReport(1.0, 4.5, 2.0, 0, 2.0), truth=(4.0, 2.0)).status == "FAIL"
    # Euclidean coefficient at nu = 1 is 1, so M = 2L breaks it
    assert verify_bounds(rep, truth=(4.0, 2.0), euclidean=True).status == "FAIL"


def test_verify_bounds_without_truth_is_diagnostic():
    v = verify_bounds(HolderReport(1.0, 3.9, 2.0, 0, 2.0))
    assert v.status == "CONSISTENT"
    assert "diagnostic" in v.message
    assert verify_bounds(HolderReport(1.0, 5.0, 2.0, 0, 2.0)).status == "INCONSISTENT"


def test_estimate_linear_is_zero():
    rep = estimate_constants(make_linear([1.0, -2.0]), NormSpec.l1(2), 0.5, SMALL)
    assert rep.M_lb == rep.L_lb == rep.Lminus_lb == rep.Lplus_lb == 0


def test_estimate_identity_quadratic():
    rep = estimate_constants(make_quadratic(np.eye(2)), NormSpec.l2(2), 1.0, SMALL)
    assert 0.99 <= rep.M_lb <= 1.0
    assert 0.99 <= rep.L_lb <= 1.0


def test_report_invariants():
    f = example51()
    rep = estimate_constants(f, LINF2, 0.6, SMALL)
    assert rep.L_lb == max(rep.Lminus_lb, rep.Lplus_lb)
    assert min(rep.M_lb, rep.L_lb, rep.Lminus_lb, rep.Lplus_lb) >= 0
    x, y = rep.witnesses["M"]
    assert abs(holder_ratio(f, LINF2, 0.6, x, y) - rep.M_lb) <= 1e-10
    x, y = rep.witnesses["Lminus"]
    assert abs(approx_ratios(f, LINF2, 0.6, x, y)[0] - rep.Lminus_lb) <= 1e-10
    x, y = rep.witnesses["Lplus"]
    assert abs(approx_ratios(f, LINF2, 0.6, x, y)[1] - rep.Lplus_lb) <= 1e-10
    d = rep.to_dict()
    assert "lower bound" in d["estimates_are"]


def test_estimate_is_deterministic():
    f = example51()
    a = estimate_constants(f, LINF2, 1.0, SMALL)
    b = estimate_constants(f, LINF2, 1.0, SMALL)
    assert a.to_dict() == b.to_dict()


def test_estimate_monotone_in_budget():
    f = make_power(0.5)
    spec = NormSpec.l2(1)
    small = estimate_constants(f, spec, 0.5, SamplingConfig(pairs=5_000, refine=0, chunk=5_000))
    big = estimate_constants(f, spec, 0.5, SamplingConfig(pairs=50_000, refine=0, chunk=5_000))
    refined = estimate_constants(f, spec, 0.5, SamplingConfig(pairs=50_000, refine=50, chunk=5_000))
    # reported values carry a floating-point error deduction of a few ulps
    slack = 1e-13
    for attr in ("M_lb", "Lminus_lb", "Lplus_lb"):
        assert getattr(big, attr) >= getattr(small, attr) - slack
        assert getattr(refined, attr) >= getattr(big, attr) - slack


@pytest.mark.parametrize("kind", ["l1", "linf", "l2"])
def test_estimates_match_exact_quadratic_norms(kind):
    rng = np.random.default_rng({"l1": 1, "linf": 2, "l2": 3}[kind])
    G = rng.standard_normal((3, 3))
    spec = getattr(NormSpec, kind)(3)
    B = G + G.T
    f = make_quadratic(B, spec)
    rep = estimate_constants(f, spec, 1.0)
    M, L = operator_norm(B, spec).value, quadratic_form_norm(B, spec).value
    assert M * 0.98 <= rep.M_lb <= M * (1 + 1e-12)
    assert L * 0.98 <= rep.L_lb <= L * (1 + 1e-12)


def test_cubic_estimates_grow_with_box():
    f = make_cubic()
    spec = NormSpec.l2(1)
    small = estimate_constants(f, spec, 1.0, SamplingConfig(pairs=5_000, refine=20, box=1.0))
    big = estimate_constants(f, spec, 1.0, SamplingConfig(pairs=5_000, refine=20, box=10.0))
    assert big.M_lb > 5 * small.M_lb


def _random_shift(rng, n):
    return rng.uniform(-1, 1, n), rng.uniform(-1, 1, n), rng.uniform(-1, 1)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["l1", "l2", "linf"]), st.floats(0.0, 1.0))
def test_affine_invariance_of_ratios(seed, kind, nu):
    rng = np.random.default_rng(seed)
    spec = getattr(NormSpec, kind)(2)
    G = rng.standard_normal((2, 2))
    f = make_quadratic(G + G.T)
    a, phi, c = _random_shift(rng, 2)
    g = affine_shift(f, a, phi, c)
    x, y = rng.uniform(-2, 2, (2, 2))
    if np.linalg.norm(x - y) < 1e-2:
        return
    assert math.isclose(holder_ratio(g, spec, nu, x - a, y - a), holder_ratio(f, spec, nu, x, y),
                        rel_tol=1e-10, abs_tol=1e-10)
    np.testing.assert_allclose(approx_ratios(g, spec, nu, x - a, y - a),
                               approx_ratios(f, spec, nu, x, y), rtol=1e-10, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 1.0))
def test_two_sided_decomposition(seed, nu):
    rng = np.random.default_rng(seed)
    f = make_power(nu)
    x, y = rng.uniform(-2, 2, (2, 1))
    if abs(x - y)[0] < 1e-3:
        return
    rm, rp = approx_ratios(f, NormSpec.l2(1), nu, x, y)
    assert min(rm, rp) == 0
    e = f.value(y) - f.value(x) - (y - x)[0] * f.gradient(x)[0]
    assert math.isclose(max(rm, rp), abs(e) * (1 + nu) / abs(x - y)[0] ** (1 + nu), rel_tol=1e-12)
