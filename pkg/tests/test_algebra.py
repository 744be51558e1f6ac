import numpy as np
import pytest

from dopiod.algebra import (
    RealInterval,
    TaylorPoly,
    algebra,
    constant_poly,
    make_variable,
)
from dopiod import algebra as ag


def poly_from(alg, terms):
    c = np.zeros(alg.size)
    for exps, val in terms.items():
        c[alg.index[exps]] = val
    return TaylorPoly(alg, c)


def test_make_variable_affine():
    p = make_variable(5.0, 0, 0.1, 1, 2)
    assert p.const == 5.0
    assert p.coefficient((1,)) == 0.1
    assert p.coefficient((2,)) == 0.0


def test_make_variable_pure_identity():
    p = make_variable(0.0, 2, 1.0, 3, 4)
    assert p.const == 0.0
    assert p.coefficient((0, 0, 1)) == 1.0
    assert np.count_nonzero(p.coeffs) == 1


def test_square_by_multiplication():
    p = make_variable(1.0, 0, 2.0, 1, 3)
    q = p * p
    assert q.coefficient((0,)) == 1.0
    assert q.coefficient((1,)) == 4.0
    assert q.coefficient((2,)) == 4.0
    assert q.coefficient((3,)) == 0.0


def test_mul_truncates():
    alg = algebra(1, 2)
    one_plus = poly_from(alg, {(0,): 1.0, (1,): 1.0})
    one_minus = poly_from(alg, {(0,): 1.0, (1,): -1.0})
    prod = one_plus * one_minus
    assert prod == poly_from(alg, {(0,): 1.0, (2,): -1.0})


def test_reciprocal_geometric_series():
    p = make_variable(1.0, 0, 1.0, 1, 3)
    inv = 1.0 / p
    expect = poly_from(p.alg, {(0,): 1.0, (1,): -1.0, (2,): 1.0, (3,): -1.0})
    assert np.allclose(inv.coeffs, expect.coeffs, atol=1e-14)


def test_self_division_is_one():
    p = make_variable(2.0, 0, 1.0, 1, 4)
    q = p / p
    assert np.allclose(q.coeffs, constant_poly(p.alg, 1.0).coeffs, atol=1e-15)


def test_sin_maclaurin():
    x = make_variable(0.0, 0, 1.0, 1, 3)
    s = ag.sin(x)
    assert np.isclose(s.coefficient((1,)), 1.0)
    assert np.isclose(s.coefficient((3,)), -1.0 / 6.0)
    assert s.const == 0.0


def test_sqrt_series():
    x = make_variable(1.0, 0, 1.0, 1, 2)
    r = ag.sqrt(x)
    assert np.isclose(r.const, 1.0)
    assert np.isclose(r.coefficient((1,)), 0.5)
    assert np.isclose(r.coefficient((2,)), -1.0 / 8.0)


def test_exp_log_inverse_pair():
    x = make_variable(1.0, 0, 1.0, 1, 5)
    y = ag.exp(ag.log(x))
    assert np.allclose(y.coeffs, x.coeffs, atol=1e-12)


def test_sin_cos_pythagorean_identity():
    x = make_variable(0.7, 0, 0.3, 2, 4) + make_variable(0.0, 1, 0.2, 2, 4)
    ident = ag.sin(x) * ag.sin(x) + ag.cos(x) * ag.cos(x)
    expect = constant_poly(x.alg, 1.0)
    assert np.linalg.norm(ident.coeffs - expect.coeffs) < 1e-12


def test_ring_axioms_random():
    rng = np.random.default_rng(3)
    alg = algebra(3, 4)
    a, b, c = (TaylorPoly(alg, rng.normal(size=alg.size)) for _ in range(3))
    assert np.allclose((a * b).coeffs, (b * a).coeffs, atol=1e-12)
    assert np.allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, atol=1e-10)
    assert np.allclose((a * (b + c)).coeffs, (a * b + a * c).coeffs, atol=1e-10)
    one = constant_poly(alg, 1.0)
    assert np.allclose((a * one).coeffs, a.coeffs)
    assert np.allclose((a + (-a)).coeffs, np.zeros(alg.size))


def test_eval_commutes_with_arithmetic():
    rng = np.random.default_rng(5)
    alg = algebra(2, 3)
    a = TaylorPoly(alg, rng.normal(size=alg.size))
    b = TaylorPoly(alg, rng.normal(size=alg.size))
    pt = rng.uniform(-0.3, 0.3, 2)
    assert np.isclose((a + b).eval(pt), a.eval(pt) + b.eval(pt), atol=1e-12)
    # products of truncated series only agree with the product of values
    # up to the dropped high-order terms; use small points
    assert np.isclose((a * b).eval(pt * 0.01), a.eval(pt * 0.01) * b.eval(pt * 0.01), atol=1e-6)


def test_eval_simple_cases():
    p = make_variable(1.0, 0, 2.0, 1, 2)
    assert p.eval([0.0]) == 1.0
    q = poly_from(p.alg, {(0,): 1.0, (1,): 2.0, (2,): 1.0})
    assert np.isclose(q.eval([0.5]), 2.25)


def test_eval_matches_monomial_sum_oracle():
    rng = np.random.default_rng(11)
    alg = algebra(3, 4)
    p = TaylorPoly(alg, rng.normal(size=alg.size))
    for _ in range(20):
        pt = rng.uniform(-1, 1, 3)
        ref = sum(
            c * np.prod(pt ** np.asarray(e))
            for c, e in zip(p.coeffs, alg.exps)
        )
        assert np.isclose(p.eval(pt), ref, atol=1e-10)


def test_bound_linear():
    p = make_variable(1.0, 0, 2.0, 1, 2)
    b = p.bound()
    assert b.lo <= -1.0 and b.hi >= 3.0


def test_bound_square_encloses():
    alg = algebra(1, 2)
    p = poly_from(alg, {(2,): 1.0})
    b = p.bound()
    assert b.lo <= 0.0 and b.hi >= 1.0


def test_bound_contains_sampled_range():
    rng = np.random.default_rng(7)
    alg = algebra(2, 3)
    for _ in range(10):
        p = TaylorPoly(alg, rng.normal(size=alg.size))
        pts = rng.uniform(-1, 1, size=(10_000, 2))
        vals = p.eval_many(pts)
        b = p.bound()
        assert b.lo <= vals.min() + 1e-12
        assert b.hi >= vals.max() - 1e-12


def test_derivative_simple():
    alg = algebra(2, 3)
    p = poly_from(alg, {(2, 0): 1.0})
    dx = p.derivative(0)
    assert dx.coefficient((1, 0)) == 2.0
    assert np.count_nonzero(dx.coeffs) == 1
    assert np.count_nonzero(p.derivative(1).coeffs) == 0


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(13)
    alg = algebra(2, 4)
    p = TaylorPoly(alg, rng.normal(size=alg.size))
    h = 1e-6
    for _ in range(10):
        pt = rng.uniform(-0.5, 0.5, 2)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd = (p.eval(pt + e) - p.eval(pt - e)) / (2 * h)
            an = p.derivative(j).eval(pt)
            assert abs(fd - an) <= 1e-6 * max(1.0, abs(an))


def test_truncated_drops_high_orders():
    alg = algebra(1, 4)
    p = poly_from(alg, {(0,): 1.0, (2,): 3.0, (4,): 5.0})
    t = p.truncated(2)
    assert t.coefficient((4,)) == 0.0
    assert t.coefficient((2,)) == 3.0


def test_immutability_and_validation():
    alg = algebra(1, 2)
    p = constant_poly(alg, 1.0)
    with pytest.raises(AttributeError):
        p.const_ = 2.0
    with pytest.raises(ValueError):
        TaylorPoly(alg, [1.0, np.nan, 0.0])
    with pytest.raises(ValueError):
        TaylorPoly(alg, [1.0])


def test_real_interval():
    iv = RealInterval(-1.0, 3.0)
    assert iv.contains(0.0) and not iv.contains(4.0)
    assert iv.mid == 1.0 and iv.half_width == 2.0
    with pytest.raises(ValueError):
        RealInterval(1.0, 0.0)
    assert iv.hull(RealInterval(2.0, 5.0)) == RealInterval(-1.0, 5.0)


def test_elementary_functions_on_floats():
    assert np.isclose(ag.sqrt(4.0), 2.0)
    assert np.isclose(ag.atan2(1.0, 1.0), np.pi / 4)
    assert np.isclose(ag.exp(0.0), 1.0)
