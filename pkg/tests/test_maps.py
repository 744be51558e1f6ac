import numpy as np
import pytest

from dopiod.algebra import TaylorPoly, algebra, make_variable
from dopiod.maps import TaylorMap, identity_map


def poly_from(alg, terms):
    c = np.zeros(alg.size)
    for exps, val in terms.items():
        c[alg.index[exps]] = val
    return TaylorPoly(alg, c)


def test_compose_square_with_scaling():
    alg = algebra(1, 2)
    outer = TaylorMap([poly_from(alg, {(2,): 1.0})])
    inner = TaylorMap([make_variable(0.0, 0, 2.0, 1, 2)])
    out = outer.compose(inner)
    assert np.isclose(out[0].coefficient((2,)), 4.0)
    assert np.count_nonzero(out[0].coeffs) == 1


def test_compose_with_identity():
    rng = np.random.default_rng(0)
    alg = algebra(2, 3)
    m = TaylorMap([TaylorPoly(alg, rng.normal(size=alg.size) * np.where(alg.deg > 0, 1.0, 0.0)) for _ in range(2)])
    out = m.compose(identity_map(2, 3))
    for a, b in zip(out.outputs, m.outputs):
        assert np.allclose(a.coeffs, b.coeffs, atol=1e-13)


def test_compose_affine_outer():
    alg = algebra(1, 2)
    outer = TaylorMap([poly_from(alg, {(0,): 1.0, (1,): 1.0})])
    inner = TaylorMap([poly_from(alg, {(1,): 1.0, (2,): 1.0})])
    out = outer.compose(inner)
    expect = poly_from(alg, {(0,): 1.0, (1,): 1.0, (2,): 1.0})
    assert np.allclose(out[0].coeffs, expect.coeffs)


def test_compose_rejects_nonzero_inner_constant():
    alg = algebra(1, 2)
    outer = TaylorMap([poly_from(alg, {(1,): 1.0})])
    inner = TaylorMap([make_variable(0.5, 0, 1.0, 1, 2)])
    with pytest.raises(ValueError):
        outer.compose(inner)
    # explicit opt-in shifts the expansion point
    out = outer.compose(inner, allow_const=True)
    assert np.isclose(out[0].const, 0.5)


def test_invert_linear():
    m = TaylorMap([make_variable(0.0, 0, 2.0, 1, 3)])
    inv = m.invert()
    assert np.isclose(inv[0].coefficient((1,)), 0.5)


def test_invert_series_reversion():
    alg = algebra(1, 2)
    m = TaylorMap([poly_from(alg, {(1,): 1.0, (2,): 1.0})])
    inv = m.invert()
    assert np.isclose(inv[0].coefficient((1,)), 1.0)
    assert np.isclose(inv[0].coefficient((2,)), -1.0)
    rt = m.compose(inv)
    assert np.allclose(rt.coeff_matrix(), identity_map(1, 2).coeff_matrix(), atol=1e-13)


def test_invert_round_trip_random_quadratic():
    rng = np.random.default_rng(21)
    alg = algebra(2, 4)
    for _ in range(5):
        lin = np.eye(2) + 0.2 * rng.normal(size=(2, 2))
        rows = []
        for i in range(2):
            c = 0.1 * rng.normal(size=alg.size)
            c *= (alg.deg >= 2) & (alg.deg <= 2)
            c[alg.index[(1, 0)]] = lin[i, 0]
            c[alg.index[(0, 1)]] = lin[i, 1]
            c[0] = 0.0
            rows.append(TaylorPoly(alg, c))
        m = TaylorMap(rows)
        inv = m.invert()
        rt = m.compose(inv)
        err = np.linalg.norm(rt.coeff_matrix() - identity_map(2, 4).coeff_matrix())
        assert err < 1e-10


def test_invert_requires_invertible_linear_part():
    alg = algebra(2, 2)
    m = TaylorMap([poly_from(alg, {(1, 0): 1.0}), poly_from(alg, {(1, 0): 1.0})])
    with pytest.raises(ValueError):
        m.invert()


def test_eval_and_jacobian():
    m = TaylorMap(
        [make_variable(1.0, 0, 2.0, 2, 2), make_variable(-1.0, 1, 3.0, 2, 2)]
    )
    assert np.allclose(m.eval([0.5, 0.5]), [2.0, 0.5])
    assert np.allclose(m.jacobian(), [[2.0, 0.0], [0.0, 3.0]])
    assert np.allclose(m.constants(), [1.0, -1.0])


def test_serialization_round_trip():
    rng = np.random.default_rng(4)
    alg = algebra(2, 3)
    m = TaylorMap([TaylorPoly(alg, rng.normal(size=alg.size)) for _ in range(3)])
    d = m.to_dict()
    m2 = TaylorMap.from_dict(d)
    assert np.allclose(m.coeff_matrix(), m2.coeff_matrix())


def test_serialization_rejects_unknown_version():
    m = identity_map(1, 2)
    d = m.to_dict()
    d["format"] = "dopiod.taylor_map/999"
    with pytest.raises(ValueError):
        TaylorMap.from_dict(d)
