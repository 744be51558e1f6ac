import numpy as np
import pytest

from dopiod import algebra as ag
from dopiod.ads import (
    AdsConfig,
    Manifold,
    SubDomain,
    choose_split_direction,
    run_ads,
    truncation_error,
)
from dopiod.algebra import TaylorPoly, algebra, make_variable
from dopiod.maps import TaylorMap


def poly_from(alg, terms):
    c = np.zeros(alg.size)
    for exps, val in terms.items():
        c[alg.index[exps]] = val
    return TaylorPoly(alg, c)


def test_truncation_error_no_top_terms():
    p = make_variable(1.0, 0, 1.0, 1, 4)
    assert truncation_error(p) == 0.0


def test_truncation_error_pure_top():
    alg = algebra(1, 4)
    assert truncation_error(poly_from(alg, {(4,): 1.0})) == 1.0


def test_truncation_error_sums_absolute_values():
    alg = algebra(2, 4)
    p = poly_from(alg, {(4, 0): 2.0, (2, 2): -3.0})
    assert truncation_error(p) == 5.0


def test_split_direction_single_variable_mass():
    alg = algebra(2, 4)
    m = TaylorMap([poly_from(alg, {(4, 0): 1.0})])
    assert choose_split_direction(m) == 0


def test_split_direction_prefers_larger_mass():
    alg = algebra(2, 4)
    m = TaylorMap([poly_from(alg, {(4, 0): 1.0, (0, 4): 3.0})])
    assert choose_split_direction(m) == 1


def test_split_direction_tie_breaks_low_index():
    alg = algebra(2, 4)
    m = TaylorMap([poly_from(alg, {(4, 0): 2.0, (0, 4): 2.0})])
    assert choose_split_direction(m) == 0


def test_subdomain_split_and_locals():
    root = SubDomain.root(2)
    lo, hi = root.split(1)
    assert np.allclose(lo.center, [0.0, -0.5]) and np.allclose(lo.half_width, [1.0, 0.5])
    assert np.allclose(hi.center, [0.0, 0.5])
    assert lo.split_counts == (0, 1) and hi.path.endswith("1R")
    p = [0.3, -0.75]
    assert lo.contains(p) and not hi.contains(p)
    assert np.allclose(lo.to_local(p), [0.3, -0.5])


def test_subdomain_serialization_round_trip():
    d = SubDomain.root(3).split(0)[1].split(2)[0]
    d2 = SubDomain.from_dict(d.to_dict())
    assert np.allclose(d.center, d2.center)
    assert d.path == d2.path and d.split_counts == d2.split_counts


def make_generator(fn, num_vars, order):
    """Generator that re-expands fn over each subdomain in local coords."""

    def gen(domain):
        xs = [
            make_variable(domain.center[j], j, domain.half_width[j], num_vars, order)
            for j in range(num_vars)
        ]
        return TaylorMap([fn(*xs)])

    return gen


def test_run_ads_linear_map_single_entry():
    gen = make_generator(lambda x: 3.0 * x + 1.0, 1, 4)
    man = run_ads(gen, 1, AdsConfig(tolerances=(1e-12,), max_splits=5, order=4))
    assert man.n_sets == 1
    assert man.all_converged
    assert man.entries[0].domain.path == ""


def test_run_ads_splits_and_partitions():
    gen = make_generator(lambda x: ag.exp(5.0 * x), 1, 4)
    man = run_ads(gen, 1, AdsConfig(tolerances=(1e-3,), max_splits=8, order=4))
    assert man.n_sets > 1
    assert man.all_converged
    # exact partition of [-1, 1]: ordered, contiguous, disjoint
    edges = sorted(
        (e.domain.center[0] - e.domain.half_width[0], e.domain.center[0] + e.domain.half_width[0])
        for e in man.entries
    )
    assert np.isclose(edges[0][0], -1.0) and np.isclose(edges[-1][1], 1.0)
    for (_, hi), (lo, _) in zip(edges, edges[1:]):
        assert np.isclose(hi, lo)
    # accuracy on the converged manifold
    for x in np.linspace(-1, 1, 41):
        assert np.isclose(man.eval([x])[0], np.exp(5 * x), rtol=2e-3, atol=2e-3)


def test_run_ads_budget_exhaustion():
    gen = make_generator(lambda x: ag.exp(5.0 * x), 1, 4)
    man = run_ads(gen, 1, AdsConfig(tolerances=(1e-12,), max_splits=0, order=4))
    assert man.n_sets == 1
    assert not man.all_converged
    assert man.entries[0].status == "budget_exhausted"


def test_run_ads_records_failures():
    def gen(domain):
        if domain.center[0] > 0.4:
            raise ValueError("synthetic failure")
        xs = make_variable(domain.center[0], 0, domain.half_width[0], 1, 4)
        return TaylorMap([ag.exp(5.0 * xs)])

    man = run_ads(gen, 1, AdsConfig(tolerances=(1e-3,), max_splits=8, order=4))
    statuses = {e.status for e in man.entries}
    assert "failed" in statuses and "converged" in statuses


def test_find_entry_unique_covering():
    gen = make_generator(lambda x, y: ag.exp(3.0 * x) + y * y, 2, 4)
    man = run_ads(gen, 2, AdsConfig(tolerances=(1e-3,), max_splits=6, order=4))
    rng = np.random.default_rng(0)
    for pt in rng.uniform(-1, 1, size=(200, 2)):
        covering = [e for e in man.entries if e.domain.contains(pt)]
        assert len(covering) >= 1
        assert man.find_entry(pt) is covering[0]
    # total volume equals the root box volume
    assert np.isclose(sum(e.domain.volume() for e in man.entries), 4.0)


def test_manifold_serialization_round_trip():
    gen = make_generator(lambda x: ag.sin(2.0 * x), 1, 4)
    man = run_ads(gen, 1, AdsConfig(tolerances=(1e-5,), max_splits=6, order=4))
    man2 = Manifold.from_dict(man.to_dict())
    assert man2.n_sets == man.n_sets
    for x in np.linspace(-0.9, 0.9, 7):
        assert np.allclose(man.eval([x]), man2.eval([x]))


def test_manifold_rejects_unknown_format():
    gen = make_generator(lambda x: 2.0 * x, 1, 4)
    man = run_ads(gen, 1, AdsConfig(tolerances=(1.0,), max_splits=1, order=4))
    d = man.to_dict()
    d["format"] = "dopiod.manifold/999"
    with pytest.raises(ValueError):
        Manifold.from_dict(d)


def test_tolerance_length_must_match_outputs():
    gen = make_generator(lambda x: 2.0 * x, 1, 4)
    with pytest.raises(ValueError):
        run_ads(gen, 1, AdsConfig(tolerances=(1.0, 1.0), max_splits=1, order=4))
