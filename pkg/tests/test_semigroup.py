import numpy as np
import pytest

from keller_lab.families import (X, Y, random_power_map, random_shear_composite, shear, triangular,
                                 univariate)
from keller_lab.poly import PolyMap, compose, equal_exact, parse_map
from keller_lab.semigroup import (DegreeCapError, bn_sampler, classify_degree, coincidence_points,
                                  degree_multiplicativity, iterate, left_injectivity_probe,
                                  primality_classify, random_distinct_pair, right_injectivity_probe)
from keller_lab.sampling import substream

P23 = parse_map("X^2", "Y^3")


def test_pairs_are_distinct():
    for t in range(50):
        g, h = random_distinct_pair(substream(0, 5, t))
        assert not equal_exact(g, h)


def test_constant_shift_composites_differ():
    f = parse_map("X^2 + Y", "X*Y")
    g = parse_map("X + Y", "Y")
    h = PolyMap(g.p + 1, g.q)
    assert not equal_exact(compose(g, f), compose(h, f))


def test_right_probe_random_map():
    rng = np.random.default_rng(0)
    f = random_shear_composite(rng, max_total_degree=6)
    probe = right_injectivity_probe(f, 100, 1)
    assert probe.passed and len(probe.verdicts) == 100


def test_left_probe_keller_map():
    f = shear([0, 1, 1])
    probe = left_injectivity_probe(f, 100, 2)
    assert probe.passed and not probe.coincidences


def test_left_probe_distinctness_by_inversion():
    # f = (Y, -X + Y^2) has inverse (-Y + X^2, X); f∘g = f∘h forces g = h
    f = parse_map("Y", "-X + Y^2")
    inv = parse_map("-Y + X^2", "X")
    assert equal_exact(compose(inv, f), PolyMap.identity())
    probe = left_injectivity_probe(f, 20, 3)
    for g, _ in probe.pairs:
        assert equal_exact(compose(inv, compose(f, g)), g)


def test_coincidence_points():
    g = parse_map("X", "Y")
    h = parse_map("X", "Y + X*Y")
    pts = coincidence_points(g, h, grid=5)
    assert pts and all(x == 0 or y == 0 for x, y in pts)


def test_classification_examples():
    assert primality_classify(shear([0, 0, 1])).classification == "unit"
    rep = primality_classify(P23)
    assert (rep.d, rep.classification) == (6, "composite-degree")
    rep = primality_classify(parse_map("X^2", "Y"))
    assert (rep.d, rep.classification) == (2, "prime-degree") and rep.implies_prime_map


def test_classify_degree_table():
    assert [classify_degree(d) for d in (1, 2, 3, 4, 9, 11)] == [
        "unit", "prime-degree", "prime-degree", "composite-degree", "composite-degree", "prime-degree"]
    with pytest.raises(ValueError):
        classify_degree(0)


def test_iterate_examples():
    assert equal_exact(iterate(PolyMap.identity(), 5), PolyMap.identity())
    assert equal_exact(iterate(P23, 2), parse_map("X^4", "Y^9"))
    p = univariate([1, 0, 2])
    assert equal_exact(iterate(PolyMap(X + p, Y), 3), PolyMap(X + p * 3, Y))


def test_iterate_cap():
    with pytest.raises(DegreeCapError) as err:
        iterate(P23, 6, cap=100)
    assert err.value.required == 3 ** 6
    with pytest.raises(ValueError):
        iterate(P23, 0)


def test_iterate_degree_growth():
    rng = np.random.default_rng(3)
    for _ in range(5):
        f = random_shear_composite(rng, max_total_degree=4, max_factor_degree=2, max_factors=2)
        for n in (1, 2, 3):
            assert iterate(f, n).degree <= f.degree ** n


def test_bn_automorphism():
    rep = bn_sampler(triangular([0, 0, 1]), 1, grid=8)
    assert rep.histogram == {1: 64} and rep.nested


def test_bn_power_map():
    rep = bn_sampler(P23, 6, grid=10)
    assert rep.dense and rep.nested and rep.d_f == 6


def test_bn_nesting_counts_monotone():
    rep = bn_sampler(parse_map("X^2 + Y", "Y^2"), 4, grid=6)
    assert rep.b_counts == sorted(rep.b_counts)
    assert rep.b_counts[-1] == rep.samples


def test_degree_multiplicativity_power_family():
    rng = np.random.default_rng(12)
    for _ in range(3):
        f, g = random_power_map(rng, 2), random_power_map(rng, 2)
        assert degree_multiplicativity(f, g, 25, 1).holds
