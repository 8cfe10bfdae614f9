import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from keller_lab.domains import (BUNDLE_SIZE, CharacteristicDomain, DomainInvariantError, build_domain,
                                build_thick_star, equality_witness, van_der_corput, verify_domain,
                                witness_is_sound)
from keller_lab.families import random_map
from keller_lab.poly import BivarPoly, PolyMap, parse_map


def test_thick_star_smallest():
    s = build_thick_star(0, 1, 0.5)
    assert len(s.triangles) == 2


def _segments_cross(a, b, c, d):
    def orient(p, q, r):
        return (q.real - p.real) * (r.imag - p.imag) - (q.imag - p.imag) * (r.real - p.real)
    return orient(a, b, c) * orient(a, b, d) < 0 and orient(c, d, a) * orient(c, d, b) < 0


def test_thick_star_triangles_meet_only_at_center():
    s = build_thick_star(Fraction(1, 4), 3, 0.2, 0.1)
    assert len(s.triangles) == 6
    rng = np.random.default_rng(0)
    # sample interior points of each triangle; none lies in another triangle
    for i, t in enumerate(s.triangles):
        for _ in range(200):
            u, v = rng.random(2)
            if u + v > 1:
                u, v = 1 - u, 1 - v
            p = t[0] + u * (t[1] - t[0]) + v * (t[2] - t[0])
            if abs(p - t[0]) < 1e-9:
                continue
            owners = [k for k, t2 in enumerate(s.triangles) if s.contains(p) and _tri(p, t2)]
            assert owners == [i]
        for k, t2 in enumerate(s.triangles):
            if k != i:
                for e1 in ((t[1], t[2]), (t[0], t[1]), (t[0], t[2])):
                    for e2 in ((t2[1], t2[2]), (t2[0], t2[1]), (t2[0], t2[2])):
                        assert not _segments_cross(*e1, *e2)


def _tri(p, t):
    from keller_lab.domains import _in_triangle
    return _in_triangle(p, t)


def test_thick_star_rejects_zero_ray():
    with pytest.raises(ValueError):
        build_thick_star(0, 2, 0.0)


def test_smallest_domain():
    d = build_domain(4, 1, 5)
    assert len(d.slices) == 1 and len(d.slices[0].bundles) == 1


def test_valence_partition():
    d = build_domain(8, 2, 10)
    v0, v1 = set(d.slices[0].valences), set(d.slices[1].valences)
    assert not v0 & v1
    assert all(len(b) == BUNDLE_SIZE for b in d.slices[0].bundles)


def test_bundle_decay():
    d = build_domain(8, 1, 15)
    b = d.slices[0].bundles
    m = [max(t.max_ray_length for t in bundle) for bundle in b]
    assert m[1] <= m[0] / 10 and m[2] <= m[1] / 10


def test_z_sequence_converges_to_limit():
    d = build_domain(8, 6, 5)
    zs = d.z_sequence
    assert len(set(zs)) == 6
    gaps = [abs(z - d.limit) for z in zs]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


@given(st.integers(1, 5), st.integers(1, 25), st.floats(0.5, 50))
@settings(max_examples=30)
def test_invariants_hold_across_sizes(slices, stars, radius):
    d = build_domain(radius, slices, stars)
    verify_domain(d)
    for s in d.slices:
        for t in s.stars:
            assert s.segment[0] <= t.center <= s.segment[1]


def test_verify_catches_overlap():
    d = build_domain(8, 1, 5)
    s = d.slices[0]
    bad_star = build_thick_star(s.stars[0].center, s.stars[0].m, 10.0)
    from dataclasses import replace
    broken = replace(d, slices=(replace(s, stars=(bad_star,) + s.stars[1:]),))
    with pytest.raises(DomainInvariantError):
        verify_domain(broken)


def test_contains_examples():
    d = build_domain(8, 3, 10)
    assert d.contains((0, 0))
    s = d.slices[1]
    assert not d.contains((float(s.z), complex(s.stars[3].center)))
    assert not d.contains((float(s.z), complex(s.segment[0]) * 0.5))
    assert d.contains((float(s.z) + 1e-9, complex(s.stars[3].center)))
    assert not d.contains((9, 0))
    pts = np.array([[0, 0], [float(s.z), complex(s.stars[3].center)], [9, 0]], complex)
    assert d.contains_many(pts).tolist() == [True, False, False]


def test_polydisk_shape():
    d = build_domain(1, 1, 5, shape="polydisk")
    assert d.contains((0.9, 0.9j)) and not d.contains((1.1, 0))
    assert d.volume() == pytest.approx(math.pi ** 2)
    assert build_domain(2, 1, 5).volume() == pytest.approx(math.pi ** 2 * 16 / 2)


def test_json_round_trip():
    d = build_domain(8, 3, 10, seed_geometry=0.3)
    e = CharacteristicDomain.from_json(json.loads(d.dumps()))
    assert e == d and e.dumps() == d.dumps()


def test_van_der_corput_dyadic():
    assert [van_der_corput(k) for k in range(1, 6)] == [Fraction(1, 2), Fraction(1, 4), Fraction(3, 4),
                                                         Fraction(1, 8), Fraction(5, 8)]


def test_witness_equal_maps():
    d = build_domain(8, 4, 5)
    f = parse_map("X^2 - Y", "X*Y + 3")
    assert equality_witness(f, f, d, 3)


def test_witness_degree_bound_violation():
    d = build_domain(8, 3, 5)
    X, Y = BivarPoly.x(), BivarPoly.y()
    prod = BivarPoly.one()
    for z in d.z_sequence:
        prod = prod * (X - z)
    f2 = PolyMap(X, Y + X * prod)
    with pytest.raises(ValueError, match="degree_bound"):
        equality_witness(PolyMap.identity(), f2, d, 2)


def test_witness_one_coefficient_difference():
    d = build_domain(8, 4, 5)
    f = parse_map("X^2 - Y", "X*Y + 3")
    g = parse_map("X^2 - Y", "X*Y + 3 + 1/1000*X^3")
    assert not equality_witness(f, g, d, 3)


def test_witness_needs_enough_slices():
    d = build_domain(8, 2, 5)
    with pytest.raises(ValueError):
        equality_witness(PolyMap.identity(), PolyMap.identity(), d, 3)


def test_witness_soundness_random():
    d = build_domain(8, 4, 5)
    rng = np.random.default_rng(1)
    for _ in range(30):
        f, g = random_map(rng, 3, 4), random_map(rng, 3, 4)
        assert witness_is_sound(f, g, d, 3)
