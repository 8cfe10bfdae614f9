import math

import numpy as np
import pytest

from keller_lab.domains import build_domain
from keller_lab.families import random_small_automorphism, shear, translation
from keller_lab.poly import PolyMap, parse_map
from keller_lab.volume import (DegenerateOverflowError, PreconditionError, combined_sigma,
                               contraction_experiment, domain_volume, geometric_volume, jacobian_volume,
                               mult_volume, preimage_count_volume, rho, sample_domain, volume_bounds_check)

BALL = build_domain(2.0, 2, 5)
POLY = build_domain(1.0, 1, 5, shape="polydisk")
N = 20_000


def _ball4_lens(radius: float, dist: float, steps: int = 200_001) -> float:
    """Volume of the intersection of two 4-balls (radius, centres ``dist`` apart), by quadrature."""
    h = dist / 2
    x = np.linspace(h, radius, steps)
    slab = 4 / 3 * math.pi * np.clip(radius ** 2 - x ** 2, 0, None) ** 1.5
    return 2 * float(np.sum((slab[1:] + slab[:-1]) / 2 * np.diff(x)))


def test_rho_self_is_zero():
    g = random_small_automorphism(np.random.default_rng(0))
    est = rho(g, g, BALL, N, 3)
    assert est.value == 0.0 and est.std_error == 0.0


def test_rho_symmetric_exactly():
    rng = np.random.default_rng(1)
    g1, g2 = random_small_automorphism(rng), random_small_automorphism(rng)
    a, b = rho(g1, g2, BALL, N, 5), rho(g2, g1, BALL, N, 5)
    assert a.value == b.value and a.std_error == b.std_error
    assert (a.g1_side, a.g2_side) == (b.g2_side, b.g1_side)


def test_rho_deterministic_and_thread_independent():
    rng = np.random.default_rng(2)
    g1, g2 = random_small_automorphism(rng), random_small_automorphism(rng)
    a = rho(g1, g2, BALL, N, 9, threads=1)
    b = rho(g1, g2, BALL, N, 9, threads=4)
    assert a == b


def test_value_is_sum_of_sides():
    est = rho(PolyMap.identity(), translation(1, 0), BALL, N, 1)
    assert est.value == est.g1_side + est.g2_side


def test_translation_matches_two_ball_oracles():
    c = 1
    est = rho(PolyMap.identity(), translation(c, 0), BALL, 50_000, 11)
    # analytic: 2 (vol B - vol(B ∩ (B + c)))
    exact = 2 * (BALL.volume() - _ball4_lens(BALL.radius, c))
    assert abs(est.value - exact) <= 3 * est.std_error
    # direct Monte Carlo with exact ball membership, no fiber solver
    z = sample_domain(BALL, 200_000, 77)
    r = BALL.radius
    ind = (np.sqrt(np.abs(z[:, 0] - c) ** 2 + np.abs(z[:, 1]) ** 2) >= r).astype(float) \
        + (np.sqrt(np.abs(z[:, 0] + c) ** 2 + np.abs(z[:, 1]) ** 2) >= r)
    oracle = BALL.volume() * ind.mean()
    oracle_se = BALL.volume() * ind.std(ddof=1) / math.sqrt(ind.size)
    assert abs(est.value - oracle) <= 3 * combined_sigma(est.std_error, oracle_se)


def test_keller_jacobian_volume_exact():
    g = shear([0, 1, -2])
    est = jacobian_volume(g, BALL, N, 0)
    assert est.value == BALL.volume() and est.std_error == 0.0


def test_power_map_volumes():
    rep = mult_volume(parse_map("X^2", "Y"), POLY, 50_000, 4)
    assert abs(rep.mult_vol - 2 * math.pi ** 2) <= 3 * rep.mult_se
    assert abs(rep.geometric_vol - math.pi ** 2) <= 3 * rep.geometric_se
    assert rep.consistent()
    assert rep.excess == rep.mult_vol - rep.geometric_vol


def test_multiplicity_oracle_agrees():
    g = parse_map("X^2 + Y", "Y^2 - X")
    a = jacobian_volume(g, POLY, 50_000, 1)
    b = preimage_count_volume(g, POLY, 50_000, 2)
    assert abs(a.value - b.value) <= 3 * combined_sigma(a.std_error, b.std_error)


def test_automorphism_excess_vanishes():
    g = shear([0, 0, 1])
    rep = mult_volume(g, BALL, N, 6)
    assert rep.mult_vol == BALL.volume()
    assert abs(rep.excess) <= 3 * rep.excess_se


def test_min_samples():
    with pytest.raises(PreconditionError):
        rho(PolyMap.identity(), PolyMap.identity(), BALL, 100, 0)


def test_domain_volume_ball():
    d = build_domain(8.0, 3, 10)
    est = domain_volume(d, 200_000, 3)
    assert abs(est.value - math.pi ** 2 * 8 ** 4 / 2) <= 3 * est.std_error


def test_samples_avoid_star_set():
    z = sample_domain(BALL, 10_000, 1)
    assert BALL.contains_many(z).all()


def test_degenerate_overflow():
    g1 = parse_map("X + Y", "(X + Y)^2")
    g2 = parse_map("X + 2*Y", "(X + 2*Y)^2")
    with pytest.raises(DegenerateOverflowError):
        rho(g1, g2, BALL, 10_000, 0)


def test_contraction_automorphism_isometric():
    rng = np.random.default_rng(3)
    f, g1, g2 = (random_small_automorphism(rng) for _ in range(3))
    rep = contraction_experiment(f, g1, g2, BALL, N, 2, d_f=1)
    assert rep.holds and rep.keller
    assert rep.ratio == pytest.approx(1.0, abs=0.05)


def test_contraction_trivial_case():
    f = parse_map("X^2", "Y")
    rep = contraction_experiment(f, f, f, BALL, N, 0, d_f=2)
    assert rep.lhs.value == 0.0 and rep.rhs.value == 0.0


def test_contraction_set_containment_for_non_keller():
    rng = np.random.default_rng(4)
    g1, g2 = random_small_automorphism(rng), random_small_automorphism(rng)
    rep = contraction_experiment(parse_map("X^2", "Y"), g1, g2, BALL, N, 5, d_f=2)
    assert rep.weighted_holds and not rep.keller


def test_bounds_shear_preserves_volume():
    d = build_domain(1.0, 1, 5)
    rep = volume_bounds_check(shear([0, 0, 1]), d, 50_000, 8, d_f=1)
    assert rep.holds
    assert abs(rep.image.value - d.volume()) <= 3 * rep.image.std_error


def test_bounds_rejects_non_keller():
    with pytest.raises(PreconditionError):
        volume_bounds_check(parse_map("X^2", "Y"), BALL, N, 0)


def test_geometric_volume_of_identity():
    d = build_domain(1.0, 1, 5)
    est = geometric_volume(PolyMap.identity(), d, 50_000, 2)
    assert abs(est.value - d.volume()) <= 3 * est.std_error
