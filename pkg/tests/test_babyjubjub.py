import random

from expresso import babyjubjub as ec

from .reference import naive_ec


def test_committed_constants():
    assert ec.on_curve(ec.BASE)
    assert ec.on_curve(ec.FULL_GEN)
    assert ec.on_curve(ec.IDENTITY)
    assert ec.mul_by_cofactor(ec.FULL_GEN) == ec.BASE
    assert ec.is_identity(ec.mul(ec.BASE, ec.Q))


def test_addition_against_reference():
    rng = random.Random(20)
    for _ in range(20):
        p = ec.mul(ec.BASE, rng.randrange(1, ec.Q))
        q = ec.mul(ec.BASE, rng.randrange(1, ec.Q))
        assert ec.add(p, q) == naive_ec.add(p, q)


def test_small_scalars_match_repeated_addition():
    for k in range(12):
        assert ec.mul(ec.BASE, k) == naive_ec.repeated_add(ec.BASE, k)


def test_group_law():
    p = ec.mul(ec.BASE, 123)
    q = ec.mul(ec.BASE, 456)
    assert ec.add(p, q) == ec.add(q, p)
    assert ec.add(p, ec.IDENTITY) == p
    assert ec.add(p, ec.neg(p)) == ec.IDENTITY


def test_low_order_points():
    torsion = ec.mul(ec.FULL_GEN, ec.Q)
    assert not ec.is_identity(torsion)
    assert ec.is_low_order(torsion)
    assert not ec.is_low_order(ec.BASE)
    assert ec.is_low_order(ec.IDENTITY)
    # the order-8 subgroup enumerates exactly 8 elements
    elems = naive_ec.subgroup_elements(torsion, 8)
    assert len(set(elems)) == 8


def test_prime_subgroup_membership():
    assert ec.in_prime_subgroup(ec.BASE)
    assert ec.in_prime_subgroup(ec.mul(ec.BASE, 7777))
    assert not ec.in_prime_subgroup(ec.FULL_GEN)
    assert not ec.in_prime_subgroup((1, 2))  # off curve
