import random

from expresso import bn254 as b
from expresso import pairing as pr
from expresso.fields import P, R

rng = random.Random(13)


def test_twist_frobenius_is_multiplication_by_p():
    # On the R-order subgroup the untwist-Frobenius-twist endomorphism acts
    # as multiplication by p; this pins every derived twist constant.
    q = b.g2_mul(b.G2_GEN, rng.randrange(1, R))
    assert pr.g2_frobenius(q) == b.g2_mul(q, P % R)
    assert pr.g2_frobenius_sq(q) == b.g2_mul(q, P * P % R)


def test_fp12_frobenius_matches_pow():
    f = pr.pairing(b.g1_mul(b.G1_GEN, 7), b.g2_mul(b.G2_GEN, 5))
    assert pr.fp12_frobenius(f, 1) == pr.fp12_pow(f, P)
    assert pr.fp12_frobenius(f, 2) == pr.fp12_pow(f, P * P)
    assert pr.fp12_frobenius(f, 3) == pr.fp12_pow(f, P * P * P)


def test_non_degenerate_and_order():
    e = pr.pairing(b.G1_GEN, b.G2_GEN)
    assert e != pr.FP12_ONE
    assert pr.fp12_pow(e, R) == pr.FP12_ONE


def test_identity_inputs():
    assert pr.pairing(None, b.G2_GEN) == pr.FP12_ONE
    assert pr.pairing(b.G1_GEN, None) == pr.FP12_ONE


def test_bilinearity():
    e = pr.pairing(b.G1_GEN, b.G2_GEN)
    for _ in range(3):
        a = rng.randrange(1, R)
        c = rng.randrange(1, R)
        lhs = pr.pairing(b.g1_mul(b.G1_GEN, a), b.g2_mul(b.G2_GEN, c))
        assert lhs == pr.gt_pow(e, a * c % R)


def test_additivity_both_arguments():
    p1 = b.g1_mul(b.G1_GEN, 11)
    p2 = b.g1_mul(b.G1_GEN, 22)
    q = b.g2_mul(b.G2_GEN, 9)
    assert pr.pairing(b.g1_add(p1, p2), q) == pr.fp12_mul(
        pr.pairing(p1, q), pr.pairing(p2, q))
    q2 = b.g2_mul(b.G2_GEN, 31)
    assert pr.pairing(p1, b.g2_add(q, q2)) == pr.fp12_mul(
        pr.pairing(p1, q), pr.pairing(p1, q2))


def test_multi_pairing_is_product():
    pairs = [
        (b.g1_mul(b.G1_GEN, 3), b.g2_mul(b.G2_GEN, 4)),
        (b.g1_mul(b.G1_GEN, 5), b.g2_mul(b.G2_GEN, 6)),
        (b.g1_mul(b.G1_GEN, 7), b.G2_GEN),
    ]
    product = pr.FP12_ONE
    for p, q in pairs:
        product = pr.fp12_mul(product, pr.pairing(p, q))
    assert pr.multi_pairing(pairs) == product


def test_pairing_check():
    a, c = rng.randrange(1, R), rng.randrange(1, R)
    good = [
        (b.g1_mul(b.G1_GEN, a), b.g2_mul(b.G2_GEN, c)),
        (b.g1_neg(b.g1_mul(b.G1_GEN, a * c % R)), b.G2_GEN),
    ]
    assert pr.pairing_check(good)
    bad = [(b.g1_mul(b.G1_GEN, a), b.g2_mul(b.G2_GEN, c)),
           (b.g1_neg(b.g1_mul(b.G1_GEN, a * c % R + 1)), b.G2_GEN)]
    assert not pr.pairing_check(bad)


def test_inverse_by_conjugation():
    # pairing outputs are unitary, so conjugation inverts them
    e = pr.pairing(b.g1_mul(b.G1_GEN, 17), b.g2_mul(b.G2_GEN, 23))
    assert pr.fp12_mul(e, pr.fp12_conj(e)) == pr.FP12_ONE
    assert pr.fp12_mul(e, pr.fp12_inv(e)) == pr.FP12_ONE


def test_verification_is_constant_work_in_pairs():
    # the verifier's pairing count does not depend on circuit size; the
    # cost proxy here is that a 3-pair product costs well under 3 single
    # pairings (shared squarings and one final exponentiation)
    import time
    pairs = [(b.g1_mul(b.G1_GEN, i + 2), b.g2_mul(b.G2_GEN, i + 3)) for i in range(3)]
    t0 = time.perf_counter()
    pr.multi_pairing(pairs)
    t_multi = time.perf_counter() - t0
    t0 = time.perf_counter()
    for p, q in pairs:
        pr.pairing(p, q)
    t_single = time.perf_counter() - t0
    assert t_multi < t_single
