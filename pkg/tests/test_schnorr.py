import random

import pytest

from expresso import babyjubjub as ec
from expresso.fields import R
from expresso.poseidon import canonical_params, circuit_hash
from expresso.schnorr import (
    CANONICAL_SCHEME,
    SchemeParams,
    Signature,
    generate_signing_keypair,
    sign,
    verify_native,
)

from .reference import naive_ec

NARROW = SchemeParams.narrow(16, 30, 16)


def test_keypair_deterministic():
    assert generate_signing_keypair(b"s1") == generate_signing_keypair(b"s1")
    assert generate_signing_keypair(b"s1") != generate_signing_keypair(b"s2")


def test_keypair_relation_small_scalars():
    # pk must equal literal repeated addition of the base point
    for k in (1, 2, 3, 9, 40):
        kp_pk = ec.mul(ec.BASE, k)
        assert kp_pk == naive_ec.repeated_add(ec.BASE, k)
    # sk = 1 means pk is the generator itself
    assert ec.mul(ec.BASE, 1) == ec.BASE


def test_sign_verify_round_trip():
    kp = generate_signing_keypair(b"seed")
    sig = sign(kp.sk, 1234)
    assert verify_native(kp.pk, 1234, sig)
    assert sig.S < ec.Q


def test_sign_deterministic():
    kp = generate_signing_keypair(b"seed")
    assert sign(kp.sk, 77) == sign(kp.sk, 77)
    assert sign(kp.sk, 77) != sign(kp.sk, 78)


def test_wrong_message_rejected():
    kp = generate_signing_keypair(b"seed")
    sig = sign(kp.sk, 100)
    assert not verify_native(kp.pk, 101, sig)


def test_tweaked_s_rejected():
    kp = generate_signing_keypair(b"seed")
    sig = sign(kp.sk, 100)
    assert not verify_native(kp.pk, 100, Signature(sig.R, sig.S + 1))


def test_single_bit_message_mutations_rejected():
    # flip one bit of the signed field element at a time
    kp = generate_signing_keypair(b"mut")
    msg = 0x1234567890ABCDEF
    sig = sign(kp.sk, msg)
    rng = random.Random(40)
    for _ in range(40):
        bit = rng.randrange(250)
        mutated = msg ^ (1 << bit)
        assert not verify_native(kp.pk, mutated, sig)


def test_low_order_nonce_point_rejected():
    kp = generate_signing_keypair(b"seed")
    sig = sign(kp.sk, 5)
    torsion = ec.mul(ec.FULL_GEN, ec.Q)
    assert not verify_native(kp.pk, 5, Signature(torsion, sig.S))


def test_malformed_inputs_return_false():
    kp = generate_signing_keypair(b"seed")
    sig = sign(kp.sk, 5)
    assert not verify_native((1, 2), 5, sig)            # pk off curve
    assert not verify_native(kp.pk, 5, Signature((1, 2), sig.S))
    assert not verify_native(kp.pk, R + 5, sig)          # non-canonical message
    assert not verify_native(kp.pk, 5, Signature(sig.R, 1 << 260))


def test_narrow_scheme_round_trip():
    kp = generate_signing_keypair(b"n", NARROW)
    assert kp.sk < (1 << NARROW.sk_bits)
    sig = sign(kp.sk, 99, NARROW)
    assert sig.S < (1 << NARROW.s_bits)
    assert verify_native(kp.pk, 99, sig, NARROW)
    assert not verify_native(kp.pk, 98, sig, NARROW)
    # a canonical-scheme verifier must not accept the narrow signature
    # blindly: the challenge truncation differs
    assert not verify_native(kp.pk, 99, sig)


def test_narrow_widths_validated():
    with pytest.raises(ValueError):
        SchemeParams.narrow(200, 200, 254)


def toy_verify(pk, message, R_pt, S, gen):
    """Independent toy-group verifier: literal repeated addition only."""
    h = circuit_hash([R_pt[0], R_pt[1], pk[0], pk[1], message], canonical_params())
    lhs = naive_ec.repeated_add(gen, S % 8)
    rhs = naive_ec.add(R_pt, naive_ec.repeated_add(pk, h % 8))
    return lhs == rhs


def test_exhaustive_toy_group():
    """On the order-8 subgroup every (R, S) candidate can be enumerated:
    exactly one S per R satisfies the verification law, and the honest
    signing equation produces exactly that pair."""
    gen = ec.mul(ec.FULL_GEN, ec.Q)  # order-8 generator
    elements = naive_ec.subgroup_elements(gen, 8)
    msg = 31337
    for sk in range(1, 8):
        pk = naive_ec.repeated_add(gen, sk)
        accepted = set()
        for R_pt in elements:
            for S in range(8):
                if toy_verify(pk, msg, R_pt, S, gen):
                    accepted.add((R_pt, S))
        # one S per R: 8 accepted pairs
        assert len(accepted) == 8
        for k in range(8):  # honest signatures for every nonce
            R_pt = elements[k]
            h = circuit_hash([R_pt[0], R_pt[1], pk[0], pk[1], msg], canonical_params())
            S = (k + h * sk) % 8
            assert (R_pt, S) in accepted


def test_challenge_binds_nonce_point():
    # same (pk, message), two different nonce points must give different
    # challenges; this is what makes "solve for R" forgeries fail
    kp = generate_signing_keypair(b"bind")
    sig1 = sign(kp.sk, 1)
    sig2 = sign(kp.sk, 2)
    from expresso.schnorr import challenge
    assert sig1.R != sig2.R
    assert challenge(sig1.R, kp.pk, 7) != challenge(sig2.R, kp.pk, 7)
