import random

import pytest
from hypothesis import given, settings, strategies as st

from expresso.fields import (
    HashDRBG,
    P,
    R,
    batch_inv,
    intt,
    inv,
    ntt,
    root_of_unity,
    sqrt_fr,
)

fr = st.integers(min_value=0, max_value=R - 1)


def test_moduli_are_prime_sized():
    assert P.bit_length() == 254
    assert R.bit_length() == 254
    assert P != R


@given(fr.filter(lambda x: x != 0))
def test_inverse(x):
    assert x * inv(x, R) % R == 1


def test_inverse_of_zero_rejected():
    with pytest.raises(ZeroDivisionError):
        inv(0, R)


def test_batch_inv_matches_single():
    rng = random.Random(1)
    values = [rng.randrange(1, R) for _ in range(37)]
    assert batch_inv(values, R) == [inv(v, R) for v in values]
    assert batch_inv([], R) == []
    with pytest.raises(ZeroDivisionError):
        batch_inv([1, 0, 2], R)


def test_root_of_unity_orders():
    for k in (1, 2, 8, 1 << 10):
        w = root_of_unity(k)
        assert pow(w, k, R) == 1
        if k > 1:
            assert pow(w, k // 2, R) != 1
    with pytest.raises(ValueError):
        root_of_unity(3)
    with pytest.raises(ValueError):
        root_of_unity(1 << 29)


def test_ntt_round_trip():
    rng = random.Random(2)
    n = 64
    w = root_of_unity(n)
    values = [rng.randrange(R) for _ in range(n)]
    assert intt(ntt(values, w), w) == values


def test_ntt_is_evaluation():
    # NTT output j must equal the polynomial evaluated at w^j
    rng = random.Random(3)
    n = 16
    w = root_of_unity(n)
    coeffs = [rng.randrange(R) for _ in range(n)]
    evals = ntt(coeffs, w)
    for j in (0, 1, 5, 15):
        x = pow(w, j, R)
        direct = sum(c * pow(x, i, R) for i, c in enumerate(coeffs)) % R
        assert evals[j] == direct


def test_drbg_deterministic_and_bounded():
    a = HashDRBG(b"seed", domain=b"t")
    b = HashDRBG(b"seed", domain=b"t")
    assert a.read(40) == b.read(40)
    assert HashDRBG(b"seed", domain=b"other").read(40) != HashDRBG(b"seed", domain=b"t").read(40)
    c = HashDRBG(b"x")
    for bound in (2, 17, R):
        for _ in range(50):
            assert 0 <= c.read_int(bound) < bound
    assert HashDRBG(b"y").read_scalar(nonzero=True) != 0


@settings(max_examples=30)
@given(fr)
def test_sqrt_fr(x):
    square = x * x % R
    root = sqrt_fr(square)
    assert root is not None
    assert root * root % R == square


def test_sqrt_fr_nonresidue():
    # -1 has a root iff R = 1 mod 4 (it does); 5 generates the full group,
    # so 5 itself is a non-residue
    assert sqrt_fr(R - 1) is not None
    assert sqrt_fr(5) is None
    assert sqrt_fr(0) == 0
