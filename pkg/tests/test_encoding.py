import random

import pytest
from hypothesis import given, settings, strategies as st

from expresso import babyjubjub as ec
from expresso import bn254 as b
from expresso import encoding as enc
from expresso.fields import P, R

rng = random.Random(50)
scalars = st.integers(min_value=1, max_value=R - 1)


@settings(max_examples=25)
@given(scalars)
def test_g1_round_trip(k):
    pt = b.g1_mul(b.G1_GEN, k)
    data = enc.g1_bytes(pt)
    assert len(data) == 33
    assert enc.g1_from_bytes(data) == pt


@settings(max_examples=10)
@given(scalars)
def test_g2_round_trip(k):
    pt = b.g2_mul(b.G2_GEN, k)
    data = enc.g2_bytes(pt)
    assert len(data) == 65
    assert enc.g2_from_bytes(data) == pt


@settings(max_examples=25)
@given(st.integers(min_value=1, max_value=ec.Q - 1))
def test_embedded_round_trip(k):
    pt = ec.mul(ec.BASE, k)
    data = enc.embedded_bytes(pt)
    assert len(data) == 33
    assert enc.embedded_from_bytes(data) == pt


def test_identity_encodings():
    assert enc.g1_from_bytes(enc.g1_bytes(None)) is None
    assert enc.g2_from_bytes(enc.g2_bytes(None)) is None
    assert enc.embedded_from_bytes(enc.embedded_bytes(ec.IDENTITY)) == ec.IDENTITY


def test_bad_tags_rejected():
    pt = b.g1_mul(b.G1_GEN, 5)
    data = bytearray(enc.g1_bytes(pt))
    data[0] = 0x07
    with pytest.raises(enc.DecodeError):
        enc.g1_from_bytes(bytes(data))
    with pytest.raises(enc.DecodeError):
        enc.g1_from_bytes(b"\x00" + b"\x01" + b"\x00" * 31)  # identity with payload


def test_non_canonical_field_rejected():
    with pytest.raises(enc.DecodeError):
        enc.g1_from_bytes(bytes([0x02]) + P.to_bytes(32, "little"))
    with pytest.raises(ValueError):
        enc.fr_bytes(R)
    with pytest.raises(ValueError):
        enc.fp_bytes(P)


def test_off_curve_x_rejected():
    # x = 0 gives rhs = 3, which is a non-residue in F_P
    with pytest.raises(enc.DecodeError):
        enc.g1_from_bytes(bytes([0x02]) + (0).to_bytes(32, "little"))


def test_flipping_any_byte_changes_or_breaks():
    pt = b.g1_mul(b.G1_GEN, rng.randrange(1, R))
    data = bytearray(enc.g1_bytes(pt))
    for i in range(len(data)):
        mutated = bytearray(data)
        mutated[i] ^= 0x01
        try:
            out = enc.g1_from_bytes(bytes(mutated))
        except enc.DecodeError:
            continue
        assert out != pt


def test_reader_framing():
    payload = enc.pack_bytes(b"abc") + enc.u32(7)
    r = enc.Reader(payload)
    assert r.bytes_() == b"abc"
    assert r.u32() == 7
    assert r.done()
    r = enc.Reader(payload + b"x")
    r.bytes_(), r.u32()
    with pytest.raises(enc.DecodeError):
        r.expect_end()
    with pytest.raises(enc.DecodeError):
        enc.Reader(b"\x05\x00\x00\x00ab").bytes_()  # truncated


def test_tagged_concat_unambiguous():
    assert enc.tagged_concat(b"ab", b"c") != enc.tagged_concat(b"a", b"bc")


def test_fr_bytes_little_endian():
    assert enc.fr_bytes(1)[0] == 1
    assert enc.fr_bytes(1)[31] == 0
