"""Canonical binary serialization.

Byte layout rules (documented here and in the README so another
implementation can interoperate):

* field elements: 32 bytes little-endian, must be below the modulus
* G1 points: 1 tag byte + 32-byte x.  Tag 0x00 = identity (x zeroed),
  otherwise 0x02 | parity-of-y
* G2 points: 1 tag byte + 64 bytes (x.c0 then x.c1).  Parity is taken from
  y.c0, falling back to y.c1 when y.c0 is zero
* embedded-curve points: 1 tag byte (0x02 | parity-of-x) + 32-byte y;
  tag 0x00 = identity
* vectors: u32 little-endian count, then elements
* byte strings: u32 little-endian length prefix

Digests over structures are SHA-256 of these canonical encodings.
"""

from __future__ import annotations

import hashlib

from . import babyjubjub as ec
from .bn254 import G2_B, fp2_add, fp2_mul, fp2_neg, fp2_sqr
from .fields import P, R, inv, sqrt_fr


class DecodeError(ValueError):
    """Raised when bytes do not decode to a canonical value."""


def u32(n: int) -> bytes:
    return n.to_bytes(4, "little")


def u64(n: int) -> bytes:
    return n.to_bytes(8, "little")


def fr_bytes(x: int) -> bytes:
    if not (0 <= x < R):
        raise ValueError("not a canonical scalar-field element")
    return x.to_bytes(32, "little")


def fp_bytes(x: int) -> bytes:
    if not (0 <= x < P):
        raise ValueError("not a canonical base-field element")
    return x.to_bytes(32, "little")


def _sqrt_fp(a: int):
    # P = 3 mod 4
    r = pow(a, (P + 1) // 4, P)
    return r if r * r % P == a else None


def _sqrt_fp2(a):
    a0, a1 = a
    if a1 == 0:
        r = _sqrt_fp(a0)
        if r is not None:
            return (r, 0)
        r = _sqrt_fp((P - a0) % P)
        if r is None:
            return None
        return (0, r)
    n = _sqrt_fp((a0 * a0 + a1 * a1) % P)
    if n is None:
        return None
    inv2 = inv(2, P)
    for nn in (n, P - n):
        h = (a0 + nn) * inv2 % P
        x0 = _sqrt_fp(h)
        if x0 is None or x0 == 0:
            continue
        x1 = a1 * inv(2 * x0 % P, P) % P
        cand = (x0, x1)
        if fp2_sqr(cand) == a:
            return cand
    return None


def g1_bytes(pt) -> bytes:
    if pt is None:
        return b"\x00" + b"\x00" * 32
    x, y = pt
    return bytes([0x02 | (y & 1)]) + fp_bytes(x)


def g1_from_bytes(data: bytes):
    if len(data) != 33:
        raise DecodeError("bad G1 length")
    tag = data[0]
    x = int.from_bytes(data[1:], "little")
    if tag == 0x00:
        if x != 0:
            raise DecodeError("nonzero payload on identity tag")
        return None
    if tag not in (0x02, 0x03) or x >= P:
        raise DecodeError("bad G1 encoding")
    y = _sqrt_fp((x * x % P * x + 3) % P)
    if y is None:
        raise DecodeError("x not on curve")
    if y & 1 != tag & 1:
        y = P - y
    return (x, y)


def _fp2_parity(y) -> int:
    return (y[0] & 1) if y[0] != 0 else (y[1] & 1)


def g2_bytes(pt) -> bytes:
    if pt is None:
        return b"\x00" + b"\x00" * 64
    x, y = pt
    return bytes([0x02 | _fp2_parity(y)]) + fp_bytes(x[0]) + fp_bytes(x[1])


def g2_from_bytes(data: bytes):
    if len(data) != 65:
        raise DecodeError("bad G2 length")
    tag = data[0]
    x = (int.from_bytes(data[1:33], "little"), int.from_bytes(data[33:], "little"))
    if tag == 0x00:
        if any(x):
            raise DecodeError("nonzero payload on identity tag")
        return None
    if tag not in (0x02, 0x03) or x[0] >= P or x[1] >= P:
        raise DecodeError("bad G2 encoding")
    rhs = fp2_add(fp2_mul(fp2_sqr(x), x), G2_B)
    y = _sqrt_fp2(rhs)
    if y is None:
        raise DecodeError("x not on twist curve")
    if _fp2_parity(y) != tag & 1:
        y = fp2_neg(y)
    return (x, y)


def embedded_bytes(pt) -> bytes:
    if pt == ec.IDENTITY:
        return b"\x00" + b"\x00" * 32
    x, y = pt
    return bytes([0x02 | (x & 1)]) + fr_bytes(y)


def embedded_from_bytes(data: bytes):
    if len(data) != 33:
        raise DecodeError("bad embedded-point length")
    tag = data[0]
    y = int.from_bytes(data[1:], "little")
    if tag == 0x00:
        if y != 0:
            raise DecodeError("nonzero payload on identity tag")
        return ec.IDENTITY
    if tag not in (0x02, 0x03) or y >= R:
        raise DecodeError("bad embedded-point encoding")
    # a x^2 + y^2 = 1 + d x^2 y^2  =>  x^2 = (y^2 - 1) / (d y^2 - a)
    y2 = y * y % R
    num = (y2 - 1) % R
    den = (ec.D * y2 - ec.A) % R
    x2 = num * inv(den, R) % R
    x = sqrt_fr(x2)
    if x is None:
        raise DecodeError("y not on embedded curve")
    if x & 1 != tag & 1:
        x = R - x
    pt = (x, y)
    if not ec.on_curve(pt):
        raise DecodeError("decoded point off curve")
    return pt


def pack_bytes(data: bytes) -> bytes:
    return u32(len(data)) + data


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def tagged_concat(*parts: bytes) -> bytes:
    """Length-prefixed concatenation; unambiguous regardless of contents."""
    return b"".join(pack_bytes(p) for p in parts)


class Reader:
    """Cursor over a byte string with checked reads."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise DecodeError("truncated input")
        out = self._data[self._pos:self._pos + n]
        self._pos += n
        return out

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "little")

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "little")

    def fr(self) -> int:
        x = int.from_bytes(self.take(32), "little")
        if x >= R:
            raise DecodeError("non-canonical scalar")
        return x

    def g1(self):
        return g1_from_bytes(self.take(33))

    def g2(self):
        return g2_from_bytes(self.take(65))

    def embedded(self):
        return embedded_from_bytes(self.take(33))

    def bytes_(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> bool:
        return self._pos == len(self._data)

    def expect_end(self):
        if not self.done():
            raise DecodeError("trailing bytes")
