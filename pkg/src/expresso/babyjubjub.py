"""The embedded twisted Edwards curve (Baby Jubjub).

Defined over the scalar field of the outer pairing curve, which is what
makes signature verification cheap inside the circuit: curve arithmetic is
native field arithmetic there.

Curve: a*x^2 + y^2 = 1 + d*x^2*y^2 over F_R with a = 168700, d = 168696.
The group has order 8*q with q prime; ``BASE`` generates the prime-order
subgroup, ``FULL_GEN`` the whole group.  Points are affine ``(x, y)``
tuples; the identity is ``(0, 1)`` (the formulas are complete, no special
cases).
"""

from __future__ import annotations

from .fields import R, inv

A = 168700
D = 168696
COFACTOR = 8

# Prime order of the signature subgroup.
Q = 2736030358979909402780800718157159386076813972158567259200215660948447373041

# Generator of the full order-8q group.
FULL_GEN = (
    995203441582195749578291179787384436505546430278305826713579947235728471134,
    5472060717959818805561601436314318772137091100104008585924551046643952123905,
)

# Base point of the prime-order subgroup (8 * FULL_GEN).
BASE = (
    5299619240641551281634865583518297030282874472190772894086521144482721001553,
    16950150798460657717958625567821834550301663161624707787222815936182638968203,
)

IDENTITY = (0, 1)


def on_curve(pt) -> bool:
    x, y = pt
    if not (0 <= x < R and 0 <= y < R):
        return False
    x2 = x * x % R
    y2 = y * y % R
    return (A * x2 + y2) % R == (1 + D * x2 % R * y2) % R


def add(p1, p2):
    x1, y1 = p1
    x2, y2 = p2
    x1x2 = x1 * x2 % R
    y1y2 = y1 * y2 % R
    dxy = D * x1x2 % R * y1y2 % R
    x3 = (x1 * y2 + y1 * x2) * inv(1 + dxy, R) % R
    y3 = (y1y2 - A * x1x2) * inv(1 - dxy, R) % R
    return (x3, y3)


def neg(pt):
    x, y = pt
    return ((R - x) % R, y)


def mul(pt, k: int):
    """k * pt by double-and-add.  k is used as a plain non-negative integer
    (callers reduce mod the relevant subgroup order when that matters)."""
    if k < 0:
        raise ValueError("negative scalar")
    acc = IDENTITY
    base = pt
    while k:
        if k & 1:
            acc = add(acc, base)
        base = add(base, base)
        k >>= 1
    return acc


def mul_by_cofactor(pt):
    out = pt
    for _ in range(3):
        out = add(out, out)
    return out


def is_identity(pt) -> bool:
    return pt == IDENTITY


def is_low_order(pt) -> bool:
    """True for points whose order divides the cofactor."""
    return is_identity(mul_by_cofactor(pt))


def in_prime_subgroup(pt) -> bool:
    if not on_curve(pt):
        return False
    return is_identity(mul(pt, Q))


# Consistency checks on the committed constants, run at import.
assert on_curve(FULL_GEN) and on_curve(BASE)
assert mul_by_cofactor(FULL_GEN) == BASE
assert is_identity(mul(BASE, Q))
assert not is_identity(mul(FULL_GEN, Q))
