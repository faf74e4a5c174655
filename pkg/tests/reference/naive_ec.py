"""Brute-force group oracles for the embedded curve.

Addition is written straight from the curve law; scalar multiplication is
literal repeated addition, so it can only be used for small multipliers.
Independent of the production module by construction.
"""

A = 168700
D = 168696
MODULUS = 21888242871839275222246405745257275088548364400416034343698204186575808495617

IDENTITY = (0, 1)


def add(p, q):
    x1, y1 = p
    x2, y2 = q
    den_x = (1 + D * x1 * x2 * y1 * y2) % MODULUS
    den_y = (1 - D * x1 * x2 * y1 * y2) % MODULUS
    x3 = (x1 * y2 + y1 * x2) * pow(den_x, -1, MODULUS) % MODULUS
    y3 = (y1 * y2 - A * x1 * x2) * pow(den_y, -1, MODULUS) % MODULUS
    return (x3, y3)


def repeated_add(p, k):
    acc = IDENTITY
    for _ in range(k):
        acc = add(acc, p)
    return acc


def subgroup_elements(generator, order):
    out = []
    acc = IDENTITY
    for _ in range(order):
        out.append(acc)
        acc = add(acc, generator)
    assert acc == IDENTITY, "claimed order is wrong"
    return out
