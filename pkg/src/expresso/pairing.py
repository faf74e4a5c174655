"""Optimal ate pairing on BN254.

Tower: Fp2 = Fp[i]/(i^2+1), Fp6 = Fp2[v]/(v^3 - xi) with xi = 9+i,
Fp12 = Fp6[w]/(w^2 - v).  Elements are nested tuples; GT elements are Fp12
tuples and compare with ``==``.

The Miller loop runs in affine twist coordinates (fast modular inversion
makes affine competitive in Python) over the NAF of 6u+2, followed by the
two Frobenius line corrections.  The final exponentiation does the easy
part explicitly and the hard part as a 4-way interleaved exponentiation by
the base-p digits of (p^4 - p^2 + 1)/r, using conjugation as inversion
(the element is unitary after the easy part).

All Frobenius constants are derived from xi at import time instead of
being transcribed, so there are no magic constants to get wrong.
"""

from __future__ import annotations

from .fields import BN_U, P, R
from .bn254 import (
    FP2_ONE,
    FP2_XI,
    FP2_ZERO,
    fp2_add,
    fp2_conj,
    fp2_inv,
    fp2_mul,
    fp2_neg,
    fp2_scalar,
    fp2_sqr,
    fp2_sub,
    g2_neg,
)

# ---------------------------------------------------------------------------
# Fp6 = Fp2[v]/(v^3 - xi)
# ---------------------------------------------------------------------------

FP6_ZERO = (FP2_ZERO, FP2_ZERO, FP2_ZERO)
FP6_ONE = (FP2_ONE, FP2_ZERO, FP2_ZERO)


def _mul_xi(a):
    # (9 + i) * (a0 + a1 i) = 9a0 - a1 + (9a1 + a0) i
    a0, a1 = a
    return ((9 * a0 - a1) % P, (9 * a1 + a0) % P)


def fp6_add(a, b):
    return (fp2_add(a[0], b[0]), fp2_add(a[1], b[1]), fp2_add(a[2], b[2]))


def fp6_sub(a, b):
    return (fp2_sub(a[0], b[0]), fp2_sub(a[1], b[1]), fp2_sub(a[2], b[2]))


def fp6_neg(a):
    return (fp2_neg(a[0]), fp2_neg(a[1]), fp2_neg(a[2]))


def fp6_mul(a, b):
    a0, a1, a2 = a
    b0, b1, b2 = b
    t0 = fp2_mul(a0, b0)
    t1 = fp2_mul(a1, b1)
    t2 = fp2_mul(a2, b2)
    c0 = fp2_add(t0, _mul_xi(fp2_sub(fp2_mul(fp2_add(a1, a2), fp2_add(b1, b2)), fp2_add(t1, t2))))
    c1 = fp2_add(fp2_sub(fp2_mul(fp2_add(a0, a1), fp2_add(b0, b1)), fp2_add(t0, t1)), _mul_xi(t2))
    c2 = fp2_add(fp2_sub(fp2_mul(fp2_add(a0, a2), fp2_add(b0, b2)), fp2_add(t0, t2)), t1)
    return (c0, c1, c2)


def fp6_sqr(a):
    return fp6_mul(a, a)


def fp6_mul_v(a):
    # multiply by v: (a0, a1, a2) -> (xi*a2, a0, a1)
    return (_mul_xi(a[2]), a[0], a[1])


def fp6_inv(a):
    a0, a1, a2 = a
    c0 = fp2_sub(fp2_sqr(a0), _mul_xi(fp2_mul(a1, a2)))
    c1 = fp2_sub(_mul_xi(fp2_sqr(a2)), fp2_mul(a0, a1))
    c2 = fp2_sub(fp2_sqr(a1), fp2_mul(a0, a2))
    t = fp2_inv(
        fp2_add(fp2_mul(a0, c0), _mul_xi(fp2_add(fp2_mul(a1, c2), fp2_mul(a2, c1))))
    )
    return (fp2_mul(c0, t), fp2_mul(c1, t), fp2_mul(c2, t))


def fp6_scalar_fp2(a, s):
    return (fp2_mul(a[0], s), fp2_mul(a[1], s), fp2_mul(a[2], s))


# ---------------------------------------------------------------------------
# Fp12 = Fp6[w]/(w^2 - v)
# ---------------------------------------------------------------------------

FP12_ONE = (FP6_ONE, FP6_ZERO)


def fp12_mul(a, b):
    a0, a1 = a
    b0, b1 = b
    t0 = fp6_mul(a0, b0)
    t1 = fp6_mul(a1, b1)
    c1 = fp6_sub(fp6_mul(fp6_add(a0, a1), fp6_add(b0, b1)), fp6_add(t0, t1))
    c0 = fp6_add(t0, fp6_mul_v(t1))
    return (c0, c1)


def fp12_sqr(a):
    a0, a1 = a
    t = fp6_mul(a0, a1)
    c0 = fp6_sub(
        fp6_mul(fp6_add(a0, a1), fp6_add(a0, fp6_mul_v(a1))),
        fp6_add(t, fp6_mul_v(t)),
    )
    c1 = fp6_add(t, t)
    return (c0, c1)


def fp12_conj(a):
    return (a[0], fp6_neg(a[1]))


def fp12_inv(a):
    a0, a1 = a
    t = fp6_inv(fp6_sub(fp6_sqr(a0), fp6_mul_v(fp6_sqr(a1))))
    return (fp6_mul(a0, t), fp6_neg(fp6_mul(a1, t)))


def fp12_pow(a, k: int):
    result = FP12_ONE
    base = a
    while k:
        if k & 1:
            result = fp12_mul(result, base)
        base = fp12_sqr(base)
        k >>= 1
    return result


# ---------------------------------------------------------------------------
# Frobenius
# ---------------------------------------------------------------------------

def _fp2_pow(a, k: int):
    result = FP2_ONE
    base = a
    while k:
        if k & 1:
            result = fp2_mul(result, base)
        base = fp2_sqr(base)
        k >>= 1
    return result


# gamma1[j] = xi^(j*(p-1)/6), gamma2[j] = xi^(j*(p^2-1)/6)
_G1C = [_fp2_pow(FP2_XI, j * (P - 1) // 6) for j in range(6)]
_G2C = [_fp2_pow(FP2_XI, j * (P * P - 1) // 6) for j in range(6)]
_G3C = [_fp2_pow(FP2_XI, j * (P * P * P - 1) // 6) for j in range(6)]

# twist-point Frobenius coefficients
_TW1_X = _fp2_pow(FP2_XI, (P - 1) // 3)
_TW1_Y = _fp2_pow(FP2_XI, (P - 1) // 2)
_TW2_X = _fp2_pow(FP2_XI, (P * P - 1) // 3)
_TW2_Y = _fp2_pow(FP2_XI, (P * P - 1) // 2)


def _coeffs(f):
    """Fp12 as six w-power coefficients e0..e5 (each Fp2)."""
    (a0, a1, a2), (b0, b1, b2) = f
    return [a0, b0, a1, b1, a2, b2]


def _from_coeffs(e):
    return ((e[0], e[2], e[4]), (e[1], e[3], e[5]))


def fp12_frobenius(f, power: int = 1):
    """f^(p^power) for power in {1, 2, 3}."""
    e = _coeffs(f)
    if power == 1:
        out = [fp2_mul(fp2_conj(c), _G1C[j]) for j, c in enumerate(e)]
    elif power == 2:
        out = [fp2_mul(c, _G2C[j]) for j, c in enumerate(e)]
    elif power == 3:
        out = [fp2_mul(fp2_conj(c), _G3C[j]) for j, c in enumerate(e)]
    else:
        raise ValueError("unsupported Frobenius power")
    return _from_coeffs(out)


def g2_frobenius(q):
    """Untwist-Frobenius-twist endomorphism on twist points."""
    x, y = q
    return (fp2_mul(fp2_conj(x), _TW1_X), fp2_mul(fp2_conj(y), _TW1_Y))


def g2_frobenius_sq(q):
    x, y = q
    return (fp2_mul(x, _TW2_X), fp2_mul(y, _TW2_Y))


# ---------------------------------------------------------------------------
# Miller loop
# ---------------------------------------------------------------------------

ATE_LOOP = 6 * BN_U + 2


def _naf(k: int):
    digits = []
    while k:
        if k & 1:
            d = 2 - (k % 4)
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


_ATE_NAF = _naf(ATE_LOOP)


def _line_dbl(t, p_aff):
    """Tangent line at twist point t, evaluated at G1 point p; returns
    (new_t, sparse line coeffs (a, b, c)) with the line equal to
    a + b*w + c*v*w in Fp12."""
    x, y = t
    lam = fp2_mul(fp2_scalar(fp2_sqr(x), 3), fp2_inv(fp2_scalar(y, 2)))
    x3 = fp2_sub(fp2_sqr(lam), fp2_scalar(x, 2))
    y3 = fp2_sub(fp2_mul(lam, fp2_sub(x, x3)), y)
    xp, yp = p_aff
    a = (yp, 0)
    b = fp2_scalar(lam, P - xp)
    c = fp2_sub(fp2_mul(lam, x), y)
    return (x3, y3), (a, b, c)


def _line_add(t, q, p_aff):
    """Chord line through twist points t and q, evaluated at p."""
    x1, y1 = t
    x2, y2 = q
    if x1 == x2 and y1 == y2:
        return _line_dbl(t, p_aff)
    lam = fp2_mul(fp2_sub(y2, y1), fp2_inv(fp2_sub(x2, x1)))
    x3 = fp2_sub(fp2_sub(fp2_sqr(lam), x1), x2)
    y3 = fp2_sub(fp2_mul(lam, fp2_sub(x1, x3)), y1)
    xp, yp = p_aff
    a = (yp, 0)
    b = fp2_scalar(lam, P - xp)
    c = fp2_sub(fp2_mul(lam, x1), y1)
    return (x3, y3), (a, b, c)


def _mul_line(f, line):
    """Multiply Fp12 element by the sparse line a + b*w + c*v*w."""
    a, b, c = line
    f0, f1 = f
    # L0 = (a, 0, 0); L1 = (b, c, 0)
    t0 = fp6_scalar_fp2(f0, a)
    # f1 * L1 with L1 sparse:
    a0, a1, a2 = f1
    u0 = fp2_add(fp2_mul(a0, b), _mul_xi(fp2_mul(a2, c)))
    u1 = fp2_add(fp2_mul(a0, c), fp2_mul(a1, b))
    u2 = fp2_add(fp2_mul(a1, c), fp2_mul(a2, b))
    t1 = (u0, u1, u2)
    # (f0 + f1) * (L0 + L1), with L0+L1 = (a+b, c, 0)
    s0, s1, s2 = fp6_add(f0, f1)
    ab = fp2_add(a, b)
    v0 = fp2_add(fp2_mul(s0, ab), _mul_xi(fp2_mul(s2, c)))
    v1 = fp2_add(fp2_mul(s0, c), fp2_mul(s1, ab))
    v2 = fp2_add(fp2_mul(s1, c), fp2_mul(s2, ab))
    cross = fp6_sub((v0, v1, v2), fp6_add(t0, t1))
    return (fp6_add(t0, fp6_mul_v(t1)), cross)


def miller_loop(pairs):
    """Product of Miller functions for [(P_g1_affine, Q_g2_affine), ...]."""
    live = [(p, q) for p, q in pairs if p is not None and q is not None]
    if not live:
        return FP12_ONE
    f = FP12_ONE
    ts = [q for _, q in live]
    negs = [g2_neg(q) for _, q in live]
    for i in range(len(_ATE_NAF) - 2, -1, -1):
        f = fp12_sqr(f)
        d = _ATE_NAF[i]
        for j, (p, q) in enumerate(live):
            ts[j], line = _line_dbl(ts[j], p)
            f = _mul_line(f, line)
        if d:
            for j, (p, q) in enumerate(live):
                addend = q if d > 0 else negs[j]
                ts[j], line = _line_add(ts[j], addend, p)
                f = _mul_line(f, line)
    for j, (p, q) in enumerate(live):
        q1 = g2_frobenius(q)
        ts[j], line = _line_add(ts[j], q1, p)
        f = _mul_line(f, line)
        q2 = g2_neg(g2_frobenius_sq(q))
        ts[j], line = _line_add(ts[j], q2, p)
        f = _mul_line(f, line)
    return f


# ---------------------------------------------------------------------------
# Final exponentiation
# ---------------------------------------------------------------------------

_HARD_EXP = (P**4 - P**2 + 1) // R
assert (P**4 - P**2 + 1) % R == 0
_HARD_DIGITS = [
    _HARD_EXP % P,
    (_HARD_EXP // P) % P,
    (_HARD_EXP // P**2) % P,
    _HARD_EXP // P**3,
]
assert _HARD_DIGITS[3] < P


def _wnaf5(k: int):
    digits = []
    while k:
        if k & 1:
            d = k & 31
            if d >= 16:
                d -= 32
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def final_exponentiation(f):
    # easy part: f^((p^6 - 1)(p^2 + 1)); afterwards f is unitary
    f = fp12_mul(fp12_conj(f), fp12_inv(f))
    f = fp12_mul(fp12_frobenius(f, 2), f)
    # hard part: f^((p^4 - p^2 + 1)/r) as a 4-way interleaved exponentiation
    # by the base-p digits, using f^(p^i) bases and conj-as-inverse.
    bases = [f, fp12_frobenius(f, 1), fp12_frobenius(f, 2), fp12_frobenius(f, 3)]
    nafs = [_wnaf5(d) for d in _HARD_DIGITS]
    # odd powers 1, 3, ..., 15 per base
    tables = []
    for base in bases:
        sq = fp12_sqr(base)
        tab = [base]
        for _ in range(7):
            tab.append(fp12_mul(tab[-1], sq))
        tables.append(tab)
    top = max(len(n) for n in nafs)
    acc = FP12_ONE
    for i in range(top - 1, -1, -1):
        acc = fp12_sqr(acc)
        for j, naf in enumerate(nafs):
            if i < len(naf) and naf[i]:
                d = naf[i]
                if d > 0:
                    acc = fp12_mul(acc, tables[j][d >> 1])
                else:
                    acc = fp12_mul(acc, fp12_conj(tables[j][(-d) >> 1]))
    return acc


def pairing(p, q):
    """e(P, Q) for P in G1 (affine), Q in G2 (affine twist coords)."""
    if p is None or q is None:
        return FP12_ONE
    return final_exponentiation(miller_loop([(p, q)]))


def multi_pairing(pairs):
    """Product of pairings e(P_i, Q_i)."""
    return final_exponentiation(miller_loop(pairs))


def pairing_check(pairs) -> bool:
    """True iff the product of pairings equals one in GT."""
    return multi_pairing(pairs) == FP12_ONE


def gt_pow(f, k: int):
    k %= R
    return fp12_pow(f, k)
