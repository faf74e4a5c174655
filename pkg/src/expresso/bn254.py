"""Group arithmetic for the outer pairing curve (BN254 / alt_bn128).

G1 lives on ``y^2 = x^3 + 3`` over F_P and has prime order R (cofactor 1).
G2 lives on the sextic twist ``y^2 = x^3 + 3/(9+i)`` over F_{P^2}.

Representation conventions used across the package:

* affine G1 point: ``(x, y)`` ints, identity is ``None``
* jacobian G1 point: ``(X, Y, Z)`` ints, identity has ``Z == 0``
* F_{P^2} element: ``(c0, c1)`` meaning ``c0 + c1*i`` with ``i^2 = -1``
* affine G2 point: ``((x0, x1), (y0, y1))``, identity is ``None``

Scalar multiplication on G1 uses the GLV endomorphism ``(x, y) -> (beta*x, y)``
with an extended-Euclid short lattice basis, halving the doubling count.
Multi-scalar multiplication is bucketed Pippenger.  All of this is plain
int arithmetic; profile before replacing any of it.
"""

from __future__ import annotations

from .fields import P, R, batch_inv, inv

G1_GEN = (1, 2)

# Generator of the R-order subgroup of the twist (standard alt_bn128 G2).
G2_GEN = (
    (
        10857046999023057135944570762232829481370756359578518086990519993285655852781,
        11559732032986387107991004021392285783925812861821192530917403151452391805634,
    ),
    (
        8495653923123431417604973247489272438418190587263600148770280649306958101930,
        4082367875863433681332203403145435568316851327593401208105741076214120093531,
    ),
)

JAC_INF = (1, 1, 0)


# ---------------------------------------------------------------------------
# G1: jacobian core
# ---------------------------------------------------------------------------

def g1_on_curve(pt) -> bool:
    if pt is None:
        return True
    x, y = pt
    if not (0 <= x < P and 0 <= y < P):
        return False
    return (y * y - x * x * x - 3) % P == 0


def jac_dbl(pt):
    X, Y, Z = pt
    if Z == 0 or Y == 0:
        return JAC_INF
    YY = Y * Y % P
    A = 4 * X * YY % P
    B = 8 * YY * YY % P
    C = 3 * X * X % P
    X3 = (C * C - 2 * A) % P
    Y3 = (C * (A - X3) - B) % P
    Z3 = 2 * Y * Z % P
    return X3, Y3, Z3


def jac_add(p1, p2):
    X1, Y1, Z1 = p1
    X2, Y2, Z2 = p2
    if Z1 == 0:
        return p2
    if Z2 == 0:
        return p1
    Z1Z1 = Z1 * Z1 % P
    Z2Z2 = Z2 * Z2 % P
    U1 = X1 * Z2Z2 % P
    U2 = X2 * Z1Z1 % P
    S1 = Y1 * Z2 * Z2Z2 % P
    S2 = Y2 * Z1 * Z1Z1 % P
    if U1 == U2:
        if S1 != S2:
            return JAC_INF
        return jac_dbl(p1)
    H = (U2 - U1) % P
    I = 4 * H * H % P
    J = H * I % P
    rr = 2 * (S2 - S1) % P
    V = U1 * I % P
    X3 = (rr * rr - J - 2 * V) % P
    Y3 = (rr * (V - X3) - 2 * S1 * J) % P
    Z3 = 2 * H * Z1 * Z2 % P
    return X3, Y3, Z3


def jac_add_affine(p1, pt):
    """Mixed addition: jacobian + affine (Z2 = 1)."""
    if pt is None:
        return p1
    X1, Y1, Z1 = p1
    if Z1 == 0:
        return (pt[0], pt[1], 1)
    X2, Y2 = pt
    Z1Z1 = Z1 * Z1 % P
    U2 = X2 * Z1Z1 % P
    S2 = Y2 * Z1 * Z1Z1 % P
    if U2 == X1:
        if S2 != Y1:
            return JAC_INF
        return jac_dbl(p1)
    H = (U2 - X1) % P
    HH = H * H % P
    I = 4 * HH % P
    J = H * I % P
    rr = 2 * (S2 - Y1) % P
    V = X1 * I % P
    X3 = (rr * rr - J - 2 * V) % P
    Y3 = (rr * (V - X3) - 2 * Y1 * J) % P
    Z3 = 2 * Z1 * H % P
    return X3, Y3, Z3


def jac_neg(pt):
    X, Y, Z = pt
    return (X, (P - Y) % P, Z)


def to_jac(pt):
    if pt is None:
        return JAC_INF
    return (pt[0], pt[1], 1)


def to_affine(pt):
    X, Y, Z = pt
    if Z == 0:
        return None
    zi = inv(Z, P)
    zi2 = zi * zi % P
    return (X * zi2 % P, Y * zi2 * zi % P)


def batch_to_affine(points):
    """Normalize many jacobian points with a single field inversion."""
    zs = [pt[2] for pt in points]
    nonzero = [z for z in zs if z != 0]
    invs = iter(batch_inv(nonzero, P))
    out = []
    for X, Y, Z in points:
        if Z == 0:
            out.append(None)
            continue
        zi = next(invs)
        zi2 = zi * zi % P
        out.append((X * zi2 % P, Y * zi2 * zi % P))
    return out


def g1_neg(pt):
    if pt is None:
        return None
    return (pt[0], (P - pt[1]) % P)


def g1_add(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    return to_affine(jac_add_affine(to_jac(p1), p2))


def g1_sub(p1, p2):
    return g1_add(p1, g1_neg(p2))


# ---------------------------------------------------------------------------
# GLV decomposition
# ---------------------------------------------------------------------------

# beta: primitive cube root of unity in F_P; lambda: matching eigenvalue in
# F_R so that (beta*x, y) == lambda * (x, y) on G1.  Both are derived rather
# than transcribed; the generator pairing below picks the consistent root.
def _cube_root_of_unity(modulus: int) -> int:
    g = 2
    while True:
        c = pow(g, (modulus - 1) // 3, modulus)
        if c != 1:
            return c
        g += 1


GLV_BETA = _cube_root_of_unity(P)
GLV_LAMBDA = _cube_root_of_unity(R)


def _naive_mul(pt, k):
    acc = JAC_INF
    add = to_jac(pt)
    while k:
        if k & 1:
            acc = jac_add(acc, add)
        add = jac_dbl(add)
        k >>= 1
    return to_affine(acc)


# Pick the lambda root that matches the beta endomorphism on the generator.
if _naive_mul(G1_GEN, GLV_LAMBDA) != (GLV_BETA * G1_GEN[0] % P, G1_GEN[1]):
    GLV_LAMBDA = R - 1 - GLV_LAMBDA  # the other root of x^2 + x + 1
    assert _naive_mul(G1_GEN, GLV_LAMBDA) == (GLV_BETA * G1_GEN[0] % P, G1_GEN[1])


def _glv_basis():
    """Short lattice basis for (k1 + k2*lambda = k mod R) via extended Euclid.

    Standard construction: run the Euclidean algorithm on (R, lambda) until
    the remainder drops below sqrt(R); that remainder row is v1, and v2 is
    the shorter of its two neighbors.
    """
    prev, cur = (R, 0), (GLV_LAMBDA, 1)
    bound = 1 << ((R.bit_length() + 1) // 2)
    while cur[0] >= bound:
        q = prev[0] // cur[0]
        prev, cur = cur, (prev[0] - q * cur[0], prev[1] - q * cur[1])
    q = prev[0] // cur[0]
    nxt = (prev[0] - q * cur[0], prev[1] - q * cur[1])
    v1 = (cur[0], -cur[1])
    cand_a = (prev[0], -prev[1])
    cand_b = (nxt[0], -nxt[1])
    v2 = cand_a if cand_a[0] ** 2 + cand_a[1] ** 2 <= cand_b[0] ** 2 + cand_b[1] ** 2 else cand_b
    return v1, v2


(_GLV_A1, _GLV_B1), (_GLV_A2, _GLV_B2) = _glv_basis()
_GLV_DET = _GLV_A1 * _GLV_B2 - _GLV_A2 * _GLV_B1


def glv_split(k: int) -> tuple[int, int]:
    """Return (k1, k2), |ki| ~ sqrt(R), with k1 + k2*lambda == k (mod R)."""
    k %= R
    c1 = (_GLV_B2 * k * 2 + _GLV_DET) // (2 * _GLV_DET)
    c2 = (-_GLV_B1 * k * 2 + _GLV_DET) // (2 * _GLV_DET)
    k1 = k - c1 * _GLV_A1 - c2 * _GLV_A2
    k2 = -c1 * _GLV_B1 - c2 * _GLV_B2
    return k1, k2


def _wnaf(k: int, w: int) -> list[int]:
    """Width-w NAF digits, least significant first (odd digits, |d| < 2^(w-1))."""
    digits = []
    mask = (1 << w) - 1
    half = 1 << (w - 1)
    while k:
        if k & 1:
            d = k & mask
            if d >= half:
                d -= 1 << w
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def g1_mul_jac(pt, k: int):
    """k * pt in jacobian coordinates, GLV + interleaved width-4 wNAF."""
    if pt is None or k % R == 0:
        return JAC_INF
    k1, k2 = glv_split(k)
    p1 = pt
    p2 = (GLV_BETA * pt[0] % P, pt[1])
    if k1 < 0:
        k1, p1 = -k1, g1_neg(p1)
    if k2 < 0:
        k2, p2 = -k2, g1_neg(p2)
    n1 = _wnaf(k1, 4)
    n2 = _wnaf(k2, 4)
    # odd multiples 1P, 3P, 5P, 7P for both halves
    tabs = []
    for base in (p1, p2):
        bj = to_jac(base)
        twoj = jac_dbl(bj)
        tab = [bj]
        for _ in range(3):
            tab.append(jac_add(tab[-1], twoj))
        tabs.append(tab)
    t1, t2 = tabs
    acc = JAC_INF
    for i in range(max(len(n1), len(n2)) - 1, -1, -1):
        acc = jac_dbl(acc)
        if i < len(n1) and n1[i]:
            d = n1[i]
            acc = jac_add(acc, t1[d >> 1] if d > 0 else jac_neg(t1[(-d) >> 1]))
        if i < len(n2) and n2[i]:
            d = n2[i]
            acc = jac_add(acc, t2[d >> 1] if d > 0 else jac_neg(t2[(-d) >> 1]))
    return acc


def g1_mul(pt, k: int):
    return to_affine(g1_mul_jac(pt, k))


# ---------------------------------------------------------------------------
# Multi-scalar multiplication (Pippenger)
# ---------------------------------------------------------------------------

def _msm_window(n: int) -> int:
    if n < 4:
        return 2
    c = max(2, n.bit_length() - 3)
    return min(c, 14)


def g1_msm(points, scalars):
    """Sum of scalar_i * point_i over affine points; returns affine."""
    pairs = [(p, s % R) for p, s in zip(points, scalars) if p is not None and s % R]
    if not pairs:
        return None
    if len(pairs) <= 3:
        acc = JAC_INF
        for p, s in pairs:
            acc = jac_add(acc, g1_mul_jac(p, s))
        return to_affine(acc)
    c = _msm_window(len(pairs))
    nwin = (R.bit_length() + c - 1) // c
    mask = (1 << c) - 1
    total = JAC_INF
    for w in range(nwin - 1, -1, -1):
        shift = w * c
        buckets = [None] * (1 << c)
        for p, s in pairs:
            d = (s >> shift) & mask
            if d:
                cur = buckets[d]
                buckets[d] = (p[0], p[1], 1) if cur is None else jac_add_affine(cur, p)
        running = JAC_INF
        window_sum = JAC_INF
        for d in range(mask, 0, -1):
            b = buckets[d]
            if b is not None:
                running = jac_add(running, b)
            window_sum = jac_add(window_sum, running)
        if total != JAC_INF:
            for _ in range(c):
                total = jac_dbl(total)
        total = jac_add(total, window_sum)
    return to_affine(total)


# ---------------------------------------------------------------------------
# Fixed-base multiplication
# ---------------------------------------------------------------------------

class FixedBaseG1:
    """Windowed precomputation for many multiplications of one G1 base."""

    def __init__(self, base, window: int = 4):
        self.window = window
        nwin = (R.bit_length() + window - 1) // window
        self.tables = []
        row = to_jac(base)
        for _ in range(nwin):
            tab = [JAC_INF]
            cur = JAC_INF
            for _ in range((1 << window) - 1):
                cur = jac_add(cur, row)
                tab.append(cur)
            self.tables.append(batch_to_affine(tab))
            for _ in range(window):
                row = jac_dbl(row)

    def mul_jac(self, k: int):
        k %= R
        acc = JAC_INF
        w = self.window
        mask = (1 << w) - 1
        i = 0
        while k:
            d = k & mask
            if d:
                acc = jac_add_affine(acc, self.tables[i][d])
            k >>= w
            i += 1
        return acc

    def mul(self, k: int):
        return to_affine(self.mul_jac(k))


# ---------------------------------------------------------------------------
# F_{P^2} arithmetic
# ---------------------------------------------------------------------------

def fp2_add(a, b):
    return ((a[0] + b[0]) % P, (a[1] + b[1]) % P)


def fp2_sub(a, b):
    return ((a[0] - b[0]) % P, (a[1] - b[1]) % P)


def fp2_neg(a):
    return ((P - a[0]) % P if a[0] else 0, (P - a[1]) % P if a[1] else 0)


def fp2_mul(a, b):
    a0, a1 = a
    b0, b1 = b
    t0 = a0 * b0
    t1 = a1 * b1
    # (a0+a1)(b0+b1) - t0 - t1 = a0*b1 + a1*b0
    return ((t0 - t1) % P, ((a0 + a1) * (b0 + b1) - t0 - t1) % P)


def fp2_sqr(a):
    a0, a1 = a
    # (a0+a1)(a0-a1) + 2*a0*a1*i
    return ((a0 + a1) * (a0 - a1) % P, 2 * a0 * a1 % P)


def fp2_scalar(a, k: int):
    return (a[0] * k % P, a[1] * k % P)


def fp2_inv(a):
    a0, a1 = a
    norm = (a0 * a0 + a1 * a1) % P
    ni = inv(norm, P)
    return (a0 * ni % P, (P - a1) * ni % P)


def fp2_conj(a):
    return (a[0], (P - a[1]) % P if a[1] else 0)


FP2_ZERO = (0, 0)
FP2_ONE = (1, 0)

# Twist coefficient xi = 9 + i; the twist curve is y^2 = x^3 + 3/xi.
FP2_XI = (9, 1)
G2_B = fp2_mul((3, 0), fp2_inv(FP2_XI))


# ---------------------------------------------------------------------------
# G2: jacobian core over F_{P^2}
# ---------------------------------------------------------------------------

def g2_on_curve(pt) -> bool:
    if pt is None:
        return True
    x, y = pt
    if not all(0 <= c < P for c in (*x, *y)):
        return False
    lhs = fp2_sqr(y)
    rhs = fp2_add(fp2_mul(fp2_sqr(x), x), G2_B)
    return lhs == rhs


G2_JAC_INF = (FP2_ONE, FP2_ONE, FP2_ZERO)


def g2_jac_dbl(pt):
    X, Y, Z = pt
    if Z == FP2_ZERO or Y == FP2_ZERO:
        return G2_JAC_INF
    YY = fp2_sqr(Y)
    A = fp2_scalar(fp2_mul(X, YY), 4)
    B = fp2_scalar(fp2_sqr(YY), 8)
    C = fp2_scalar(fp2_sqr(X), 3)
    X3 = fp2_sub(fp2_sqr(C), fp2_scalar(A, 2))
    Y3 = fp2_sub(fp2_mul(C, fp2_sub(A, X3)), B)
    Z3 = fp2_scalar(fp2_mul(Y, Z), 2)
    return X3, Y3, Z3


def g2_jac_add(p1, p2):
    X1, Y1, Z1 = p1
    X2, Y2, Z2 = p2
    if Z1 == FP2_ZERO:
        return p2
    if Z2 == FP2_ZERO:
        return p1
    Z1Z1 = fp2_sqr(Z1)
    Z2Z2 = fp2_sqr(Z2)
    U1 = fp2_mul(X1, Z2Z2)
    U2 = fp2_mul(X2, Z1Z1)
    S1 = fp2_mul(fp2_mul(Y1, Z2), Z2Z2)
    S2 = fp2_mul(fp2_mul(Y2, Z1), Z1Z1)
    if U1 == U2:
        if S1 != S2:
            return G2_JAC_INF
        return g2_jac_dbl(p1)
    H = fp2_sub(U2, U1)
    I = fp2_scalar(fp2_sqr(H), 4)
    J = fp2_mul(H, I)
    rr = fp2_scalar(fp2_sub(S2, S1), 2)
    V = fp2_mul(U1, I)
    X3 = fp2_sub(fp2_sub(fp2_sqr(rr), J), fp2_scalar(V, 2))
    Y3 = fp2_sub(fp2_mul(rr, fp2_sub(V, X3)), fp2_scalar(fp2_mul(S1, J), 2))
    Z3 = fp2_scalar(fp2_mul(fp2_mul(Z1, Z2), H), 2)
    return X3, Y3, Z3


def g2_to_jac(pt):
    if pt is None:
        return G2_JAC_INF
    return (pt[0], pt[1], FP2_ONE)


def g2_to_affine(pt):
    X, Y, Z = pt
    if Z == FP2_ZERO:
        return None
    zi = fp2_inv(Z)
    zi2 = fp2_sqr(zi)
    return (fp2_mul(X, zi2), fp2_mul(Y, fp2_mul(zi2, zi)))


def g2_neg(pt):
    if pt is None:
        return None
    return (pt[0], fp2_neg(pt[1]))


def g2_add(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    return g2_to_affine(g2_jac_add(g2_to_jac(p1), g2_to_jac(p2)))


def g2_mul_jac(pt, k: int):
    if pt is None or k % R == 0:
        return G2_JAC_INF
    k %= R
    digits = _wnaf(k, 4)
    bj = g2_to_jac(pt)
    twoj = g2_jac_dbl(bj)
    tab = [bj]
    for _ in range(3):
        tab.append(g2_jac_add(tab[-1], twoj))
    acc = G2_JAC_INF
    for i in range(len(digits) - 1, -1, -1):
        acc = g2_jac_dbl(acc)
        d = digits[i]
        if d:
            if d > 0:
                acc = g2_jac_add(acc, tab[d >> 1])
            else:
                t = tab[(-d) >> 1]
                acc = g2_jac_add(acc, (t[0], fp2_neg(t[1]), t[2]))
    return acc


def g2_mul(pt, k: int):
    return g2_to_affine(g2_mul_jac(pt, k))


def g2_in_subgroup(pt) -> bool:
    """Full-order check: R * pt == identity (twist cofactor is not 1)."""
    if pt is None:
        return True
    if not g2_on_curve(pt):
        return False
    acc = G2_JAC_INF
    add = g2_to_jac(pt)
    k = R
    while k:
        if k & 1:
            acc = g2_jac_add(acc, add)
        add = g2_jac_dbl(add)
        k >>= 1
    return g2_to_affine(acc) is None


def g2_msm(points, scalars):
    """Pippenger over G2; same structure as :func:`g1_msm`."""
    pairs = [(p, s % R) for p, s in zip(points, scalars) if p is not None and s % R]
    if not pairs:
        return None
    if len(pairs) <= 3:
        acc = G2_JAC_INF
        for p, s in pairs:
            acc = g2_jac_add(acc, g2_mul_jac(p, s))
        return g2_to_affine(acc)
    c = _msm_window(len(pairs))
    nwin = (R.bit_length() + c - 1) // c
    mask = (1 << c) - 1
    total = G2_JAC_INF
    for w in range(nwin - 1, -1, -1):
        shift = w * c
        buckets = [None] * (1 << c)
        for p, s in pairs:
            d = (s >> shift) & mask
            if d:
                cur = buckets[d]
                buckets[d] = g2_to_jac(p) if cur is None else g2_jac_add(cur, g2_to_jac(p))
        running = G2_JAC_INF
        window_sum = G2_JAC_INF
        for d in range(mask, 0, -1):
            b = buckets[d]
            if b is not None:
                running = g2_jac_add(running, b)
            window_sum = g2_jac_add(window_sum, running)
        if total != G2_JAC_INF:
            for _ in range(c):
                total = g2_jac_dbl(total)
        total = g2_jac_add(total, window_sum)
    return g2_to_affine(total)


class FixedBaseG2:
    """Windowed precomputation for many multiplications of one G2 base."""

    def __init__(self, base, window: int = 4):
        self.window = window
        nwin = (R.bit_length() + window - 1) // window
        self.tables = []
        row = g2_to_jac(base)
        for _ in range(nwin):
            tab = [None]
            cur = G2_JAC_INF
            for _ in range((1 << window) - 1):
                cur = g2_jac_add(cur, row)
                tab.append(g2_to_affine(cur))
            self.tables.append(tab)
            for _ in range(window):
                row = g2_jac_dbl(row)

    def mul_jac(self, k: int):
        k %= R
        acc = G2_JAC_INF
        w = self.window
        mask = (1 << w) - 1
        i = 0
        while k:
            d = k & mask
            if d:
                acc = g2_jac_add(acc, g2_to_jac(self.tables[i][d]))
            k >>= w
            i += 1
        return acc

    def mul(self, k: int):
        return g2_to_affine(self.mul_jac(k))
