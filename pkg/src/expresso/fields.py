"""Prime fields for the proving system.

Two fields matter here:

* ``P`` -- the base field of the outer pairing curve (coordinates of G1/G2).
* ``R`` -- the scalar field of the outer curve, which is simultaneously the
  base field of the embedded signature curve and the field all circuit
  arithmetic lives in.

Field elements are plain Python ints in ``[0, modulus)``.  Keeping them as
ints (rather than a wrapper class) is deliberate: the provers and the setup
do millions of modular operations and attribute indirection is measurable.
"""

from __future__ import annotations

import hashlib

import gmpy2

# BN parameter u and the derived curve constants.
BN_U = 4965661367192848881

# Base field modulus (coordinates of the pairing groups).
P = 21888242871839275222246405745257275088696311157297823662689037894645226208583

# Scalar field modulus (circuit field; order of G1/G2).
R = 21888242871839275222246405745257275088548364400416034343698204186575808495617

assert P == 36 * BN_U**4 + 36 * BN_U**3 + 24 * BN_U**2 + 6 * BN_U + 1
assert R == 36 * BN_U**4 + 36 * BN_U**3 + 18 * BN_U**2 + 6 * BN_U + 1

# R - 1 = 2^28 * odd, so the circuit field supports radix-2 NTT domains up
# to 2^28 points.  5 generates the multiplicative group.
TWO_ADICITY = 28
_FR_GENERATOR = 5

FIELD_BYTES = 32


def inv(a: int, m: int) -> int:
    """Modular inverse via gmpy2 (about 8x faster than pow(a, -1, m))."""
    if a == 0:
        raise ZeroDivisionError("inverse of zero")
    return int(gmpy2.invert(a, m))


def batch_inv(values: list[int], m: int) -> list[int]:
    """Montgomery batch inversion: one field inverse for the whole list."""
    n = len(values)
    if n == 0:
        return []
    prefix = [0] * n
    acc = 1
    for i, v in enumerate(values):
        if v == 0:
            raise ZeroDivisionError("inverse of zero at index %d" % i)
        prefix[i] = acc
        acc = acc * v % m
    acc = inv(acc, m)
    out = [0] * n
    for i in range(n - 1, -1, -1):
        out[i] = acc * prefix[i] % m
        acc = acc * values[i] % m
    return out


def root_of_unity(order: int) -> int:
    """Primitive ``order``-th root of unity in the scalar field.

    ``order`` must be a power of two not exceeding 2^28.
    """
    if order < 1 or order & (order - 1):
        raise ValueError("order must be a power of two, got %d" % order)
    if order > (1 << TWO_ADICITY):
        raise ValueError("order exceeds the field's 2-adicity")
    return pow(_FR_GENERATOR, (R - 1) // order, R)


def ntt(values: list[int], omega: int, modulus: int = R) -> list[int]:
    """In-order iterative radix-2 NTT of ``values`` (length a power of two)."""
    n = len(values)
    if n & (n - 1):
        raise ValueError("NTT size must be a power of two")
    a = list(values)
    # bit-reversal permutation
    j = 0
    for i in range(1, n):
        bit = n >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            a[i], a[j] = a[j], a[i]
    length = 2
    while length <= n:
        w_len = pow(omega, n // length, modulus)
        half = length >> 1
        for start in range(0, n, length):
            w = 1
            for k in range(start, start + half):
                u = a[k]
                v = a[k + half] * w % modulus
                a[k] = (u + v) % modulus
                a[k + half] = (u - v) % modulus
                w = w * w_len % modulus
        length <<= 1
    return a


def intt(values: list[int], omega: int, modulus: int = R) -> list[int]:
    """Inverse NTT matching :func:`ntt`."""
    n = len(values)
    out = ntt(values, inv(omega, modulus), modulus)
    n_inv = inv(n, modulus)
    return [x * n_inv % modulus for x in out]


class HashDRBG:
    """Deterministic byte stream from a seed (SHA-256 in counter mode).

    Used everywhere reproducible randomness is required: key derivation in
    tests, ceremony share derivation from beacon values, deterministic
    proof randomness.
    """

    def __init__(self, seed: bytes, domain: bytes = b""):
        self._key = hashlib.sha256(domain + b"\x00" + seed).digest()
        self._counter = 0
        self._buffer = b""

    def read(self, n: int) -> bytes:
        while len(self._buffer) < n:
            block = hashlib.sha256(
                self._key + self._counter.to_bytes(8, "big")
            ).digest()
            self._buffer += block
            self._counter += 1
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def read_int(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection sampling."""
        nbytes = (bound.bit_length() + 15) // 8
        limit = (1 << (8 * nbytes)) - (1 << (8 * nbytes)) % bound
        while True:
            candidate = int.from_bytes(self.read(nbytes), "little")
            if candidate < limit:
                return candidate % bound

    def read_scalar(self, modulus: int = R, nonzero: bool = False) -> int:
        while True:
            x = self.read_int(modulus)
            if x or not nonzero:
                return x


def rand_scalar(seed: bytes, domain: bytes, modulus: int = R) -> int:
    """One-shot deterministic scalar derivation."""
    return HashDRBG(seed, domain).read_scalar(modulus)


def sqrt_fr(a: int) -> int | None:
    """Square root in the scalar field (Tonelli-Shanks; R = 1 mod 4)."""
    a %= R
    if a == 0:
        return 0
    if pow(a, (R - 1) // 2, R) != 1:
        return None
    q = (R - 1) >> TWO_ADICITY
    z = pow(_FR_GENERATOR, q, R)  # generator of the 2-Sylow subgroup
    m = TWO_ADICITY
    c = z
    t = pow(a, q, R)
    x = pow(a, (q + 1) // 2, R)
    while t != 1:
        t2 = t
        i = 0
        while t2 != 1:
            t2 = t2 * t2 % R
            i += 1
        b = pow(c, 1 << (m - i - 1), R)
        m = i
        c = b * b % R
        t = t * c % R
        x = x * b % R
    return x
