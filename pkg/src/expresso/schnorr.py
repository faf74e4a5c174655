"""Schnorr signatures over the embedded curve.

The credential scheme the membership circuit proves knowledge of: the
identity provider signs a client identifier M with its credential key, and
the relying party later proves it holds a valid (R, S) pair without
revealing M.

Verification is the textbook equation

    S * G == R + h * pk,      h = hash(R.x, R.y, pk.x, pk.y, M)

with h binding R (plain hash(pk, M) would let an attacker pick S and solve
for R).  Nonces are derived deterministically from (sk, M) so signing is
reproducible; there is no signing-time randomness to get wrong.

``SchemeParams`` bounds the scalar widths.  The canonical instance uses the
full subgroup order; narrow instances exist so test deployments can compile
much smaller circuits while keeping the same verification equation.  The
native verifier intentionally checks exactly what the circuit checks (bit
widths, low-order rejection) so the two paths agree on adversarial inputs,
not just honest ones.
"""

from __future__ import annotations

from typing import NamedTuple

from . import babyjubjub as ec
from .fields import HashDRBG, R
from .poseidon import PoseidonParams, canonical_params, circuit_hash

FIELD_BITS = 254  # hash values are field elements below 2^254


class SchemeParams(NamedTuple):
    """Scalar width bounds for the signature scheme.

    sk_bits / nonce_bits bound key and nonce sampling; hash_bits truncates
    the challenge (254 = use the full hash); s_bits is the bit width the
    circuit range-checks S against.
    """

    sk_bits: int
    nonce_bits: int
    hash_bits: int
    s_bits: int

    @classmethod
    def canonical(cls) -> "SchemeParams":
        return cls(sk_bits=250, nonce_bits=250, hash_bits=FIELD_BITS, s_bits=251)

    @classmethod
    def narrow(cls, sk_bits: int, nonce_bits: int, hash_bits: int) -> "SchemeParams":
        s_bits = max(nonce_bits, hash_bits + sk_bits) + 1
        if s_bits >= ec.Q.bit_length():
            raise ValueError("narrow widths must keep S below the subgroup order")
        return cls(sk_bits, nonce_bits, hash_bits, s_bits)


CANONICAL_SCHEME = SchemeParams.canonical()


class SigningKeyPair(NamedTuple):
    sk: int
    pk: tuple


class Signature(NamedTuple):
    R: tuple
    S: int


class ClientCredential(NamedTuple):
    """A relying party's membership credential: the signed client id."""

    client_id: int
    signature: Signature
    idp_credential_pk: tuple


def generate_signing_keypair(seed: bytes, scheme: SchemeParams = CANONICAL_SCHEME) -> SigningKeyPair:
    """Deterministic keypair from a seed; rejects a zero-derived scalar."""
    drbg = HashDRBG(seed, domain=b"signing-key")
    bound = min(1 << scheme.sk_bits, ec.Q)
    while True:
        sk = drbg.read_int(bound)
        if sk != 0:
            break
    return SigningKeyPair(sk, ec.mul(ec.BASE, sk))


def challenge(R_pt, pk, message: int,
              scheme: SchemeParams = CANONICAL_SCHEME,
              hash_params: PoseidonParams | None = None) -> int:
    h = circuit_hash([R_pt[0], R_pt[1], pk[0], pk[1], message], hash_params)
    if scheme.hash_bits < FIELD_BITS:
        h &= (1 << scheme.hash_bits) - 1
    return h


def sign(sk: int, message: int,
         scheme: SchemeParams = CANONICAL_SCHEME,
         hash_params: PoseidonParams | None = None) -> Signature:
    if not (0 < sk < ec.Q):
        raise ValueError("invalid signing key")
    if not (0 <= message < R):
        raise ValueError("message must be a canonical field element")
    seed = sk.to_bytes(32, "little") + message.to_bytes(32, "little")
    bound = min(1 << scheme.nonce_bits, ec.Q)
    k = HashDRBG(seed, domain=b"nonce").read_int(bound - 1) + 1
    R_pt = ec.mul(ec.BASE, k)
    h = challenge(R_pt, ec.mul(ec.BASE, sk), message, scheme, hash_params)
    S = (k + h * sk) % ec.Q
    return Signature(R_pt, S)


def verify_native(pk, message: int, sig: Signature,
                  scheme: SchemeParams = CANONICAL_SCHEME,
                  hash_params: PoseidonParams | None = None) -> bool:
    """Check S*G == R + h*pk.

    Mirrors the in-circuit checks exactly: on-curve inputs, R not of low
    order, S within the circuit's range check.  Malformed inputs yield
    False, never an exception.
    """
    try:
        R_pt, S = sig.R, sig.S
        if not (ec.on_curve(pk) and ec.on_curve(R_pt)):
            return False
        if ec.is_low_order(R_pt):
            return False
        if not (0 <= S < (1 << scheme.s_bits)):
            return False
        if not (0 <= message < R):
            return False
        h = challenge(R_pt, pk, message, scheme, hash_params)
        lhs = ec.mul(ec.BASE, S)
        rhs = ec.add(R_pt, ec.mul(pk, h))
        return lhs == rhs
    except (TypeError, ValueError, IndexError):
        return False
