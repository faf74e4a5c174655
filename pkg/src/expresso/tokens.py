"""Compact signed identity tokens.

Three base64url parts, header.payload.signature, JSON payload -- the shape
OIDC implementations expect.  Signed with Ed25519, which is deliberately a
different key and algorithm from the embedded-curve credential key: token
verification happens in ordinary application code, never inside a circuit,
so there is no reason to pay circuit-friendliness costs here.
"""

from __future__ import annotations

import base64
import json
import time

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)


class BadSignature(ValueError):
    pass


class Expired(ValueError):
    pass


def _b64e(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode()


def _b64d(text: str) -> bytes:
    pad = -len(text) % 4
    return base64.urlsafe_b64decode(text + "=" * pad)


_HEADER = _b64e(json.dumps({"alg": "Ed25519", "typ": "IDT"}).encode())


class TokenSigner:
    def __init__(self, private_key: Ed25519PrivateKey | None = None):
        self._key = private_key or Ed25519PrivateKey.generate()

    @classmethod
    def from_seed(cls, seed: bytes) -> "TokenSigner":
        return cls(Ed25519PrivateKey.from_private_bytes(seed[:32].ljust(32, b"\0")))

    def public_bytes(self) -> bytes:
        from cryptography.hazmat.primitives import serialization

        return self._key.public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )

    def issue(self, payload: dict) -> str:
        body = _b64e(json.dumps(payload, sort_keys=True).encode())
        signing_input = ("%s.%s" % (_HEADER, body)).encode()
        sig = self._key.sign(signing_input)
        return "%s.%s.%s" % (_HEADER, body, _b64e(sig))


def verify_token(token: str, public_key: bytes, now: float | None = None) -> dict:
    """Check signature and expiry; returns the payload.

    Raises BadSignature / Expired; callers add their own claim checks.
    """
    try:
        header, body, sig = token.split(".")
        key = Ed25519PublicKey.from_public_bytes(public_key)
        key.verify(_b64d(sig), ("%s.%s" % (header, body)).encode())
        payload = json.loads(_b64d(body))
    except (ValueError, InvalidSignature) as exc:
        raise BadSignature("token failed verification: %s" % exc) from None
    exp = payload.get("exp")
    if exp is not None and (now if now is not None else time.time()) > exp:
        raise Expired("token expired at %s" % exp)
    return payload
