"""Relying-party library.

Registers with an identity provider, refuses to use any artifact bundle
whose digest the trust anchor has not published (fail closed), compiles
the trust anchor's own copy of the program, generates and caches the
membership proof, and validates returned identity tokens.

The privacy-relevant invariant lives here: nothing the relying party
sends during a login -- the proof, the public inputs, scope, state --
contains the client identifier or the credential signature.  The only
public input is the identity provider's credential key, which is the same
for every relying party of that provider.
"""

from __future__ import annotations

import base64
import os
import secrets
import time
from dataclasses import dataclass

import requests

from .ceremony import ZkArtifacts
from .encoding import Reader, fr_bytes, sha256, u32, u64
from .groth16 import Proof, prove, verify as groth16_verify
from .httpd import SOURCE_HEADER
from .program import (
    InvalidCredential,
    build_witness,
    compile_cached,
    public_inputs_for,
    require_membership_schema,
)
from .registry import RegistryClient, RegistryUnavailable
from .schnorr import ClientCredential, Signature
from . import tokens as token_mod
from .tokens import BadSignature, Expired


class IntegrityMismatch(Exception):
    """Artifacts do not match the trust anchor's published digest."""


class AccessDenied(Exception):
    pass


class NoProof(Exception):
    pass


class StateMismatch(ValueError):
    pass


class IdpError(Exception):
    def __init__(self, code: str, detail: str = ""):
        super().__init__(detail or code)
        self.code = code


@dataclass(frozen=True)
class MembershipProof:
    proof: Proof
    public_inputs: tuple
    artifact_version: int

    def to_bytes(self) -> bytes:
        out = [self.proof.to_bytes(), u32(len(self.public_inputs))]
        out += [fr_bytes(x) for x in self.public_inputs]
        out.append(u64(self.artifact_version))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "MembershipProof":
        r = Reader(data)
        proof = Proof(r.g1(), r.g2(), r.g1())
        inputs = tuple(r.fr() for _ in range(r.u32()))
        version = r.u64()
        r.expect_end()
        return cls(proof, inputs, version)

    def to_b64(self) -> str:
        return base64.urlsafe_b64encode(self.to_bytes()).decode()

    @classmethod
    def from_b64(cls, text: str) -> "MembershipProof":
        pad = -len(text) % 4
        return cls.from_bytes(base64.urlsafe_b64decode(text + "=" * pad))


def _decode_credential(obj: dict) -> ClientCredential:
    return ClientCredential(
        client_id=int(obj["client_id"]),
        signature=Signature(
            (int(obj["R"][0]), int(obj["R"][1])), int(obj["S"])
        ),
        idp_credential_pk=(int(obj["pk"][0]), int(obj["pk"][1])),
    )


class RelyingParty:
    def __init__(self, name: str, oidf: RegistryClient, idp_url: str, idp_id: str,
                 actor: str | None = None, cache_dir: str | None = None):
        self.name = name
        self.actor = actor or ("rp:" + name)
        self.oidf = oidf
        self.idp_url = idp_url.rstrip("/")
        self.idp_id = idp_id
        self.cache_dir = cache_dir
        self.credential: ClientCredential | None = None
        self.artifacts: ZkArtifacts | None = None
        self.cached_proof: MembershipProof | None = None
        self.access_token: str | None = None
        self.deregistered = False
        self._program = None
        self._idp_token_key: bytes | None = None
        self._session = requests.Session()
        self._states: dict[str, float] = {}

    # -- plumbing ------------------------------------------------------------

    def _headers(self):
        headers = {SOURCE_HEADER: self.actor}
        if self.access_token:
            headers["Authorization"] = "Bearer " + self.access_token
        return headers

    def _call(self, method: str, path: str, **kwargs):
        try:
            resp = self._session.request(
                method, self.idp_url + path, headers=self._headers(),
                timeout=600, **kwargs,
            )
        except requests.RequestException as exc:
            raise IdpError("unreachable", str(exc)) from None
        if resp.status_code in (401, 403):
            raise AccessDenied(resp.json().get("detail", ""))
        if resp.status_code != 200:
            try:
                obj = resp.json()
            except ValueError:
                obj = {"error": "http_%d" % resp.status_code, "detail": resp.text}
            raise IdpError(obj.get("error", "error"), obj.get("detail", ""))
        return resp

    # -- registration and artifact integrity ---------------------------------

    def register(self, redirect_uri: str = "proxy:pending") -> "RelyingParty":
        resp = self._call("POST", "/register", json={
            "client_name": self.name,
            "redirect_uri": redirect_uri,
        })
        obj = resp.json()
        credential = _decode_credential(obj["credential"])
        artifacts = ZkArtifacts.from_bytes(base64.b64decode(obj["artifacts"]))
        self.access_token = obj["access_token"]
        if not self.check_artifact_integrity(artifacts):
            self.access_token = None
            raise IntegrityMismatch(
                "artifacts from the identity provider do not match the "
                "trust anchor's published digest; registration aborted"
            )
        circuit = self._compiled(artifacts)
        from .program import scheme_from_program
        from .schnorr import verify_native
        scheme = scheme_from_program(self._program)
        if not verify_native(credential.idp_credential_pk, credential.client_id,
                             credential.signature, scheme, circuit.hash_params):
            raise InvalidCredential("issued credential fails native verification")
        self.credential = credential
        self.artifacts = artifacts
        self.cached_proof = None
        self._fetch_token_key()
        return self

    def check_artifact_integrity(self, artifacts: ZkArtifacts) -> bool:
        """Compare the bundle digest against the trust anchor's latest
        published digest for this identity provider.  Registry trouble is a
        hard failure (fail closed), never a silent pass."""
        record = self.oidf.latest_digest(self.idp_id)  # raises RegistryUnavailable
        if artifacts.artifact_digest.hex() != record["artifact_digest"]:
            return False
        program = self._boilerplate()
        if artifacts.program_digest != program.program_digest:
            return False
        compiled = compile_cached(program)
        if artifacts.verification_key.circuit_digest != compiled.cs.digest():
            return False
        return True

    def _boilerplate(self):
        if self._program is None:
            program = self.oidf.boilerplate()
            require_membership_schema(program)
            self._program = program
        return self._program

    def _compiled(self, artifacts: ZkArtifacts):
        program = self._boilerplate()
        if artifacts.program_digest != program.program_digest:
            raise IntegrityMismatch("artifact bundle built for a different program")
        return compile_cached(program)

    # -- proving -------------------------------------------------------------

    def generate_proof(self) -> MembershipProof:
        """Prove membership under the current artifacts, with caching.

        The proof is bound to the artifact version it was generated under;
        refresh invalidates it when the version moves.
        """
        if self.credential is None or self.artifacts is None:
            raise NoProof("not registered")
        if self.cached_proof is not None \
                and self.cached_proof.artifact_version == self.artifacts.version:
            return self.cached_proof
        cached = self._load_disk_cache()
        if cached is not None:
            self.cached_proof = cached
            return cached
        circuit = self._compiled(self.artifacts)
        pk_point = self.credential.idp_credential_pk
        witness = build_witness(circuit, pk_point, self.credential)
        proof = prove(self.artifacts.proving_key, witness)
        membership = MembershipProof(
            proof=proof,
            public_inputs=tuple(public_inputs_for(pk_point)),
            artifact_version=self.artifacts.version,
        )
        if not groth16_verify(self.artifacts.verification_key,
                              list(membership.public_inputs), proof):
            raise NoProof("freshly generated proof failed self-verification")
        if len(membership.to_bytes()) > 4096:
            raise NoProof("serialized proof exceeds the 4096-byte budget")
        self.cached_proof = membership
        self._store_disk_cache(membership)
        return membership

    def _cache_path(self):
        if not self.cache_dir or self.artifacts is None:
            return None
        os.makedirs(self.cache_dir, exist_ok=True)
        return os.path.join(
            self.cache_dir,
            "proof-%s.bin" % self.artifacts.artifact_digest.hex()[:32],
        )

    def _load_disk_cache(self):
        path = self._cache_path()
        if path and os.path.exists(path):
            with open(path, "rb") as fh:
                proof = MembershipProof.from_bytes(fh.read())
            if proof.artifact_version == self.artifacts.version:
                return proof
        return None

    def _store_disk_cache(self, proof: MembershipProof):
        path = self._cache_path()
        if path:
            with open(path, "wb") as fh:
                fh.write(proof.to_bytes())

    # -- login flow ----------------------------------------------------------

    def initiate_login(self, scope, redirect_handle: str) -> dict:
        """Build the authentication request parameters.

        Contains the proof, scope, a fresh state value and the proxy
        redirect handle -- and nothing identifying this relying party.
        """
        proof = self.generate_proof()
        state = secrets.token_hex(16)
        self._states[state] = time.time()
        return {
            "proof": proof.to_b64(),
            "scope": " ".join(scope),
            "state": state,
            "redirect_handle": redirect_handle,
        }

    def _fetch_token_key(self):
        resp = self._call("GET", "/token-signing-key")
        self._idp_token_key = base64.b64decode(resp.json()["key"])

    def validate_token(self, id_token: str, state: str):
        """Verify the returned token: signature, expiry, state binding.

        Returns (subject, claims).
        """
        if self._idp_token_key is None:
            self._fetch_token_key()
        payload = token_mod.verify_token(id_token, self._idp_token_key)
        if state not in self._states:
            raise StateMismatch("unknown or reused state value")
        if payload.get("sbh") != sha256(state.encode()).hex():
            raise StateMismatch("token is not bound to this login's state")
        del self._states[state]
        return payload["sub"], payload.get("claims", {})

    def handle_callback(self, params: dict):
        """Fragment parameters delivered by the user agent."""
        if "id_token" not in params or "state" not in params:
            raise StateMismatch("callback missing id_token or state")
        return self.validate_token(params["id_token"], params["state"])

    # -- deregistration ---------------------------------------------------------

    def deregister(self) -> dict:
        """Leave the identity service; the provider rotates artifacts for
        everyone else.  This party's credential and proofs become useless."""
        resp = self._call("POST", "/deregister")
        obj = resp.json()
        self.deregistered = True
        self.access_token = None
        return obj

    # -- state persistence (CLI and restart recovery) -----------------------------

    def to_state(self) -> dict:
        if self.credential is None or self.artifacts is None:
            raise NoProof("not registered")
        cred = self.credential
        return {
            "name": self.name,
            "idp_url": self.idp_url,
            "idp_id": self.idp_id,
            "access_token": self.access_token,
            "credential": {
                "client_id": str(cred.client_id),
                "R": [str(cred.signature.R[0]), str(cred.signature.R[1])],
                "S": str(cred.signature.S),
                "pk": [str(cred.idp_credential_pk[0]),
                       str(cred.idp_credential_pk[1])],
            },
            "artifacts": base64.b64encode(self.artifacts.to_bytes()).decode(),
            "cached_proof": self.cached_proof.to_b64() if self.cached_proof else None,
        }

    @classmethod
    def from_state(cls, state: dict, oidf: RegistryClient,
                   cache_dir: str | None = None) -> "RelyingParty":
        rp = cls(state["name"], oidf, state["idp_url"], state["idp_id"],
                 cache_dir=cache_dir)
        rp.access_token = state["access_token"]
        rp.credential = _decode_credential(state["credential"])
        rp.artifacts = ZkArtifacts.from_bytes(base64.b64decode(state["artifacts"]))
        if state.get("cached_proof"):
            proof = MembershipProof.from_b64(state["cached_proof"])
            if proof.artifact_version == rp.artifacts.version:
                rp.cached_proof = proof
        return rp

    # -- artifact refresh ------------------------------------------------------

    def refresh_artifacts(self) -> bool:
        """Fetch the current bundle; returns True when the version advanced.

        Deregistered parties get AccessDenied; a bundle that fails the
        integrity check is rejected outright.
        """
        resp = self._call("GET", "/artifacts/current")
        obj = resp.json()
        artifacts = ZkArtifacts.from_bytes(base64.b64decode(obj["artifacts"]))
        if not self.check_artifact_integrity(artifacts):
            raise IntegrityMismatch("refreshed artifacts fail the integrity check")
        if self.artifacts is not None \
                and artifacts.version == self.artifacts.version:
            return False
        self.artifacts = artifacts
        self.cached_proof = None
        return True
