"""The identity provider.

Issues signed client-identifier credentials at registration, hands out the
current artifact bundle, authenticates users, verifies membership proofs
under exactly one verification key at a time, derives proof-based
pairwise pseudonyms, and rotates artifacts when a relying party leaves.

What the provider deliberately does NOT keep: plaintext client
identifiers.  Only a salted hash is stored for duplicate detection, so a
database leak cannot link future proofs back to registrations.  And there
is no per-relying-party artifact state at all -- every registered party
holds the same bundle version, which is precisely what makes proofs
unlinkable to parties.
"""

from __future__ import annotations

import base64
import hashlib
import secrets
import threading
import time
from dataclasses import dataclass, field

from .ceremony import ZkArtifacts
from .encoding import sha256, tagged_concat
from .fields import R
from .groth16 import verify_with_reason
from .httpd import ApiError, Request, Response, Service
from .program import (
    compile_cached,
    public_inputs_for,
    require_membership_schema,
    scheme_from_program,
)
from .registry import PoolExhausted, RegistryClient, RegistryUnavailable
from .rp import MembershipProof
from .schnorr import ClientCredential, generate_signing_keypair, sign
from .tokens import TokenSigner

TOKEN_LIFETIME = 600.0
RATE_LIMIT_WINDOW = 60.0
RATE_LIMIT_FAILURES = 5


class BadCredentials(Exception):
    pass


class Throttled(Exception):
    pass


class ProofInvalid(Exception):
    pass


class StaleArtifacts(Exception):
    """Proof declares an artifact version other than the current one."""


class ConsentDenied(Exception):
    pass


class UnknownClient(Exception):
    pass


@dataclass
class UserRecord:
    user_id: str              # >= 128-bit random identifier
    password_salt: bytes
    password_verifier: bytes
    ppid_salt: bytes          # fixed at account creation
    attributes: dict


@dataclass
class ClientEntry:
    handle: str
    name: str
    redirect_uri: str
    client_id_hash: bytes
    access_token: str
    registered_at: float = field(default_factory=time.time)


def _scrypt(password: str, salt: bytes) -> bytes:
    return hashlib.scrypt(password.encode(), salt=salt, n=2**12, r=8, p=1)


def derive_ppid(user_id: str, proof_bytes: bytes, ppid_salt: bytes) -> str:
    """PPID = H(user_id || H(proof) || salt), length-prefixed throughout."""
    proof_id = sha256(proof_bytes)
    return sha256(tagged_concat(user_id.encode(), proof_id, ppid_salt)).hex()


class IdentityProvider:
    def __init__(self, idp_id: str, issuer: str, registry: RegistryClient,
                 credential_seed: bytes | None = None):
        self.idp_id = idp_id
        self.issuer = issuer
        self.registry = registry
        self._lock = threading.RLock()
        self.program = registry.boilerplate()
        require_membership_schema(self.program)
        self.scheme = scheme_from_program(self.program)
        self.circuit = compile_cached(self.program)
        self.credential_key = generate_signing_keypair(
            credential_seed or secrets.token_bytes(32), self.scheme
        )
        self.token_signer = TokenSigner()
        self.users: dict[str, UserRecord] = {}
        self.clients: dict[str, ClientEntry] = {}
        self._client_id_hashes: set[bytes] = set()
        self._tokens_to_handles: dict[str, str] = {}
        self.sessions: dict[str, dict] = {}
        self._failures: dict[str, list] = {}
        self.artifacts: ZkArtifacts | None = None
        self.rotation_deferred = False
        self.metrics: list[dict] = []

    # -- user accounts -------------------------------------------------------

    def create_user(self, username: str, password: str, attributes: dict) -> UserRecord:
        with self._lock:
            if username in self.users:
                raise ValueError("user exists")
            salt = secrets.token_bytes(16)
            record = UserRecord(
                user_id=secrets.token_hex(16),
                password_salt=salt,
                password_verifier=_scrypt(password, salt),
                ppid_salt=secrets.token_bytes(16),
                attributes=dict(attributes),
            )
            self.users[username] = record
            return record

    def authenticate_user(self, username: str, password: str) -> str:
        """Password login; returns a session token.  Repeated failures for
        one account inside the window are throttled."""
        now = time.time()
        with self._lock:
            fails = [t for t in self._failures.get(username, []) if now - t < RATE_LIMIT_WINDOW]
            self._failures[username] = fails
            if len(fails) >= RATE_LIMIT_FAILURES:
                raise Throttled("too many failed attempts; retry later")
        record = self.users.get(username)
        ok = record is not None and secrets.compare_digest(
            _scrypt(password, record.password_salt), record.password_verifier
        )
        with self._lock:
            if not ok:
                self._failures.setdefault(username, []).append(now)
                raise BadCredentials("unknown user or wrong password")
            session = secrets.token_hex(16)
            self.sessions[session] = {
                "username": username,
                "granted": None,
                "expires": now + TOKEN_LIFETIME,
            }
            return session

    def record_consent(self, session: str, granted: list) -> list:
        with self._lock:
            sess = self._session(session)
            sess["granted"] = list(granted)
            return sess["granted"]

    def _session(self, token: str) -> dict:
        sess = self.sessions.get(token)
        if sess is None or sess["expires"] < time.time():
            raise BadCredentials("invalid or expired session")
        return sess

    # -- artifacts and registration -------------------------------------------

    def ensure_artifacts(self):
        with self._lock:
            if self.artifacts is None:
                self._fetch_artifacts()
            return self.artifacts

    def _fetch_artifacts(self):
        artifacts = self.registry.allocate(self.idp_id)
        if artifacts.program_digest != self.program.program_digest:
            raise RegistryUnavailable("pool artifact built for a different program")
        self.artifacts = artifacts
        self.rotation_deferred = False

    def register_client(self, client_name: str, redirect_uri: str):
        """Issue a fresh signed client identifier plus the current bundle.

        Returns (credential, artifacts, access_token).  Only a hash of the
        identifier is retained.
        """
        self.ensure_artifacts()
        with self._lock:
            while True:
                client_id = secrets.randbelow(R - 1) + 1
                id_hash = sha256(client_id.to_bytes(32, "little"))
                if id_hash not in self._client_id_hashes:
                    break
            signature = sign(self.credential_key.sk, client_id, self.scheme,
                             self.circuit.hash_params)
            credential = ClientCredential(client_id, signature, self.credential_key.pk)
            handle = secrets.token_hex(8)
            access_token = secrets.token_hex(16)
            entry = ClientEntry(handle, client_name, redirect_uri, id_hash, access_token)
            self.clients[handle] = entry
            self._client_id_hashes.add(id_hash)
            self._tokens_to_handles[access_token] = handle
            return credential, self.artifacts, access_token

    def client_for_token(self, access_token: str) -> ClientEntry:
        with self._lock:
            handle = self._tokens_to_handles.get(access_token)
            if handle is None or handle not in self.clients:
                raise UnknownClient("not a currently registered client")
            return self.clients[handle]

    def current_artifacts_for(self, access_token: str) -> ZkArtifacts:
        self.client_for_token(access_token)
        return self.ensure_artifacts()

    def rotate_artifacts(self, client_handle: str) -> int:
        """De-register a client and swap in a fresh artifact bundle.

        All proofs are verified only under the new key from here on.  If
        the trust anchor is unreachable the de-registration still happens
        but rotation is deferred (old key stays active; flagged).
        """
        with self._lock:
            entry = self.clients.pop(client_handle, None)
            if entry is None:
                raise UnknownClient(client_handle)
            self._tokens_to_handles.pop(entry.access_token, None)
            try:
                self._fetch_artifacts()
            except (RegistryUnavailable, PoolExhausted):
                self.rotation_deferred = True
                raise RegistryUnavailable(
                    "trust anchor unreachable; rotation deferred, previous "
                    "verification key remains active"
                )
            return self.artifacts.version

    # -- authorization ---------------------------------------------------------

    def authorize(self, membership: MembershipProof, session_token: str,
                  scope: list, state: str) -> str:
        """Verify the membership proof and issue a signed identity token.

        The statement must match this provider's own credential key, the
        proof must be under the current artifact version, and only claims
        the user consented to are released.
        """
        sess = self._session(session_token)
        user = self.users[sess["username"]]
        granted = sess["granted"]
        if granted is None:
            raise ConsentDenied("no consent recorded for this session")
        if not set(granted) <= set(scope):
            raise ConsentDenied("consented claims exceed the requested scope")

        artifacts = self.ensure_artifacts()
        if membership.artifact_version != artifacts.version:
            raise StaleArtifacts(
                "proof declares artifact version %d, current is %d"
                % (membership.artifact_version, artifacts.version)
            )
        expected = public_inputs_for(self.credential_key.pk)
        if list(membership.public_inputs) != expected:
            raise ProofInvalid("statement is not bound to this provider's key")

        t0 = time.perf_counter()
        ok, reason = verify_with_reason(
            artifacts.verification_key, list(membership.public_inputs),
            membership.proof,
        )
        verification_ms = (time.perf_counter() - t0) * 1000.0
        if not ok:
            raise ProofInvalid(reason)

        t1 = time.perf_counter()
        ppid = derive_ppid(user.user_id, membership.to_bytes(), user.ppid_salt)
        now = time.time()
        claims = {k: v for k, v in user.attributes.items() if k in granted}
        token = self.token_signer.issue({
            "iss": self.issuer,
            "sub": ppid,
            "iat": int(now),
            "exp": int(now + TOKEN_LIFETIME),
            "claims": claims,
            "sbh": sha256(state.encode()).hex(),
        })
        oidc_ops_ms = (time.perf_counter() - t1) * 1000.0
        self.metrics.append({
            "verification_ms": verification_ms,
            "oidc_ops_ms": oidc_ops_ms,
        })
        return token


# ---------------------------------------------------------------------------
# HTTP surface
# ---------------------------------------------------------------------------

def idp_service(idp: IdentityProvider) -> Service:
    svc = Service("idp")

    @svc.route("POST", "/register")
    def register(req: Request) -> Response:
        try:
            credential, artifacts, access_token = idp.register_client(
                req.body.get("client_name", "unnamed"),
                req.body.get("redirect_uri", ""),
            )
        except (RegistryUnavailable, PoolExhausted) as exc:
            raise ApiError(503, "registry_unavailable", str(exc))
        return Response(payload={
            "credential": {
                "client_id": str(credential.client_id),
                "R": [str(credential.signature.R[0]), str(credential.signature.R[1])],
                "S": str(credential.signature.S),
                "pk": [str(credential.idp_credential_pk[0]),
                       str(credential.idp_credential_pk[1])],
            },
            "artifacts": base64.b64encode(artifacts.to_bytes()).decode(),
            "artifact_version": artifacts.version,
            "access_token": access_token,
        })

    @svc.route("GET", "/artifacts/current")
    def artifacts_current(req: Request) -> Response:
        auth = req.headers.get("Authorization", "")
        if not auth.startswith("Bearer "):
            raise ApiError(401, "unauthorized", "registered clients only")
        try:
            artifacts = idp.current_artifacts_for(auth[len("Bearer "):])
        except UnknownClient as exc:
            raise ApiError(403, "access_denied", str(exc))
        except (RegistryUnavailable, PoolExhausted) as exc:
            raise ApiError(503, "registry_unavailable", str(exc))
        return Response(payload={
            "artifacts": base64.b64encode(artifacts.to_bytes()).decode(),
            "version": artifacts.version,
        })

    @svc.route("POST", "/deregister")
    def deregister(req: Request) -> Response:
        auth = req.headers.get("Authorization", "")
        if not auth.startswith("Bearer "):
            raise ApiError(401, "unauthorized", "registered clients only")
        try:
            entry = idp.client_for_token(auth[len("Bearer "):])
        except UnknownClient as exc:
            raise ApiError(403, "access_denied", str(exc))
        try:
            version = idp.rotate_artifacts(entry.handle)
        except RegistryUnavailable:
            # the departure stands; rotation happens when the trust anchor
            # is reachable again (documented risk window)
            return Response(payload={"deregistered": True,
                                     "rotation_deferred": True})
        return Response(payload={"deregistered": True, "new_version": version})

    @svc.route("POST", "/login")
    def login(req: Request) -> Response:
        try:
            session = idp.authenticate_user(
                req.body.get("username", ""), req.body.get("password", "")
            )
        except Throttled as exc:
            raise ApiError(429, "throttled", str(exc))
        except BadCredentials as exc:
            raise ApiError(401, "bad_credentials", str(exc))
        return Response(payload={"session": session})

    @svc.route("POST", "/consent")
    def consent(req: Request) -> Response:
        try:
            granted = idp.record_consent(
                req.body.get("session", ""), req.body.get("granted", [])
            )
        except BadCredentials as exc:
            raise ApiError(401, "bad_credentials", str(exc))
        return Response(payload={"granted": granted})

    @svc.route("GET", "/authorize")
    def authorize(req: Request) -> Response:
        try:
            membership = MembershipProof.from_b64(req.param("proof"))
        except Exception as exc:
            raise ApiError(400, "proof_invalid", "undecodable proof: %s" % exc)
        scope = req.param("scope").split()
        state = req.param("state")
        handle = req.param("redirect_handle")
        try:
            token = idp.authorize(membership, req.param("session"), scope, state)
        except StaleArtifacts as exc:
            raise ApiError(409, "stale_artifacts", str(exc))
        except ProofInvalid as exc:
            raise ApiError(403, "proof_invalid", str(exc))
        except ConsentDenied as exc:
            raise ApiError(403, "consent_denied", str(exc))
        except BadCredentials as exc:
            raise ApiError(401, "bad_credentials", str(exc))
        fragment = "id_token=%s&state=%s" % (token, state)
        return Response(
            status=303,
            payload={},
            headers={"Location": "%s#%s" % (handle, fragment)},
        )

    @svc.route("GET", "/token-signing-key")
    def token_key(req: Request) -> Response:
        return Response(payload={
            "key": base64.b64encode(idp.token_signer.public_bytes()).decode(),
            "issuer": idp.issuer,
        })

    @svc.route("GET", "/metrics")
    def metrics(req: Request) -> Response:
        # desk-scale introspection for the benchmark harness in
        # multi-process mode: per-authorize timing spans
        offset = int(req.query.get("offset", 0))
        return Response(payload={
            "count": len(idp.metrics),
            "spans": idp.metrics[offset:],
        })

    return svc
