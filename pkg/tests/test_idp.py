import base64
import random

import pytest

from expresso.idp import (
    BadCredentials,
    ConsentDenied,
    ProofInvalid,
    StaleArtifacts,
    Throttled,
    UnknownClient,
    derive_ppid,
)
from expresso.rp import MembershipProof
from expresso.schnorr import verify_native
from expresso.program import scheme_from_program


@pytest.fixture(scope="module")
def logged_in(stack):
    """One registered relying party with a generated proof, plus a live
    user session with recorded consent."""
    rp = stack.register_rp("fixture-rp")
    proof = rp.generate_proof()
    provider = stack.provider
    session = provider.authenticate_user("alice", "alice-pass")
    provider.record_consent(session, ["name", "email"])
    return rp, proof, session


def test_registration_issues_valid_credentials(stack):
    provider = stack.provider
    cred1, arts1, tok1 = provider.register_client("one", "proxy:1")
    cred2, arts2, tok2 = provider.register_client("two", "proxy:2")
    assert cred1.client_id != cred2.client_id
    scheme = scheme_from_program(provider.program)
    for cred in (cred1, cred2):
        assert verify_native(cred.idp_credential_pk, cred.client_id,
                             cred.signature, scheme, provider.circuit.hash_params)
    # both clients hold the same bundle version and digest
    assert arts1.version == arts2.version
    assert arts1.artifact_digest == arts2.artifact_digest
    # and it is exactly what the trust anchor published last
    latest = provider.registry.latest_digest(provider.idp_id)
    assert latest["artifact_digest"] == arts1.artifact_digest.hex()


def test_client_ids_stored_hashed_only(stack):
    provider = stack.provider
    cred, _, _ = provider.register_client("hashed", "proxy:3")
    raw = cred.client_id.to_bytes(32, "little")
    for entry in provider.clients.values():
        assert entry.client_id_hash != raw
    import json
    state_blob = json.dumps(
        [e.client_id_hash.hex() for e in provider.clients.values()]
    ).encode()
    assert raw.hex().encode() not in state_blob


def test_password_authentication(stack):
    provider = stack.provider
    session = provider.authenticate_user("bob", "bob-pass")
    assert session in provider.sessions
    with pytest.raises(BadCredentials):
        provider.authenticate_user("bob", "wrong")
    with pytest.raises(BadCredentials):
        provider.authenticate_user("nobody", "x")


def test_rate_limiting(stack):
    provider = stack.provider
    provider.create_user("ratey", "right", {})
    for _ in range(5):
        with pytest.raises(BadCredentials):
            provider.authenticate_user("ratey", "wrong")
    with pytest.raises(Throttled):
        provider.authenticate_user("ratey", "wrong")
    # even the correct password is throttled inside the window
    with pytest.raises(Throttled):
        provider.authenticate_user("ratey", "right")


def test_authorize_happy_path(logged_in, stack):
    rp, proof, session = logged_in
    token = stack.provider.authorize(proof, session, ["name", "email"], "st-1")
    from expresso.tokens import verify_token
    payload = verify_token(token, stack.provider.token_signer.public_bytes())
    assert payload["claims"] == {"name": "Alice Martin", "email": "alice@example.org"}
    assert payload["iss"] == stack.provider.issuer
    assert len(payload["sub"]) == 64


def test_consent_subset_only(logged_in, stack):
    rp, proof, _ = logged_in
    provider = stack.provider
    session = provider.authenticate_user("alice", "alice-pass")
    provider.record_consent(session, ["name"])
    token = provider.authorize(proof, session, ["name", "email"], "st-2")
    from expresso.tokens import verify_token
    payload = verify_token(token, provider.token_signer.public_bytes())
    assert payload["claims"] == {"name": "Alice Martin"}


def test_consent_exceeding_scope_denied(logged_in, stack):
    rp, proof, _ = logged_in
    provider = stack.provider
    session = provider.authenticate_user("alice", "alice-pass")
    provider.record_consent(session, ["name", "email"])
    with pytest.raises(ConsentDenied):
        provider.authorize(proof, session, ["name"], "st-3")
    fresh = provider.authenticate_user("alice", "alice-pass")
    with pytest.raises(ConsentDenied):  # no consent recorded at all
        provider.authorize(proof, fresh, ["name"], "st-4")


def test_stale_version_rejected(logged_in, stack):
    rp, proof, session = logged_in
    stale = MembershipProof(proof.proof, proof.public_inputs,
                            proof.artifact_version + 7)
    with pytest.raises(StaleArtifacts):
        stack.provider.authorize(stale, session, ["name", "email"], "st")


def test_foreign_key_statement_rejected(logged_in, stack):
    rp, proof, session = logged_in
    from expresso import babyjubjub as ec
    other_pk = ec.mul(ec.BASE, 424242)
    forged = MembershipProof(proof.proof, (other_pk[0], other_pk[1]),
                             proof.artifact_version)
    with pytest.raises(ProofInvalid):
        stack.provider.authorize(forged, session, ["name", "email"], "st")


def test_corrupted_proofs_never_issue_tokens(logged_in, stack):
    rp, proof, session = logged_in
    rng = random.Random(80)
    raw = bytearray(proof.to_bytes())
    rejected = 0
    trials = 25
    for _ in range(trials):
        mutated = bytearray(raw)
        mutated[rng.randrange(len(raw))] ^= 1 << rng.randrange(8)
        try:
            candidate = MembershipProof.from_bytes(bytes(mutated))
        except Exception:
            rejected += 1
            continue
        try:
            stack.provider.authorize(candidate, session, ["name", "email"], "st")
        except (ProofInvalid, StaleArtifacts):
            rejected += 1
    assert rejected == trials


def test_ppid_determinism_and_separation(logged_in, stack):
    rp, proof, _ = logged_in
    user = stack.provider.users["alice"]
    p1 = derive_ppid(user.user_id, proof.to_bytes(), user.ppid_salt)
    p2 = derive_ppid(user.user_id, proof.to_bytes(), user.ppid_salt)
    assert p1 == p2
    other_proof = proof.to_bytes()[:-1] + b"\x01"
    assert derive_ppid(user.user_id, other_proof, user.ppid_salt) != p1
    other_user = stack.provider.users["bob"]
    assert derive_ppid(other_user.user_id, proof.to_bytes(),
                       other_user.ppid_salt) != p1


def test_ppid_birthday_sweep():
    rng = random.Random(81)
    seen = set()
    for i in range(10000):
        user_id = "%032x" % rng.getrandbits(128)
        proof_bytes = rng.getrandbits(256).to_bytes(32, "little")
        salt = rng.getrandbits(128).to_bytes(16, "little")
        seen.add(derive_ppid(user_id, proof_bytes, salt))
    assert len(seen) == 10000


def test_token_contains_no_client_id(logged_in, stack):
    rp, proof, session = logged_in
    token = stack.provider.authorize(proof, session, ["name", "email"], "st-5")
    cid = rp.credential.client_id
    blob = token.encode()
    for encoding in (cid.to_bytes(32, "little"), cid.to_bytes(32, "big"),
                     str(cid).encode(), hex(cid).encode(),
                     base64.urlsafe_b64encode(cid.to_bytes(32, "little"))):
        assert encoding not in blob
    # decoded payload fields carry no relying-party identifier at all
    from expresso.tokens import verify_token
    payload = verify_token(token, stack.provider.token_signer.public_bytes())
    assert set(payload) == {"iss", "sub", "iat", "exp", "claims", "sbh"}


def test_user_ids_have_entropy(stack):
    ids = {u.user_id for u in stack.provider.users.values()}
    assert all(len(i) == 32 for i in ids)  # 128-bit hex
    assert len(ids) == len(stack.provider.users)


def test_rotation_requires_known_client(stack):
    with pytest.raises(UnknownClient):
        stack.provider.rotate_artifacts("no-such-handle")


def test_rotation_deferred_when_registry_down(stack):
    """Trust anchor unreachable at deregistration: the client is still
    removed, the previous verification key stays active, and the deferral
    is flagged until the next successful fetch."""
    from expresso.registry import RegistryUnavailable

    provider = stack.provider
    rp = stack.register_rp("deferred-rp")
    survivor = stack.register_rp("deferred-survivor")
    survivor_proof = survivor.generate_proof()
    old_version = provider.artifacts.version
    handle = [h for h, e in provider.clients.items() if e.name == "deferred-rp"][0]

    real_allocate = provider.registry.allocate
    provider.registry.allocate = lambda idp_id: (_ for _ in ()).throw(
        RegistryUnavailable("simulated outage"))
    try:
        with pytest.raises(RegistryUnavailable):
            provider.rotate_artifacts(handle)
    finally:
        provider.registry.allocate = real_allocate

    assert provider.rotation_deferred
    assert provider.artifacts.version == old_version
    assert handle not in provider.clients  # the departure stands
    # old key remains active during the window: the survivor still verifies
    session = provider.authenticate_user("alice", "alice-pass")
    provider.record_consent(session, ["name"])
    provider.authorize(survivor_proof, session, ["name"], "defer")
    # next successful fetch clears the deferral
    provider._fetch_artifacts()
    assert not provider.rotation_deferred
    assert provider.artifacts.version == old_version + 1


def test_single_active_verification_key(stack):
    # the provider keeps exactly one bundle; there is no per-client mapping
    provider = stack.provider
    assert provider.artifacts is not None
    assert not hasattr(provider, "artifacts_by_client")
    entries = list(provider.clients.values())
    for entry in entries:
        assert not hasattr(entry, "artifacts"), "no per-client artifact state"
