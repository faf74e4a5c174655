"""The trust-anchor service.

Maintains a pool of pre-generated artifact bundles (each from its own
setup ceremony over the one standardized program), allocates them to
enrolled identity providers, and publishes an append-only digest log that
relying parties check artifact integrity against.  Serves the canonical
program text itself so nobody has to trust an identity provider's copy.

Persistence is an append-only JSONL event log plus a blob directory keyed
by artifact digest; recovery replays the log.  Allocation (pop, version
assignment, digest publication) happens under one lock and is journaled
as a single event.
"""

from __future__ import annotations

import base64
import json
import os
import threading
import time
from dataclasses import dataclass

import requests

from .ceremony import (
    CircuitPrep,
    Phase1Parameters,
    ZkArtifacts,
    phase1_generate,
    prepare_circuit,
    prepare_circuit_from_secrets,
    run_ceremony,
)
from .fields import HashDRBG
from .httpd import ApiError, Request, Response, Service, SOURCE_HEADER
from .program import BoilerplateProgram, compile_cached
from .encoding import sha256

DEFAULT_CONTRIBUTORS = ("oidf-partner-1", "oidf-partner-2", "oidf-partner-3")


class PoolExhausted(Exception):
    """No pending artifacts; retry after replenishment."""


class UnknownIdP(Exception):
    pass


class NoAllocation(Exception):
    pass


@dataclass(frozen=True)
class DigestRecord:
    idp_id: str
    version: int
    artifact_digest: bytes
    published_at: float

    def to_json(self) -> dict:
        return {
            "idp_id": self.idp_id,
            "version": self.version,
            "artifact_digest": self.artifact_digest.hex(),
            "published_at": self.published_at,
        }


@dataclass
class RegistryConfig:
    program: BoilerplateProgram
    idp_ids: tuple
    phase1_degree: int
    phase1_seed: bytes = b"expresso-phase1"
    contributors: tuple = DEFAULT_CONTRIBUTORS
    low_watermark: int = 1
    replenish_batch: int = 1
    beacon_text: str = "desk-scale beacon: closing index quote of the day"
    data_dir: str | None = None
    # test-mode switch: keep phase-1 trapdoors and use the fast preparation
    # path (bit-identical output; equivalence is pinned by tests)
    fast_prep: bool = False
    entropy_seed: bytes | None = None  # deterministic contributor entropy
    # reuse an already-built (phase1, prep) pair instead of generating one
    prebuilt: tuple | None = None


class OidfRegistry:
    def __init__(self, config: RegistryConfig):
        self.config = config
        self.program = config.program
        self.circuit = compile_cached(config.program)
        if config.prebuilt is not None:
            self.phase1, self.prep = config.prebuilt
            if self.prep.circuit_digest != self.circuit.cs.digest():
                raise ValueError("prebuilt preparation is for a different circuit")
        else:
            self.phase1 = phase1_generate(
                config.phase1_degree, config.phase1_seed,
                retain_secrets=config.fast_prep,
            )
            if config.fast_prep:
                self.prep: CircuitPrep = prepare_circuit_from_secrets(
                    self.phase1, self.circuit.cs)
            else:
                self.prep = prepare_circuit(self.phase1, self.circuit.cs)
        self._lock = threading.RLock()
        self._pending: list[ZkArtifacts] = []
        self._allocated: dict[str, list[DigestRecord]] = {i: [] for i in config.idp_ids}
        self._delivered: dict[bytes, bytes] = {}  # digest -> serialized bundle
        self._cycle = 0
        self._entropy = HashDRBG(config.entropy_seed or os.urandom(32),
                                 domain=b"registry-entropy")
        self._transcripts: dict[bytes, bytes] = {}
        if config.data_dir:
            os.makedirs(config.data_dir, exist_ok=True)
            os.makedirs(os.path.join(config.data_dir, "blobs"), exist_ok=True)
            self._replay_log()

    # -- pool management ---------------------------------------------------

    def replenish(self, count: int):
        """Run ``count`` independent ceremony cycles and enqueue the results."""
        if count < 1:
            raise ValueError("count must be >= 1")
        for _ in range(count):
            with self._lock:
                self._cycle += 1
                cycle = self._cycle
            contributors = [
                (cid, self._entropy.read(32)) for cid in self.config.contributors
            ]
            beacon = ("%s #%d" % (self.config.beacon_text, cycle)).encode()
            artifacts, transcript = run_ceremony(
                self.prep, self.program, contributors, beacon,
                beacon_source="configured public string", version=0,
            )
            with self._lock:
                self._pending.append(artifacts)
                self._transcripts[artifacts.artifact_digest] = transcript.to_bytes()
                self._journal({"op": "replenish", "cycle": cycle,
                               "digest": artifacts.artifact_digest.hex()})
                self._write_blob(artifacts)

    def pending_count(self) -> int:
        with self._lock:
            return len(self._pending)

    def request_artifacts(self, idp_id: str) -> ZkArtifacts:
        """Atomically pop one artifact, assign the next version for the
        identity provider, and publish the digest record."""
        with self._lock:
            if idp_id not in self._allocated:
                raise UnknownIdP(idp_id)
            if not self._pending:
                raise PoolExhausted(
                    "pool empty; %d enrolled providers outpaced replenishment"
                    % len(self._allocated)
                )
            pooled = self._pending.pop(0)
            version = len(self._allocated[idp_id]) + 1
            artifacts = ZkArtifacts(
                version=version,
                program_digest=pooled.program_digest,
                proving_key=pooled.proving_key,
                verification_key=pooled.verification_key,
                transcript_digest=pooled.transcript_digest,
            )
            transcript = self._transcripts.pop(pooled.artifact_digest, None)
            if transcript is not None:
                self._transcripts[artifacts.artifact_digest] = transcript
            record = DigestRecord(idp_id, version, artifacts.artifact_digest, time.time())
            self._allocated[idp_id].append(record)
            # retain the delivered bundle for blob fetches of the current
            # version; drop the superseded one so storage stays bounded
            history = self._allocated[idp_id]
            if len(history) > 1:
                self._delivered.pop(history[-2].artifact_digest, None)
            self._delivered[artifacts.artifact_digest] = artifacts.to_bytes()
            self._journal({"op": "allocate", "idp": idp_id, "version": version,
                           "digest": artifacts.artifact_digest.hex(),
                           "pool_digest": pooled.artifact_digest.hex(),
                           "at": record.published_at})
            self._write_blob(artifacts)
            low = len(self._pending) < self.config.low_watermark
        if low:
            self.replenish(self.config.replenish_batch)
        return artifacts

    def get_latest_digest(self, idp_id: str) -> DigestRecord:
        with self._lock:
            if idp_id not in self._allocated:
                raise UnknownIdP(idp_id)
            history = self._allocated[idp_id]
            if not history:
                raise NoAllocation(idp_id)
            return history[-1]

    def get_digest_history(self, idp_id: str) -> list:
        with self._lock:
            if idp_id not in self._allocated:
                raise UnknownIdP(idp_id)
            return list(self._allocated[idp_id])

    def get_boilerplate(self) -> BoilerplateProgram:
        return self.program

    def get_blob(self, digest: bytes) -> bytes:
        with self._lock:
            blob = self._delivered.get(digest)
        if blob is None:
            blob = self._read_blob(digest)
        if blob is None:
            raise KeyError(digest.hex())
        return blob

    def get_transcript(self, digest: bytes) -> bytes | None:
        with self._lock:
            return self._transcripts.get(digest)

    # -- persistence --------------------------------------------------------

    def _journal(self, event: dict):
        if not self.config.data_dir:
            return
        path = os.path.join(self.config.data_dir, "registry.log")
        with open(path, "a") as fh:
            fh.write(json.dumps(event) + "\n")

    def _write_blob(self, artifacts: ZkArtifacts):
        if not self.config.data_dir:
            return
        stem = os.path.join(self.config.data_dir, "blobs",
                            artifacts.artifact_digest.hex())
        if not os.path.exists(stem + ".bin"):
            with open(stem + ".bin", "wb") as fh:
                fh.write(artifacts.to_bytes())
            with open(stem + ".digest", "w") as fh:
                fh.write(artifacts.artifact_digest.hex() + "\n")

    def _read_blob(self, digest: bytes) -> bytes | None:
        if not self.config.data_dir:
            return None
        path = os.path.join(self.config.data_dir, "blobs", digest.hex() + ".bin")
        if os.path.exists(path):
            with open(path, "rb") as fh:
                return fh.read()
        return None

    def _replay_log(self):
        path = os.path.join(self.config.data_dir, "registry.log")
        if not os.path.exists(path):
            return
        with open(path) as fh:
            for line in fh:
                event = json.loads(line)
                digest = bytes.fromhex(event["digest"])
                if event["op"] == "replenish":
                    self._cycle = max(self._cycle, event["cycle"])
                    blob = self._read_blob(digest)
                    if blob is not None:
                        self._pending.append(ZkArtifacts.from_bytes(blob))
                elif event["op"] == "allocate":
                    idp = event["idp"]
                    self._allocated.setdefault(idp, [])
                    self._allocated[idp].append(DigestRecord(
                        idp, event["version"], digest, event["at"]))
                    pool_digest = bytes.fromhex(event["pool_digest"])
                    self._pending = [a for a in self._pending
                                     if a.artifact_digest != pool_digest]
                    blob = self._read_blob(digest)
                    if blob is not None:
                        self._delivered[digest] = blob


# ---------------------------------------------------------------------------
# HTTP surface
# ---------------------------------------------------------------------------

def registry_service(registry: OidfRegistry) -> Service:
    svc = Service("oidf-registry")

    @svc.route("GET", "/boilerplate")
    def boilerplate(req: Request) -> Response:
        program = registry.get_boilerplate()
        return Response(payload={
            "name": program.name,
            "version": program.version,
            "source": program.source_text,
            "digest": program.program_digest.hex(),
        })

    @svc.route("GET", "/idp/(?P<idp>[^/]+)/digest/latest")
    def latest(req: Request) -> Response:
        try:
            record = registry.get_latest_digest(req.match.group("idp"))
        except UnknownIdP as exc:
            raise ApiError(404, "unknown_idp", str(exc))
        except NoAllocation as exc:
            raise ApiError(404, "no_allocation", str(exc))
        return Response(payload=record.to_json())

    @svc.route("GET", "/idp/(?P<idp>[^/]+)/digest/history")
    def history(req: Request) -> Response:
        try:
            records = registry.get_digest_history(req.match.group("idp"))
        except UnknownIdP as exc:
            raise ApiError(404, "unknown_idp", str(exc))
        return Response(payload={"records": [r.to_json() for r in records]})

    @svc.route("POST", "/idp/(?P<idp>[^/]+)/artifacts")
    def allocate(req: Request) -> Response:
        try:
            artifacts = registry.request_artifacts(req.match.group("idp"))
        except UnknownIdP as exc:
            raise ApiError(404, "unknown_idp", str(exc))
        except PoolExhausted as exc:
            raise ApiError(503, "pool_exhausted", str(exc))
        return Response(payload={
            "version": artifacts.version,
            "digest": artifacts.artifact_digest.hex(),
        })

    @svc.route("GET", "/blob/(?P<digest>[0-9a-f]+)")
    def blob(req: Request) -> Response:
        try:
            data = registry.get_blob(bytes.fromhex(req.match.group("digest")))
        except KeyError:
            raise ApiError(404, "unknown_blob", "no blob with that digest")
        return Response(raw=data, content_type="application/octet-stream")

    return svc


class RegistryClient:
    """HTTP client used by identity providers and relying parties."""

    def __init__(self, base_url: str, actor: str):
        self.base_url = base_url.rstrip("/")
        self.actor = actor
        self._session = requests.Session()

    def _headers(self):
        return {SOURCE_HEADER: self.actor}

    def _get(self, path: str):
        try:
            resp = self._session.get(self.base_url + path, headers=self._headers(),
                                     timeout=10)
        except requests.RequestException as exc:
            raise RegistryUnavailable(str(exc)) from None
        return resp

    def boilerplate(self) -> BoilerplateProgram:
        resp = self._get("/boilerplate")
        _check(resp)
        obj = resp.json()
        program = BoilerplateProgram.from_source(obj["source"])
        if program.program_digest.hex() != obj["digest"]:
            raise RegistryUnavailable("served program digest is inconsistent")
        return program

    def latest_digest(self, idp_id: str) -> dict:
        resp = self._get("/idp/%s/digest/latest" % idp_id)
        _check(resp)
        return resp.json()

    def digest_history(self, idp_id: str) -> list:
        resp = self._get("/idp/%s/digest/history" % idp_id)
        _check(resp)
        return resp.json()["records"]

    def allocate(self, idp_id: str) -> ZkArtifacts:
        try:
            resp = self._session.post(self.base_url + "/idp/%s/artifacts" % idp_id,
                                      headers=self._headers(), timeout=600)
        except requests.RequestException as exc:
            raise RegistryUnavailable(str(exc)) from None
        if resp.status_code == 503:
            raise PoolExhausted(resp.json().get("detail", ""))
        _check(resp)
        digest = resp.json()["digest"]
        blob = self._get("/blob/" + digest)
        _check(blob)
        artifacts = ZkArtifacts.from_bytes(blob.content)
        if artifacts.artifact_digest.hex() != digest:
            raise RegistryUnavailable("delivered artifact digest mismatch")
        return artifacts


class RegistryUnavailable(Exception):
    pass


def _check(resp):
    if resp.status_code != 200:
        try:
            detail = resp.json()
        except ValueError:
            detail = resp.text
        raise RegistryUnavailable("registry returned %s: %s" % (resp.status_code, detail))
