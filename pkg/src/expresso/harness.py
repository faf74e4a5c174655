"""End-to-end orchestration: deployment stack, scenario scripts, benchmarks.

A ``Stack`` is one desk-scale deployment: trust-anchor registry, one
identity provider, any number of relying parties, and a user-agent
simulator, all talking over loopback HTTP.  Scenario scripts drive the
real endpoints step by step; the benchmark harness measures the login
path and renders a report with the published reference numbers alongside
(clearly labeled as reference values, not assertions).
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, field

from . import httpd, idp as idp_mod, registry as reg_mod, rp as rp_mod
from .program import BoilerplateProgram, membership_source
from .registry import RegistryClient, RegistryConfig, OidfRegistry
from .rp import IntegrityMismatch, RelyingParty
from .schnorr import CANONICAL_SCHEME, SchemeParams
from .useragent import LoginFailed, UserAgent


class ScenarioError(ValueError):
    """Script invalid (bad syntax or phase ordering); nothing was executed."""


class StepFailure(Exception):
    def __init__(self, index: int, step: str, cause: str):
        super().__init__("step %d (%s): %s" % (index, step, cause))
        self.index = index
        self.step = step
        self.cause = cause


# ---------------------------------------------------------------------------
# Deployment profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    name: str
    scheme: SchemeParams
    hash_partial_rounds: int
    phase1_degree: int

    def program(self) -> BoilerplateProgram:
        return BoilerplateProgram.from_source(
            membership_source(self.scheme, self.hash_partial_rounds)
        )


PROFILES = {
    # narrow scalar widths: same verification equation, much smaller circuit;
    # the default for protocol exercising
    "reduced": Profile("reduced", SchemeParams.narrow(16, 30, 16), 22, 2048),
    # the full-width committed standard
    "canonical": Profile("canonical", CANONICAL_SCHEME, 60, 8192),
}

DEFAULT_USERS = {
    "alice": ("alice-pass", {"name": "Alice Martin", "email": "alice@example.org"}),
    "bob": ("bob-pass", {"name": "Bob Ncube", "email": "bob@example.org"}),
    "carol": ("carol-pass", {"name": "Carol Wu", "email": "carol@example.org"}),
    "dave": ("dave-pass", {"name": "Dave Patel", "email": "dave@example.org"}),
    "erin": ("erin-pass", {"name": "Erin Kim", "email": "erin@example.org"}),
}


class Stack:
    """One running deployment; create with :func:`build_stack`."""

    def __init__(self, profile: Profile, registry: OidfRegistry,
                 reg_server, provider, idp_server):
        self.profile = profile
        self.registry = registry
        self.reg_server = reg_server
        self.provider = provider
        self.idp_server = idp_server
        self.user_agent = UserAgent("sim-browser")
        self.rps: dict[str, RelyingParty] = {}
        self.users: dict[str, str] = {}

    @property
    def registry_url(self) -> str:
        return self.reg_server.base_url

    @property
    def idp_url(self) -> str:
        return self.idp_server.base_url

    def add_user(self, username: str, password: str, attributes: dict):
        self.provider.create_user(username, password, attributes)
        self.users[username] = password

    def register_rp(self, name: str) -> RelyingParty:
        client = RegistryClient(self.registry_url, actor="rp:" + name)
        rp = RelyingParty(name, client, self.idp_url, self.provider.idp_id)
        rp.register()
        self.rps[name] = rp
        return rp

    def login(self, username: str, rp_name: str, scope, consent=None):
        rp = self.rps[rp_name]
        return self.user_agent.login(rp, self.idp_url, username,
                                     self.users[username], scope, consent)

    def deregister_rp(self, name: str) -> int:
        result = self.rps[name].deregister()
        return result.get("new_version", -1)

    def metrics_count(self) -> int:
        return len(self.provider.metrics)

    def metrics_slice(self, start: int) -> list:
        return self.provider.metrics[start:]

    def stop(self):
        self.reg_server.stop()
        self.idp_server.stop()


class AttachedStack:
    """Client-side view of an already-running deployment (multi-process
    mode).  Supports everything that has an HTTP surface; the in-process
    attack drivers are refused with a clear error."""

    profile = None
    provider = None

    def __init__(self, registry_url: str, idp_url: str, idp_id: str = "idp-main",
                 users: dict | None = None):
        self._registry_url = registry_url.rstrip("/")
        self._idp_url = idp_url.rstrip("/")
        self.idp_id = idp_id
        self.user_agent = UserAgent("sim-browser")
        self.rps: dict[str, RelyingParty] = {}
        self.users = dict(users or {})
        self._session = __import__("requests").Session()

    @property
    def registry_url(self) -> str:
        return self._registry_url

    @property
    def idp_url(self) -> str:
        return self._idp_url

    def register_rp(self, name: str) -> RelyingParty:
        client = RegistryClient(self.registry_url, actor="rp:" + name)
        rp = RelyingParty(name, client, self.idp_url, self.idp_id)
        rp.register()
        self.rps[name] = rp
        return rp

    def login(self, username: str, rp_name: str, scope, consent=None):
        rp = self.rps[rp_name]
        return self.user_agent.login(rp, self.idp_url, username,
                                     self.users[username], scope, consent)

    def deregister_rp(self, name: str) -> int:
        result = self.rps[name].deregister()
        return result.get("new_version", -1)

    def _metrics(self, offset: int = 0) -> dict:
        resp = self._session.get(self.idp_url + "/metrics",
                                 params={"offset": offset}, timeout=30)
        resp.raise_for_status()
        return resp.json()

    def metrics_count(self) -> int:
        return self._metrics()["count"]

    def metrics_slice(self, start: int) -> list:
        return self._metrics(start)["spans"]

    def stop(self):
        pass  # the services belong to another process


def build_stack(profile: Profile | str = "reduced", *, pool: int = 1,
                low_watermark: int = 1, fast_prep: bool = False,
                users: dict | None = None, data_dir: str | None = None,
                entropy_seed: bytes | None = None,
                prebuilt: tuple | None = None) -> Stack:
    if isinstance(profile, str):
        profile = PROFILES[profile]
    program = profile.program()
    config = RegistryConfig(
        program=program,
        idp_ids=("idp-main",),
        phase1_degree=profile.phase1_degree,
        low_watermark=low_watermark,
        fast_prep=fast_prep,
        data_dir=data_dir,
        entropy_seed=entropy_seed,
        prebuilt=prebuilt,
    )
    registry = OidfRegistry(config)
    registry.replenish(pool)
    reg_server = httpd.serve(reg_mod.registry_service(registry))
    idp_client = RegistryClient(reg_server.base_url, actor="idp:main")
    provider = idp_mod.IdentityProvider("idp-main", "https://idp.example",
                                        idp_client)
    idp_server = httpd.serve(idp_mod.idp_service(provider))
    stack = Stack(profile, registry, reg_server, provider, idp_server)
    for username, (password, attrs) in (users or DEFAULT_USERS).items():
        stack.add_user(username, password, attrs)
    return stack


# ---------------------------------------------------------------------------
# Scenario scripts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Step:
    op: str
    args: tuple


@dataclass
class ScenarioScript:
    steps: list

    @classmethod
    def parse(cls, text: str) -> "ScenarioScript":
        steps = []
        registered: set[str] = set()
        deregistered: set[str] = set()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].strip()
            if not body:
                continue
            words = body.split()
            op, args = words[0], tuple(words[1:])

            def need(n, usage):
                if len(args) < n:
                    raise ScenarioError("line %d: usage: %s" % (lineno, usage))

            if op == "register":
                need(1, "register <rp>")
                registered.add(args[0])
            elif op == "login":
                need(3, "login <user> <rp> <scope...>")
                if args[1] not in registered or args[1] in deregistered:
                    raise ScenarioError(
                        "line %d: login against %r before it is registered"
                        % (lineno, args[1])
                    )
            elif op == "deregister":
                need(1, "deregister <rp>")
                if args[0] not in registered or args[0] in deregistered:
                    raise ScenarioError(
                        "line %d: deregister of %r before it is registered"
                        % (lineno, args[0])
                    )
                deregistered.add(args[0])
            elif op == "rotate-check":
                if not deregistered:
                    raise ScenarioError(
                        "line %d: rotate-check before any deregistration" % lineno
                    )
            elif op == "collusion-check":
                need(2, "collusion-check <rp-a> <rp-b>")
                for name in args[:2]:
                    if name not in registered or name in deregistered:
                        raise ScenarioError(
                            "line %d: collusion-check needs registered %r"
                            % (lineno, name)
                        )
            elif op == "integrity-attack":
                pass
            else:
                raise ScenarioError("line %d: unknown step %r" % (lineno, op))
            steps.append(Step(op, args))
        if not steps:
            raise ScenarioError("empty scenario")
        return cls(steps)


@dataclass
class StepOutcome:
    index: int
    step: str
    ok: bool
    detail: str
    elapsed_ms: float


def run_scenario(stack: Stack, script: ScenarioScript) -> list:
    """Execute the validated steps against the live HTTP endpoints."""
    outcomes = []
    default_user = next(iter(stack.users)) if stack.users else None
    for i, step in enumerate(script.steps):
        label = " ".join((step.op,) + step.args)
        t0 = time.perf_counter()
        try:
            detail = _run_step(stack, step, default_user)
        except (LoginFailed, IntegrityMismatch, rp_mod.IdpError, rp_mod.AccessDenied,
                KeyError, ScenarioError) as exc:
            raise StepFailure(i, label, "%s: %s" % (type(exc).__name__, exc))
        outcomes.append(StepOutcome(i, label, True, detail,
                                    (time.perf_counter() - t0) * 1000.0))
    return outcomes


def _run_step(stack: Stack, step: Step, default_user: str | None) -> str:
    if step.op == "register":
        stack.register_rp(step.args[0])
        return "registered"
    if step.op == "login":
        user, rp_name = step.args[0], step.args[1]
        subject, claims = stack.login(user, rp_name, list(step.args[2:]))
        return "subject %s..., %d claims" % (subject[:12], len(claims))
    if step.op == "deregister":
        version = stack.deregister_rp(step.args[0])
        return "rotated to artifact version %d" % version
    if step.op == "rotate-check":
        return rotate_check(stack, default_user)
    if step.op == "collusion-check":
        ok, detail = collusion_check(stack, step.args[0], step.args[1], default_user)
        if not ok:
            raise ScenarioError(detail)
        return detail
    if step.op == "integrity-attack":
        ok, detail = integrity_attack(stack)
        if not ok:
            raise ScenarioError(detail)
        return detail
    raise ScenarioError("unhandled step %r" % step.op)


def rotate_check(stack: Stack, default_user: str | None) -> str:
    """After a rotation: every deregistered party must be rejected (cached
    proof and fresh proof from stale artifacts alike); every remaining
    party succeeds after refreshing."""
    rejected = 0
    for name, rp in stack.rps.items():
        if getattr(rp, "deregistered", False):
            try:
                stack.login(default_user, name, ["name"])
            except LoginFailed as exc:
                if exc.code not in ("stale_artifacts", "proof_invalid"):
                    raise ScenarioError(
                        "revoked %s failed with unexpected %s" % (name, exc.code)
                    )
                rejected += 1
            else:
                raise ScenarioError("revoked %s still logged in" % name)
        else:
            rp.refresh_artifacts()
            stack.login(default_user, name, ["name"])
    return "revoked rejected (%d), survivors fine" % rejected


def collusion_check(stack: Stack, rp_a: str, rp_b: str,
                    default_user: str | None) -> tuple[bool, str]:
    sub_a, _ = stack.login(default_user, rp_a, ["name"])
    sub_b, _ = stack.login(default_user, rp_b, ["name"])
    if sub_a == sub_b:
        return False, "pseudonyms collide across %s and %s" % (rp_a, rp_b)
    return True, "pseudonyms differ across relying parties"


def integrity_attack(stack: Stack) -> tuple[bool, str]:
    """A curious identity provider serves a bundle other than the one whose
    digest the trust anchor published last.  The victim's registration must
    abort on the integrity check."""
    provider = stack.provider
    current = provider.ensure_artifacts()
    # the provider acquires a fresh bundle (now the published latest) but
    # keeps serving the old one to the victim
    provider._fetch_artifacts()
    stale = current
    original = provider.artifacts
    provider.artifacts = stale
    try:
        client = RegistryClient(stack.registry_url, actor="rp:victim")
        victim = RelyingParty("victim", client, stack.idp_url, provider.idp_id)
        try:
            victim.register()
        except IntegrityMismatch:
            return True, "substituted artifacts detected; registration aborted"
        return False, "victim accepted substituted artifacts"
    finally:
        provider.artifacts = original


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------

PAPER_REFERENCE = {
    "note": "published reference values, laptop-class hardware; shown for "
            "comparison only",
    "proving_ms": 4338.0,
    "proving_note": "only executed once",
    "verification_ms": 237.30,
    "oidc_ops_ms": 1.8,
    "user_auth_ms": 239.2,
    "user_auth_note": "includes verification and OIDC ops",
    "proof_bytes": 4096,
    "constraints": 94180,
}


@dataclass
class BenchReport:
    profile: str
    repetitions: int
    proving_ms: float
    verification_ms: float
    oidc_ops_ms: float
    user_auth_ms: float
    proof_bytes: int
    proving_key_bytes: int
    verification_key_bytes: int
    constraints: int

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("report requires at least one measured run")
        if self.user_auth_ms < self.verification_ms + self.oidc_ops_ms:
            raise ValueError(
                "cached-proof user auth time cannot undercut its own parts "
                "(%.1f < %.1f + %.1f)"
                % (self.user_auth_ms, self.verification_ms, self.oidc_ops_ms)
            )

    def to_json(self) -> str:
        obj = {k: getattr(self, k) for k in (
            "profile", "repetitions", "proving_ms", "verification_ms",
            "oidc_ops_ms", "user_auth_ms", "proof_bytes",
            "proving_key_bytes", "verification_key_bytes", "constraints")}
        obj["paper_reference"] = PAPER_REFERENCE
        return json.dumps(obj, indent=2, sort_keys=True)

    def to_text(self) -> str:
        ref = PAPER_REFERENCE
        lines = [
            "benchmark report  (profile %s, %d repetitions)" % (
                self.profile, self.repetitions),
            "  proving_ms            %10.1f   one-time; proof cached thereafter" % self.proving_ms,
            "  verification_ms       %10.2f   mean" % self.verification_ms,
            "  oidc_ops_ms           %10.2f   mean (token build + sign + pseudonym)" % self.oidc_ops_ms,
            "  user_auth_ms          %10.2f   mean, end-to-end loopback, cached proof" % self.user_auth_ms,
            "  proof_bytes           %10d" % self.proof_bytes,
            "  proving_key_bytes     %10d" % self.proving_key_bytes,
            "  verification_key_bytes%10d" % self.verification_key_bytes,
            "  constraints           %10d" % self.constraints,
            "reference (published, for comparison only):",
            "  proving %s ms (%s), verification %s ms, OIDC ops %s ms, "
            "user auth %s ms (%s), proof <= %s bytes, %s constraints" % (
                ref["proving_ms"], ref["proving_note"], ref["verification_ms"],
                ref["oidc_ops_ms"], ref["user_auth_ms"], ref["user_auth_note"],
                ref["proof_bytes"], ref["constraints"]),
        ]
        return "\n".join(lines)


def emit_report(report: BenchReport, fmt: str = "text") -> str:
    if fmt == "json":
        return report.to_json()
    if fmt == "text":
        return report.to_text()
    raise ValueError("unknown report format %r" % fmt)


def run_bench(stack: Stack, reps: int = 50, rp_name: str = "bench-rp",
              username: str | None = None) -> BenchReport:
    """Measure the login path: one-time proving, then cached-proof logins."""
    if reps < 1:
        raise ValueError("need at least one repetition")
    username = username or next(iter(stack.users))
    rp = stack.rps.get(rp_name) or stack.register_rp(rp_name)

    t0 = time.perf_counter()
    proof = rp.generate_proof()
    proving_ms = (time.perf_counter() - t0) * 1000.0

    base = stack.metrics_count()
    e2e = []
    for _ in range(reps):
        t0 = time.perf_counter()
        stack.login(username, rp_name, ["name"])
        e2e.append((time.perf_counter() - t0) * 1000.0)
    spans = stack.metrics_slice(base)[:reps]
    artifacts = rp.artifacts
    return BenchReport(
        profile=stack.profile.name if stack.profile else "attached",
        repetitions=reps,
        proving_ms=proving_ms,
        verification_ms=statistics.fmean(s["verification_ms"] for s in spans),
        oidc_ops_ms=statistics.fmean(s["oidc_ops_ms"] for s in spans),
        user_auth_ms=statistics.fmean(e2e),
        proof_bytes=len(proof.to_bytes()),
        proving_key_bytes=len(artifacts.proving_key.to_bytes()),
        verification_key_bytes=len(artifacts.verification_key.to_bytes()),
        constraints=artifacts.proving_key.cs.num_constraints,
    )


# ---------------------------------------------------------------------------
# Attack drivers (CLI `attack` subcommand and acceptance reuse)
# ---------------------------------------------------------------------------

def attack_collusion(stack: Stack) -> tuple[bool, str]:
    stack.register_rp("collude-a")
    stack.register_rp("collude-b")
    return collusion_check(stack, "collude-a", "collude-b",
                           next(iter(stack.users)))


def attack_revocation(stack: Stack) -> tuple[bool, str]:
    user = next(iter(stack.users))
    stack.register_rp("rev-victim")
    stack.register_rp("rev-survivor")
    stack.login(user, "rev-victim", ["name"])
    stack.login(user, "rev-survivor", ["name"])
    stack.deregister_rp("rev-victim")
    try:
        detail = rotate_check(stack, user)
    except ScenarioError as exc:
        return False, str(exc)
    return True, detail


def attack_integrity(stack: Stack) -> tuple[bool, str]:
    return integrity_attack(stack)
