"""Two-phase trusted setup with a verifiable transcript.

Phase 1 produces circuit-independent monomial encodings ([tau^i]G1,
[tau^i]G2, plus alpha- and beta-scaled rows).  At desk scale it is
generated locally from a seed and the raw trapdoors are dropped unless the
caller explicitly retains them for oracle tests; production deployments
would import an externally run transcript through ``Phase1Parameters
.from_bytes`` instead.

Phase 2 is the circuit-bound multi-party part.  Starting from a
preparation step that converts phase-1 powers into per-wire Lagrange
encodings (a group iNTT -- no trapdoor knowledge involved), contributors
multiply fresh shares of (alpha, beta, gamma, delta) into the running
trapdoor encodings.  Every contribution appends a record carrying the
updated encodings plus same-ratio proof points, hash-chained to its
predecessor, so the whole ceremony can be re-verified by anyone from the
transcript alone.  A public beacon value is folded in as the final,
deterministically recomputable contribution, and the finished keys are
assembled into a versioned artifact bundle with a canonical digest.

One desk-scale simplification, recorded here deliberately: contributors
run in-process, so share products are accumulated by the coordinator and
the O(n) key queries are scaled once at finalization instead of once per
contribution.  Transcript verifiability and the published records are
exactly as in the sequential protocol; no share material is ever
serialized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .bn254 import (
    FixedBaseG1,
    FixedBaseG2,
    G1_GEN,
    G2_GEN,
    JAC_INF,
    G2_JAC_INF,
    batch_to_affine,
    g1_mul,
    g1_mul_jac,
    g1_neg,
    g2_jac_add,
    g2_jac_dbl,
    g2_mul,
    g2_mul_jac,
    g2_to_affine,
    g2_to_jac,
    jac_add,
    jac_dbl,
    jac_neg,
    to_affine,
    to_jac,
)
from .encoding import (
    Reader,
    g1_bytes,
    g2_bytes,
    pack_bytes,
    sha256,
    u32,
    u64,
)
from .fields import R, HashDRBG, inv, root_of_unity
from .groth16 import ProvingKey, VerificationKey, qap_domain, qap_rows
from .pairing import pairing_check
from .program import BoilerplateProgram, compile_cached
from .r1cs import ConstraintSystem

log = logging.getLogger(__name__)


class DegreeTooSmall(ValueError):
    pass


class EmptyCeremony(ValueError):
    pass


class InvalidPriorState(ValueError):
    pass


# ---------------------------------------------------------------------------
# Phase 1
# ---------------------------------------------------------------------------

@dataclass
class Phase1Parameters:
    degree: int
    tau_powers_g1: list      # [tau^i]G1 for i in 0..2*degree-2
    tau_powers_g2: list      # [tau^i]G2 for i in 0..degree-1
    alpha_tau_g1: list       # [alpha * tau^i]G1 for i in 0..degree-1
    beta_tau_g1: list
    beta_g2: tuple
    secrets: tuple | None = None  # (tau, alpha, beta), test mode only

    def to_bytes(self) -> bytes:
        out = [b"XPT1", u32(self.degree)]
        for vec in (self.tau_powers_g1, self.alpha_tau_g1, self.beta_tau_g1):
            out.append(u32(len(vec)))
            out += [g1_bytes(p) for p in vec]
        out.append(u32(len(self.tau_powers_g2)))
        out += [g2_bytes(p) for p in self.tau_powers_g2]
        out.append(g2_bytes(self.beta_g2))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Phase1Parameters":
        r = Reader(data)
        if r.take(4) != b"XPT1":
            raise ValueError("bad phase-1 magic")
        degree = r.u32()
        tau_g1 = [r.g1() for _ in range(r.u32())]
        alpha_g1 = [r.g1() for _ in range(r.u32())]
        beta_g1 = [r.g1() for _ in range(r.u32())]
        tau_g2 = [r.g2() for _ in range(r.u32())]
        beta_g2 = r.g2()
        r.expect_end()
        return cls(degree, tau_g1, tau_g2, alpha_g1, beta_g1, beta_g2)

    def digest(self) -> bytes:
        return sha256(self.to_bytes())


def phase1_generate(degree: int, seed: bytes, retain_secrets: bool = False) -> Phase1Parameters:
    """Local powers-of-tau generation (desk-scale substitute for importing
    an externally operated transcript).

    The trapdoors live only inside this call unless ``retain_secrets`` is
    set, which exists so oracle tests can cross-check derived parameters.
    """
    if degree < 4 or degree & (degree - 1):
        raise DegreeTooSmall("degree must be a power of two, at least 4")
    drbg = HashDRBG(seed, domain=b"phase1")
    tau = drbg.read_scalar(nonzero=True)
    alpha = drbg.read_scalar(nonzero=True)
    beta = drbg.read_scalar(nonzero=True)
    fb1 = FixedBaseG1(G1_GEN)
    fb2 = FixedBaseG2(G2_GEN)
    powers = [1] * (2 * degree - 1)
    for i in range(1, len(powers)):
        powers[i] = powers[i - 1] * tau % R
    tau_g1 = batch_to_affine([fb1.mul_jac(p) for p in powers])
    alpha_g1 = batch_to_affine([fb1.mul_jac(alpha * powers[i] % R) for i in range(degree)])
    beta_g1 = batch_to_affine([fb1.mul_jac(beta * powers[i] % R) for i in range(degree)])
    tau_g2 = [fb2.mul(powers[i]) for i in range(degree)]
    return Phase1Parameters(
        degree, tau_g1, tau_g2, alpha_g1, beta_g1, fb2.mul(beta),
        secrets=(tau, alpha, beta) if retain_secrets else None,
    )


def verify_phase1(p1: Phase1Parameters, samples: int = 10, seed: bytes = b"spot") -> bool:
    """Pairing spot-checks that the monomial rows are mutually consistent."""
    n = p1.degree
    if len(p1.tau_powers_g1) != 2 * n - 1 or len(p1.tau_powers_g2) != n:
        return False
    if len(p1.alpha_tau_g1) != n or len(p1.beta_tau_g1) != n:
        return False
    if p1.tau_powers_g1[0] != G1_GEN or p1.tau_powers_g2[0] != G2_GEN:
        return False
    drbg = HashDRBG(seed, domain=b"phase1-spot")
    if samples >= 2 * n - 2:
        indices = list(range(2 * n - 2))  # exhaustive when cheap
    else:
        indices = [drbg.read_int(2 * n - 2) for _ in range(samples)]
    for i in indices:
        # e(tau^(i+1) G1, G2) == e(tau^i G1, tau G2)
        ok = pairing_check([
            (p1.tau_powers_g1[i + 1], p1.tau_powers_g2[0]),
            (g1_neg(p1.tau_powers_g1[i]), p1.tau_powers_g2[1]),
        ])
        if not ok:
            log.warning("phase-1 tau row failed spot check at %d", i)
            return False
    for _ in range(max(2, samples // 2)):
        i = drbg.read_int(n - 1)
        if not pairing_check([
            (p1.alpha_tau_g1[i], G2_GEN),
            (g1_neg(p1.alpha_tau_g1[0]), p1.tau_powers_g2[i]),
        ]):
            log.warning("phase-1 alpha row failed spot check at %d", i)
            return False
        if not pairing_check([
            (p1.beta_tau_g1[i], G2_GEN),
            (g1_neg(p1.beta_tau_g1[0]), p1.tau_powers_g2[i]),
        ]):
            log.warning("phase-1 beta row failed spot check at %d", i)
            return False
    if not pairing_check([(p1.beta_tau_g1[0], G2_GEN), (g1_neg(G1_GEN), p1.beta_g2)]):
        log.warning("phase-1 beta G2 mismatch")
        return False
    return True


# ---------------------------------------------------------------------------
# Lagrange preparation (phase 1 -> circuit-bound bases, no trapdoors)
# ---------------------------------------------------------------------------

def _g1_intt(points, omega_inv: int, n_inv: int):
    n = len(points)
    a = [to_jac(p) for p in points]
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
        w_len = pow(omega_inv, n // length, R)
        half = length >> 1
        for start in range(0, n, length):
            w = 1
            for k in range(start, start + half):
                u = a[k]
                hv = a[k + half]
                if hv != JAC_INF:
                    v = g1_mul_jac(to_affine(hv), w)
                    a[k] = jac_add(u, v)
                    a[k + half] = jac_add(u, jac_neg(v))
                else:
                    a[k + half] = u
                w = w * w_len % R
        length <<= 1
    return batch_to_affine([
        g1_mul_jac(to_affine(p), n_inv) if p != JAC_INF else JAC_INF for p in a
    ])


def _g2_intt(points, omega_inv: int, n_inv: int):
    from .bn254 import fp2_neg
    n = len(points)
    a = [g2_to_jac(p) for p in points]
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
        w_len = pow(omega_inv, n // length, R)
        half = length >> 1
        for start in range(0, n, length):
            w = 1
            for k in range(start, start + half):
                u = a[k]
                hv = a[k + half]
                if hv != G2_JAC_INF:
                    v = g2_mul_jac(g2_to_affine(hv), w)
                    a[k] = g2_jac_add(u, v)
                    a[k + half] = g2_jac_add(u, (v[0], fp2_neg(v[1]), v[2]))
                else:
                    a[k + half] = u
                w = w * w_len % R
        length <<= 1
    out = []
    for p in a:
        out.append(g2_to_affine(g2_mul_jac(g2_to_affine(p), n_inv)) if p != G2_JAC_INF else None)
    return out


@dataclass
class CircuitPrep:
    """Phase-1 powers specialized to one circuit; shared by all ceremonies
    for that circuit.  Contains no trapdoor material."""

    phase1_digest: bytes
    cs: ConstraintSystem
    domain: int
    num_public: int
    num_vars: int
    a_g1: list          # [A_v(t)]G1 per wire
    b_g1: list
    b_g2: list
    beta_a_g1: list     # [beta0 * A_v(t)]G1 per wire
    alpha_b_g1: list    # [alpha0 * B_v(t)]G1 per wire
    c_g1: list
    h_base: list        # [t^j * Z(t)]G1, j < domain - 1
    alpha_g1: tuple
    beta_g1: tuple
    beta_g2: tuple

    @property
    def circuit_digest(self) -> bytes:
        return self.cs.digest()


def prepare_circuit(p1: Phase1Parameters, cs: ConstraintSystem) -> CircuitPrep:
    """Lagrange-basis conversion plus per-wire aggregation.

    Pure group arithmetic on published phase-1 values; this is the honest
    path that works with an imported transcript.
    """
    d = qap_domain(cs)
    if d > p1.degree:
        raise DegreeTooSmall(
            "circuit needs domain %d, phase-1 degree is %d" % (d, p1.degree)
        )
    omega_inv = inv(root_of_unity(d), R)
    n_inv = inv(d, R)
    lag_g1 = _g1_intt(p1.tau_powers_g1[:d], omega_inv, n_inv)
    lag_beta = _g1_intt(p1.beta_tau_g1[:d], omega_inv, n_inv)
    lag_alpha = _g1_intt(p1.alpha_tau_g1[:d], omega_inv, n_inv)
    lag_g2 = _g2_intt(p1.tau_powers_g2[:d], omega_inv, n_inv)

    nv = cs.num_vars
    acc_a = [JAC_INF] * nv
    acc_b1 = [JAC_INF] * nv
    acc_c = [JAC_INF] * nv
    acc_ba = [JAC_INF] * nv
    acc_ab = [JAC_INF] * nv
    acc_b2 = [G2_JAC_INF] * nv
    for j, (ra, rb, rc) in enumerate(qap_rows(cs)):
        for idx, coeff in ra:
            acc_a[idx] = jac_add(acc_a[idx], g1_mul_jac(lag_g1[j], coeff))
            acc_ba[idx] = jac_add(acc_ba[idx], g1_mul_jac(lag_beta[j], coeff))
        for idx, coeff in rb:
            acc_b1[idx] = jac_add(acc_b1[idx], g1_mul_jac(lag_g1[j], coeff))
            acc_ab[idx] = jac_add(acc_ab[idx], g1_mul_jac(lag_alpha[j], coeff))
            acc_b2[idx] = g2_jac_add(acc_b2[idx], g2_mul_jac(lag_g2[j], coeff))
        for idx, coeff in rc:
            acc_c[idx] = jac_add(acc_c[idx], g1_mul_jac(lag_g1[j], coeff))

    # [t^j * Z(t)]G1 = [t^(j+d)]G1 - [t^j]G1
    h_base = batch_to_affine([
        jac_add(to_jac(p1.tau_powers_g1[j + d]), to_jac(g1_neg(p1.tau_powers_g1[j])))
        for j in range(d - 1)
    ])
    return CircuitPrep(
        phase1_digest=p1.digest(),
        cs=cs,
        domain=d,
        num_public=cs.num_public,
        num_vars=nv,
        a_g1=batch_to_affine(acc_a),
        b_g1=batch_to_affine(acc_b1),
        b_g2=[g2_to_affine(p) for p in acc_b2],
        beta_a_g1=batch_to_affine(acc_ba),
        alpha_b_g1=batch_to_affine(acc_ab),
        c_g1=batch_to_affine(acc_c),
        h_base=h_base,
        alpha_g1=p1.alpha_tau_g1[0],
        beta_g1=p1.beta_tau_g1[0],
        beta_g2=p1.beta_g2,
    )


def prepare_circuit_from_secrets(p1: Phase1Parameters, cs: ConstraintSystem) -> CircuitPrep:
    """Fast preparation using retained phase-1 trapdoors (test mode).

    Produces bit-identical output to :func:`prepare_circuit`; an
    equivalence test pins that.  Only callable when phase 1 kept its
    secrets, which release-mode generation never does.
    """
    if p1.secrets is None:
        raise ValueError("phase-1 parameters do not retain secrets")
    tau, alpha, beta = p1.secrets
    d = qap_domain(cs)
    if d > p1.degree:
        raise DegreeTooSmall(
            "circuit needs domain %d, phase-1 degree is %d" % (d, p1.degree)
        )
    from .groth16 import lagrange_coeffs_at, qap_evals_at, generator_tables
    lag = lagrange_coeffs_at(tau, d)
    av, bv, cv = qap_evals_at(cs, lag)
    fb1, fb2 = generator_tables()
    zt = (pow(tau, d, R) - 1) % R
    return CircuitPrep(
        phase1_digest=p1.digest(),
        cs=cs,
        domain=d,
        num_public=cs.num_public,
        num_vars=cs.num_vars,
        a_g1=batch_to_affine([fb1.mul_jac(v) for v in av]),
        b_g1=batch_to_affine([fb1.mul_jac(v) for v in bv]),
        b_g2=[fb2.mul(v) for v in bv],
        beta_a_g1=batch_to_affine([fb1.mul_jac(beta * v % R) for v in av]),
        alpha_b_g1=batch_to_affine([fb1.mul_jac(alpha * v % R) for v in bv]),
        c_g1=batch_to_affine([fb1.mul_jac(v) for v in cv]),
        h_base=batch_to_affine([
            fb1.mul_jac(pow(tau, j, R) * zt % R) for j in range(d - 1)
        ]),
        alpha_g1=p1.alpha_tau_g1[0],
        beta_g1=p1.beta_tau_g1[0],
        beta_g2=p1.beta_g2,
    )


# ---------------------------------------------------------------------------
# Phase 2: contributions
# ---------------------------------------------------------------------------

_TRAPDOORS = ("alpha", "beta", "gamma", "delta")


@dataclass(frozen=True)
class ContributionRecord:
    index: int
    contributor_id: str
    # per trapdoor: (share to G1, share to G2); plus the updated encodings
    share_points: dict
    new_singles: dict
    running_digest: bytes

    def to_bytes(self) -> bytes:
        out = [u32(self.index), pack_bytes(self.contributor_id.encode())]
        for name in _TRAPDOORS:
            s1, s2 = self.share_points[name]
            out.append(g1_bytes(s1))
            out.append(g2_bytes(s2))
        for key in _SINGLE_KEYS:
            enc = g1_bytes if key.endswith("g1") else g2_bytes
            out.append(enc(self.new_singles[key]))
        return b"".join(out)

    @classmethod
    def read_from(cls, r: Reader) -> "ContributionRecord":
        index = r.u32()
        contributor_id = r.bytes_().decode()
        shares = {}
        for name in _TRAPDOORS:
            shares[name] = (r.g1(), r.g2())
        singles = {}
        for key in _SINGLE_KEYS:
            singles[key] = r.g1() if key.endswith("g1") else r.g2()
        digest = r.take(32)
        return cls(index, contributor_id, shares, singles, digest)


_SINGLE_KEYS = ("alpha_g1", "beta_g1", "beta_g2", "gamma_g2", "delta_g1", "delta_g2")


def _initial_singles(prep: CircuitPrep) -> dict:
    return {
        "alpha_g1": prep.alpha_g1,
        "beta_g1": prep.beta_g1,
        "beta_g2": prep.beta_g2,
        "gamma_g2": G2_GEN,
        "delta_g1": G1_GEN,
        "delta_g2": G2_GEN,
    }


@dataclass
class CeremonyState:
    prep: CircuitPrep
    program_digest: bytes
    singles: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    chain_digest: bytes = b""
    # accumulated phase-2 share products (coordinator memory, never serialized)
    acc: dict = field(default_factory=dict)
    finalized: bool = False

    @classmethod
    def start(cls, prep: CircuitPrep, program_digest: bytes) -> "CeremonyState":
        st = cls(prep=prep, program_digest=program_digest)
        st.singles = _initial_singles(prep)
        st.acc = {name: 1 for name in _TRAPDOORS}
        st.chain_digest = sha256(
            b"ceremony-start" + prep.phase1_digest + prep.circuit_digest + program_digest
        )
        return st


def _derive_shares(entropy: bytes, chain_digest: bytes) -> dict:
    drbg = HashDRBG(entropy + chain_digest, domain=b"phase2-shares")
    return {name: drbg.read_scalar(nonzero=True) for name in _TRAPDOORS}


def _apply_shares(singles: dict, shares: dict) -> dict:
    return {
        "alpha_g1": g1_mul(singles["alpha_g1"], shares["alpha"]),
        "beta_g1": g1_mul(singles["beta_g1"], shares["beta"]),
        "beta_g2": g2_mul(singles["beta_g2"], shares["beta"]),
        "gamma_g2": g2_mul(singles["gamma_g2"], shares["gamma"]),
        "delta_g1": g1_mul(singles["delta_g1"], shares["delta"]),
        "delta_g2": g2_mul(singles["delta_g2"], shares["delta"]),
    }


def contribute(state: CeremonyState, contributor_id: str, entropy: bytes):
    """Fold a contributor's fresh shares into the ceremony.

    Returns (new_state, record).  The record publishes the updated trapdoor
    encodings and same-ratio proof points; the raw shares never leave this
    function except as the running products in coordinator memory.
    """
    if state.finalized:
        raise InvalidPriorState("ceremony already finalized")
    if not _check_singles_chain(state):
        raise InvalidPriorState("ceremony state fails verification")
    shares = _derive_shares(entropy, state.chain_digest)
    record = _make_record(state, contributor_id, shares)
    new = CeremonyState(
        prep=state.prep,
        program_digest=state.program_digest,
        singles=dict(record.new_singles),
        records=state.records + [record],
        chain_digest=record.running_digest,
        acc={k: state.acc[k] * shares[k] % R for k in _TRAPDOORS},
        finalized=False,
    )
    return new, record


def _make_record(state: CeremonyState, contributor_id: str, shares: dict) -> ContributionRecord:
    fb1, fb2 = _gen_tables()
    share_points = {
        name: (fb1.mul(shares[name]), fb2.mul(shares[name])) for name in _TRAPDOORS
    }
    new_singles = _apply_shares(state.singles, shares)
    body = ContributionRecord(
        index=len(state.records),
        contributor_id=contributor_id,
        share_points=share_points,
        new_singles=new_singles,
        running_digest=b"",
    )
    digest = sha256(state.chain_digest + body.to_bytes())
    return ContributionRecord(
        body.index, contributor_id, share_points, new_singles, digest
    )


_TABLES = None


def _gen_tables():
    global _TABLES
    if _TABLES is None:
        _TABLES = (FixedBaseG1(G1_GEN), FixedBaseG2(G2_GEN))
    return _TABLES


def _check_singles_chain(state: CeremonyState) -> bool:
    """Cheap structural sanity of the running state (full verification is
    :func:`verify_transcript` on the finished ceremony)."""
    if state.records:
        return state.records[-1].new_singles == state.singles
    return state.singles == _initial_singles(state.prep)


def _verify_record(prev_singles: dict, rec: ContributionRecord) -> bool:
    """Same-ratio pairing checks tying a record to its predecessor."""
    for name in _TRAPDOORS:
        s1, s2 = rec.share_points[name]
        if s1 is None or s2 is None:
            return False
        # the two share encodings agree: e(s1, G2) == e(G1, s2)
        if not pairing_check([(s1, G2_GEN), (g1_neg(G1_GEN), s2)]):
            return False
    pairs_to_check = [
        ("alpha_g1", "alpha", "g1"),
        ("beta_g1", "beta", "g1"),
        ("beta_g2", "beta", "g2"),
        ("gamma_g2", "gamma", "g2"),
        ("delta_g1", "delta", "g1"),
        ("delta_g2", "delta", "g2"),
    ]
    for key, trap, grp in pairs_to_check:
        old = prev_singles[key]
        new = rec.new_singles[key]
        if new is None:
            return False
        s1, s2 = rec.share_points[trap]
        if grp == "g1":
            # e(new, G2) == e(old, [share]G2)
            if not pairing_check([(new, G2_GEN), (g1_neg(old), s2)]):
                return False
        else:
            # e([share]G1, old) == e(G1, new)
            if not pairing_check([(s1, old), (g1_neg(G1_GEN), new)]):
                return False
    return True


# ---------------------------------------------------------------------------
# Beacon + finalization
# ---------------------------------------------------------------------------

BEACON_PREFIX = "beacon:"


def beacon_shares(beacon: bytes, chain_digest: bytes) -> dict:
    """Deterministic, publicly recomputable shares from a beacon value."""
    return _derive_shares(sha256(b"beacon" + beacon), chain_digest)


@dataclass(frozen=True)
class CeremonyTranscript:
    phase1_digest: bytes
    circuit_digest: bytes
    program_digest: bytes
    records: tuple            # contribution records, beacon record last
    beacon: bytes
    beacon_source: str
    final_digest: bytes

    def to_bytes(self) -> bytes:
        out = [b"XTS1", pack_bytes(self.phase1_digest),
               pack_bytes(self.circuit_digest), pack_bytes(self.program_digest),
               u32(len(self.records))]
        for rec in self.records:
            out.append(pack_bytes(rec.to_bytes() + rec.running_digest))
        out.append(pack_bytes(self.beacon))
        out.append(pack_bytes(self.beacon_source.encode()))
        out.append(pack_bytes(self.final_digest))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CeremonyTranscript":
        r = Reader(data)
        if r.take(4) != b"XTS1":
            raise ValueError("bad transcript magic")
        p1d = r.bytes_()
        csd = r.bytes_()
        pgd = r.bytes_()
        records = []
        for _ in range(r.u32()):
            rr = Reader(r.bytes_())
            records.append(ContributionRecord.read_from(rr))
        beacon = r.bytes_()
        source = r.bytes_().decode()
        final = r.bytes_()
        r.expect_end()
        return cls(p1d, csd, pgd, tuple(records), beacon, source, final)

    def digest(self) -> bytes:
        return sha256(self.to_bytes())

    def manifest(self) -> str:
        lines = [
            "ceremony transcript",
            "phase1   %s" % self.phase1_digest.hex(),
            "circuit  %s" % self.circuit_digest.hex(),
            "program  %s" % self.program_digest.hex(),
            "records  %d (beacon last)" % len(self.records),
        ]
        for rec in self.records:
            lines.append("  [%d] %-24s %s" % (
                rec.index, rec.contributor_id, rec.running_digest.hex()[:16]))
        lines.append("beacon   %r from %s" % (self.beacon.decode("latin1"),
                                              self.beacon_source))
        lines.append("final    %s" % self.final_digest.hex())
        return "\n".join(lines)


@dataclass
class ZkArtifacts:
    version: int
    program_digest: bytes
    proving_key: ProvingKey
    verification_key: VerificationKey
    transcript_digest: bytes

    def body_bytes(self) -> bytes:
        return b"".join([
            b"XZA1",
            u64(self.version),
            pack_bytes(self.program_digest),
            pack_bytes(self.proving_key.to_bytes()),
            pack_bytes(self.verification_key.to_bytes()),
            pack_bytes(self.transcript_digest),
        ])

    @property
    def artifact_digest(self) -> bytes:
        if not hasattr(self, "_digest"):
            self._digest = sha256(self.body_bytes())
        return self._digest

    def to_bytes(self) -> bytes:
        return self.body_bytes() + pack_bytes(self.artifact_digest)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ZkArtifacts":
        r = Reader(data)
        if r.take(4) != b"XZA1":
            raise ValueError("bad artifact magic")
        version = r.u64()
        program_digest = r.bytes_()
        pk = ProvingKey.from_bytes(r.bytes_())
        vk = VerificationKey.from_bytes(r.bytes_())
        tdigest = r.bytes_()
        claimed = r.bytes_()
        r.expect_end()
        art = cls(version, program_digest, pk, vk, tdigest)
        if art.artifact_digest != claimed:
            raise ValueError("artifact digest mismatch")
        return art


def finalize(state: CeremonyState, beacon: bytes, beacon_source: str,
             version: int) -> tuple[ZkArtifacts, CeremonyTranscript]:
    """Apply the beacon, derive the key pair, assemble the artifact bundle."""
    if not state.records:
        raise EmptyCeremony("at least one contribution required before the beacon")
    if not beacon:
        raise ValueError("beacon value must be non-empty")
    if state.finalized:
        raise InvalidPriorState("ceremony already finalized")

    shares = beacon_shares(beacon, state.chain_digest)
    beacon_rec = _make_record(state, BEACON_PREFIX + beacon_source, shares)
    singles = dict(beacon_rec.new_singles)
    acc = {k: state.acc[k] * shares[k] % R for k in _TRAPDOORS}
    state.finalized = True

    prep = state.prep
    npub = prep.num_public
    a_acc, b_acc, c_acc, d_acc = (acc[n] for n in _TRAPDOORS)
    d_inv = inv(d_acc, R)
    g_inv = inv(c_acc, R)
    s_ba = b_acc * d_inv % R      # scales [beta0 A_v]
    s_ab = a_acc * d_inv % R      # scales [alpha0 B_v]
    s_ba_ic = b_acc * g_inv % R
    s_ab_ic = a_acc * g_inv % R

    def combine(i: int, s1: int, s2: int, s3: int):
        acc_pt = g1_mul_jac(prep.beta_a_g1[i], s1)
        acc_pt = jac_add(acc_pt, g1_mul_jac(prep.alpha_b_g1[i], s2))
        acc_pt = jac_add(acc_pt, g1_mul_jac(prep.c_g1[i], s3))
        return acc_pt

    ic = batch_to_affine([combine(i, s_ba_ic, s_ab_ic, g_inv) for i in range(npub + 1)])
    l_query = batch_to_affine(
        [combine(i, s_ba, s_ab, d_inv) for i in range(npub + 1, prep.num_vars)]
    )
    h_query = batch_to_affine([g1_mul_jac(p, d_inv) for p in prep.h_base])

    cs = state.prep.cs
    pk = ProvingKey(
        domain=prep.domain, num_public=npub,
        alpha_g1=singles["alpha_g1"], beta_g1=singles["beta_g1"],
        beta_g2=singles["beta_g2"], delta_g1=singles["delta_g1"],
        delta_g2=singles["delta_g2"],
        a_query=list(prep.a_g1), b_g1_query=list(prep.b_g1),
        b_g2_query=list(prep.b_g2),
        l_query=l_query, h_query=h_query, cs=cs,
    )
    vk = VerificationKey(
        alpha_g1=singles["alpha_g1"], beta_g2=singles["beta_g2"],
        gamma_g2=singles["gamma_g2"], delta_g2=singles["delta_g2"],
        ic=ic, circuit_digest=prep.circuit_digest,
    )
    transcript = CeremonyTranscript(
        phase1_digest=prep.phase1_digest,
        circuit_digest=prep.circuit_digest,
        program_digest=state.program_digest,
        records=tuple(state.records + [beacon_rec]),
        beacon=beacon,
        beacon_source=beacon_source,
        final_digest=beacon_rec.running_digest,
    )
    artifacts = ZkArtifacts(
        version=version,
        program_digest=state.program_digest,
        proving_key=pk,
        verification_key=vk,
        transcript_digest=transcript.digest(),
    )
    return artifacts, transcript


def verify_transcript_with_reason(transcript: CeremonyTranscript,
                                  p1: Phase1Parameters) -> tuple[bool, str]:
    """Re-verify a finished ceremony from public data alone."""
    if transcript.phase1_digest != p1.digest():
        return False, "phase-1 digest mismatch"
    if not transcript.records:
        return False, "no contribution records"
    if not transcript.records[-1].contributor_id.startswith(BEACON_PREFIX):
        return False, "missing beacon record"
    if any(r.contributor_id.startswith(BEACON_PREFIX)
           for r in transcript.records[:-1]):
        return False, "beacon record not last"

    singles = {
        "alpha_g1": p1.alpha_tau_g1[0],
        "beta_g1": p1.beta_tau_g1[0],
        "beta_g2": p1.beta_g2,
        "gamma_g2": G2_GEN,
        "delta_g1": G1_GEN,
        "delta_g2": G2_GEN,
    }
    chain = sha256(
        b"ceremony-start" + transcript.phase1_digest + transcript.circuit_digest
        + transcript.program_digest
    )
    for pos, rec in enumerate(transcript.records):
        if rec.index != pos:
            return False, "record %d: bad index %d" % (pos, rec.index)
        body = ContributionRecord(rec.index, rec.contributor_id,
                                  rec.share_points, rec.new_singles, b"")
        expect = sha256(chain + body.to_bytes())
        if expect != rec.running_digest:
            return False, "record %d: chain digest mismatch" % pos
        if not _verify_record(singles, rec):
            return False, "record %d: update proof failed" % pos
        if rec.contributor_id.startswith(BEACON_PREFIX):
            shares = beacon_shares(transcript.beacon, chain)
            recomputed = _apply_shares(singles, shares)
            if recomputed != rec.new_singles:
                return False, "record %d: beacon shares do not reproduce" % pos
        singles = rec.new_singles
        chain = rec.running_digest
    if transcript.final_digest != chain:
        return False, "final digest mismatch"
    return True, "ok"


def verify_transcript(transcript: CeremonyTranscript, p1: Phase1Parameters) -> bool:
    ok, reason = verify_transcript_with_reason(transcript, p1)
    if not ok:
        log.info("transcript rejected: %s", reason)
    return ok


def run_ceremony(prep: CircuitPrep, program: BoilerplateProgram,
                 contributors, beacon: bytes, beacon_source: str,
                 version: int) -> tuple[ZkArtifacts, CeremonyTranscript]:
    """One full phase-2 cycle: contributions in order, then the beacon."""
    state = CeremonyState.start(prep, program.program_digest)
    for contributor_id, entropy in contributors:
        state, _ = contribute(state, contributor_id, entropy)
    return finalize(state, beacon, beacon_source, version)
