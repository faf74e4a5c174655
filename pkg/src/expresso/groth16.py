"""Groth16 proving and verification.

The constraint system is lifted to a QAP over a radix-2 evaluation domain.
Following the usual practice, one extra row per public wire (and one for
the constant wire) is appended so every statement wire has a nonzero A
polynomial and the verifier's input accumulation actually binds the
statement.

Keys are produced either by :func:`setup_from_trapdoors` (explicit
trapdoors; used for tests, benchmarks and as the equivalence oracle for
the multi-party setup) or by the ceremony module, which never materializes
tau.  Both construct the same key shape:

    A-query   [A_v(t)]*G1                    (all wires)
    B-queries [B_v(t)]*G1, [B_v(t)]*G2       (all wires)
    L-query   [(beta*A_v + alpha*B_v + C_v)/delta]*G1   (private wires)
    IC        [(beta*A_v + alpha*B_v + C_v)/gamma]*G1   (statement wires)
    H-query   [t^j * Z(t) / delta]*G1        (j < domain-1)

Verification is the standard three-pairing product check against a cached
e(alpha, beta); its cost is independent of circuit size.
"""

from __future__ import annotations

import logging
import secrets
from dataclasses import dataclass

from .bn254 import (
    FixedBaseG1,
    FixedBaseG2,
    G1_GEN,
    G2_GEN,
    batch_to_affine,
    g1_mul,
    g1_mul_jac,
    g1_msm,
    g1_neg,
    g1_on_curve,
    g2_in_subgroup,
    g2_msm,
    g2_mul,
    jac_add,
    jac_add_affine,
    to_affine,
    to_jac,
)
from .encoding import Reader, fr_bytes, g1_bytes, g2_bytes, pack_bytes, sha256, u32
from .fields import R, HashDRBG, batch_inv, inv, intt, ntt, root_of_unity
from .pairing import fp12_conj, miller_loop, final_exponentiation, pairing
from .r1cs import ConstraintSystem, eval_lc

log = logging.getLogger(__name__)


class KeyMismatch(ValueError):
    """Witness shape inconsistent with the proving key."""


class UnsatisfiedConstraints(ValueError):
    def __init__(self, index: int):
        super().__init__("witness violates constraint %d" % index)
        self.constraint_index = index


@dataclass(frozen=True)
class Proof:
    a: tuple
    b: tuple
    c: tuple

    def to_bytes(self) -> bytes:
        return g1_bytes(self.a) + g2_bytes(self.b) + g1_bytes(self.c)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Proof":
        r = Reader(data)
        proof = cls(r.g1(), r.g2(), r.g1())
        r.expect_end()
        return proof


@dataclass
class VerificationKey:
    alpha_g1: tuple
    beta_g2: tuple
    gamma_g2: tuple
    delta_g2: tuple
    ic: list
    circuit_digest: bytes

    def __post_init__(self):
        self._ab_inv = None

    def alpha_beta_inv(self):
        if self._ab_inv is None:
            self._ab_inv = fp12_conj(pairing(self.alpha_g1, self.beta_g2))
        return self._ab_inv

    def to_bytes(self) -> bytes:
        out = [b"XVK1", g1_bytes(self.alpha_g1), g2_bytes(self.beta_g2),
               g2_bytes(self.gamma_g2), g2_bytes(self.delta_g2),
               u32(len(self.ic))]
        out += [g1_bytes(p) for p in self.ic]
        out.append(pack_bytes(self.circuit_digest))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "VerificationKey":
        r = Reader(data)
        if r.take(4) != b"XVK1":
            raise ValueError("bad verification key magic")
        alpha = r.g1()
        beta, gamma, delta = r.g2(), r.g2(), r.g2()
        ic = [r.g1() for _ in range(r.u32())]
        digest = r.bytes_()
        r.expect_end()
        return cls(alpha, beta, gamma, delta, ic, digest)

    def digest(self) -> bytes:
        return sha256(self.to_bytes())


@dataclass
class ProvingKey:
    domain: int
    num_public: int
    alpha_g1: tuple
    beta_g1: tuple
    beta_g2: tuple
    delta_g1: tuple
    delta_g2: tuple
    a_query: list
    b_g1_query: list
    b_g2_query: list
    l_query: list      # private wires only
    h_query: list
    cs: ConstraintSystem

    @property
    def num_vars(self) -> int:
        return len(self.a_query)

    def to_bytes(self) -> bytes:
        out = [b"XPK1", u32(self.domain), u32(self.num_public),
               g1_bytes(self.alpha_g1), g1_bytes(self.beta_g1),
               g2_bytes(self.beta_g2), g1_bytes(self.delta_g1),
               g2_bytes(self.delta_g2)]
        for vec, enc in ((self.a_query, g1_bytes), (self.b_g1_query, g1_bytes),
                         (self.b_g2_query, g2_bytes), (self.l_query, g1_bytes),
                         (self.h_query, g1_bytes)):
            out.append(u32(len(vec)))
            out += [enc(p) for p in vec]
        out.append(pack_bytes(self.cs.to_bytes()))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProvingKey":
        from .r1cs import Row  # noqa: F401  (documentation pointer)
        r = Reader(data)
        if r.take(4) != b"XPK1":
            raise ValueError("bad proving key magic")
        domain, num_public = r.u32(), r.u32()
        alpha = r.g1()
        beta_g1 = r.g1()
        beta_g2 = r.g2()
        delta_g1 = r.g1()
        delta_g2 = r.g2()
        a_query = [r.g1() for _ in range(r.u32())]
        b_g1 = [r.g1() for _ in range(r.u32())]
        b_g2 = [r.g2() for _ in range(r.u32())]
        l_query = [r.g1() for _ in range(r.u32())]
        h_query = [r.g1() for _ in range(r.u32())]
        cs = _cs_from_bytes(r.bytes_())
        r.expect_end()
        return cls(domain, num_public, alpha, beta_g1, beta_g2, delta_g1,
                   delta_g2, a_query, b_g1, b_g2, l_query, h_query, cs)

    def digest(self) -> bytes:
        return sha256(self.to_bytes())


def _cs_from_bytes(data: bytes) -> ConstraintSystem:
    r = Reader(data)
    if r.take(4) != b"XR1C" or r.u32() != 1:
        raise ValueError("bad constraint-system export")
    num_vars, num_public, n = r.u32(), r.u32(), r.u32()
    rows = []
    for _ in range(n):
        triple = []
        for _ in range(3):
            terms = tuple((r.u32(), r.fr()) for _ in range(r.u32()))
            triple.append(terms)
        rows.append(tuple(triple))
    r.expect_end()
    return ConstraintSystem(num_vars, num_public, tuple(rows))


# ---------------------------------------------------------------------------
# QAP plumbing
# ---------------------------------------------------------------------------

def qap_domain(cs: ConstraintSystem) -> int:
    need = cs.num_constraints + cs.num_public + 1
    d = 1
    while d < need:
        d <<= 1
    return d


def qap_rows(cs: ConstraintSystem):
    """R1CS rows plus the statement-binding padding rows."""
    pad = tuple(
        (((i, 1),), (), ()) for i in range(cs.num_public + 1)
    )
    return cs.rows + pad


def lagrange_coeffs_at(tau: int, domain: int) -> list:
    """L_j(tau) for the radix-2 domain of the given size."""
    omega = root_of_unity(domain)
    z = (pow(tau, domain, R) - 1) % R
    if z == 0:
        raise ValueError("tau lies in the evaluation domain")
    roots = []
    w = 1
    for _ in range(domain):
        roots.append(w)
        w = w * omega % R
    denoms = [(tau - root) % R for root in roots]
    inv_denoms = batch_inv(denoms, R)
    d_inv = inv(domain, R)
    return [z * d_inv % R * roots[j] % R * inv_denoms[j] % R for j in range(domain)]


def qap_evals_at(cs: ConstraintSystem, lag: list):
    """Per-wire A_v(tau), B_v(tau), C_v(tau) given Lagrange values at tau."""
    av = [0] * cs.num_vars
    bv = [0] * cs.num_vars
    cv = [0] * cs.num_vars
    for j, (ra, rb, rc) in enumerate(qap_rows(cs)):
        lj = lag[j]
        for idx, coeff in ra:
            av[idx] = (av[idx] + coeff * lj) % R
        for idx, coeff in rb:
            bv[idx] = (bv[idx] + coeff * lj) % R
        for idx, coeff in rc:
            cv[idx] = (cv[idx] + coeff * lj) % R
    return av, bv, cv


_FIXED_G1 = None
_FIXED_G2 = None


def generator_tables():
    global _FIXED_G1, _FIXED_G2
    if _FIXED_G1 is None:
        _FIXED_G1 = FixedBaseG1(G1_GEN)
        _FIXED_G2 = FixedBaseG2(G2_GEN)
    return _FIXED_G1, _FIXED_G2


def setup_from_trapdoors(cs: ConstraintSystem, tau: int, alpha: int, beta: int,
                         gamma: int, delta: int):
    """Key generation from explicit trapdoors.

    Insecure by construction (the caller knows tau); exists for unit tests,
    benchmarks at large circuit sizes, and as the oracle the ceremony path
    is checked against.
    """
    d = qap_domain(cs)
    lag = lagrange_coeffs_at(tau, d)
    av, bv, cv = qap_evals_at(cs, lag)
    fb1, fb2 = generator_tables()
    ginv = inv(gamma, R)
    dinv = inv(delta, R)
    npub = cs.num_public

    a_query = batch_to_affine([fb1.mul_jac(v) for v in av])
    b_g1_query = batch_to_affine([fb1.mul_jac(v) for v in bv])
    b_g2_query = [fb2.mul(v) for v in bv]
    combined = [(beta * av[i] + alpha * bv[i] + cv[i]) % R for i in range(cs.num_vars)]
    ic = batch_to_affine(
        [fb1.mul_jac(combined[i] * ginv % R) for i in range(npub + 1)]
    )
    l_query = batch_to_affine(
        [fb1.mul_jac(combined[i] * dinv % R) for i in range(npub + 1, cs.num_vars)]
    )
    zt = (pow(tau, d, R) - 1) % R
    h_query = batch_to_affine([
        fb1.mul_jac(pow(tau, j, R) * zt % R * dinv % R) for j in range(d - 1)
    ])
    pk = ProvingKey(
        domain=d, num_public=npub,
        alpha_g1=fb1.mul(alpha), beta_g1=fb1.mul(beta), beta_g2=fb2.mul(beta),
        delta_g1=fb1.mul(delta), delta_g2=fb2.mul(delta),
        a_query=a_query, b_g1_query=b_g1_query, b_g2_query=b_g2_query,
        l_query=l_query, h_query=h_query, cs=cs,
    )
    vk = VerificationKey(
        alpha_g1=pk.alpha_g1, beta_g2=pk.beta_g2, gamma_g2=fb2.mul(gamma),
        delta_g2=pk.delta_g2, ic=ic, circuit_digest=cs.digest(),
    )
    return pk, vk


# ---------------------------------------------------------------------------
# Proving
# ---------------------------------------------------------------------------

def _h_coefficients(cs: ConstraintSystem, witness, domain: int) -> list:
    """Coefficients of H(x) = (A(x)B(x) - C(x)) / Z(x) via one coset pass."""
    a_ev = [0] * domain
    b_ev = [0] * domain
    c_ev = [0] * domain
    for j, (ra, rb, rc) in enumerate(qap_rows(cs)):
        if ra:
            a_ev[j] = eval_lc(ra, witness)
        if rb:
            b_ev[j] = eval_lc(rb, witness)
        if rc:
            c_ev[j] = eval_lc(rc, witness)
    omega = root_of_unity(domain)
    a_c = intt(a_ev, omega)
    b_c = intt(b_ev, omega)
    c_c = intt(c_ev, omega)
    # shift onto the coset g*H
    g = 5
    gp = 1
    for i in range(domain):
        a_c[i] = a_c[i] * gp % R
        b_c[i] = b_c[i] * gp % R
        c_c[i] = c_c[i] * gp % R
        gp = gp * g % R
    a_s = ntt(a_c, omega)
    b_s = ntt(b_c, omega)
    c_s = ntt(c_c, omega)
    zinv = inv((pow(g, domain, R) - 1) % R, R)
    h_s = [(a_s[i] * b_s[i] - c_s[i]) % R * zinv % R for i in range(domain)]
    h_c = intt(h_s, omega)
    gi = inv(g, R)
    gp = 1
    for i in range(domain):
        h_c[i] = h_c[i] * gp % R
        gp = gp * gi % R
    return h_c[:domain - 1]


def prove(pk: ProvingKey, witness, seed: bytes | None = None) -> Proof:
    """Generate a proof; deterministic when a randomness seed is supplied.

    Raises KeyMismatch on witness-shape mismatch and UnsatisfiedConstraints
    (with the first offending constraint index) before doing any expensive
    group work.
    """
    if len(witness) != pk.num_vars:
        raise KeyMismatch(
            "witness length %d, key expects %d" % (len(witness), pk.num_vars)
        )
    bad = pk.cs.first_violation(witness)
    if bad is not None:
        raise UnsatisfiedConstraints(bad)

    drbg = HashDRBG(seed if seed is not None else secrets.token_bytes(32),
                    domain=b"proof-randomness")
    r_rand = drbg.read_scalar()
    s_rand = drbg.read_scalar()

    a_acc = to_jac(g1_msm(pk.a_query, witness))
    a_acc = jac_add_affine(a_acc, pk.alpha_g1)
    a_acc = jac_add(a_acc, g1_mul_jac(pk.delta_g1, r_rand))
    a_pt = to_affine(a_acc)

    b2 = g2_msm(pk.b_g2_query, witness)
    from .bn254 import g2_add  # local import keeps module top tidy
    b_pt = g2_add(g2_add(b2, pk.beta_g2), g2_mul(pk.delta_g2, s_rand))

    b1_acc = to_jac(g1_msm(pk.b_g1_query, witness))
    b1_acc = jac_add_affine(b1_acc, pk.beta_g1)
    b1_acc = jac_add(b1_acc, g1_mul_jac(pk.delta_g1, s_rand))
    b1_pt = to_affine(b1_acc)

    h = _h_coefficients(pk.cs, witness, pk.domain)
    c_acc = to_jac(g1_msm(pk.l_query, witness[pk.num_public + 1:]))
    c_acc = jac_add(c_acc, to_jac(g1_msm(pk.h_query, h)))
    c_acc = jac_add(c_acc, g1_mul_jac(a_pt, s_rand))
    c_acc = jac_add(c_acc, g1_mul_jac(b1_pt, r_rand))
    c_acc = jac_add(c_acc, g1_mul_jac(pk.delta_g1, R - (r_rand * s_rand % R)))
    return Proof(a_pt, b_pt, to_affine(c_acc))


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

def verify_with_reason(vk: VerificationKey, public_inputs, proof: Proof):
    """(ok, reason) form of verification; never raises on bad proofs."""
    try:
        if len(public_inputs) != len(vk.ic) - 1:
            return False, "public input count mismatch"
        if not (g1_on_curve(proof.a) and g1_on_curve(proof.c)):
            return False, "malformed proof: G1 element off curve"
        if proof.a is None or proof.c is None:
            return False, "malformed proof: identity element"
        if proof.b is None or not g2_in_subgroup(proof.b):
            return False, "malformed proof: B not in the G2 subgroup"
        for x in public_inputs:
            if not (0 <= x < R):
                return False, "non-canonical public input"
        ic_acc = to_jac(vk.ic[0])
        rest = g1_msm(vk.ic[1:], public_inputs)
        if rest is not None:
            ic_acc = jac_add_affine(ic_acc, rest)
        ic_pt = to_affine(ic_acc)
        f = final_exponentiation(miller_loop([
            (g1_neg(proof.a), proof.b),
            (ic_pt, vk.gamma_g2),
            (proof.c, vk.delta_g2),
        ]))
        if f != vk.alpha_beta_inv():
            return False, "pairing product check failed"
        return True, "ok"
    except Exception as exc:  # malformed inputs must not crash the verifier
        return False, "malformed proof: %s" % exc


def verify(vk: VerificationKey, public_inputs, proof: Proof) -> bool:
    ok, reason = verify_with_reason(vk, public_inputs, proof)
    if not ok:
        log.debug("proof rejected: %s", reason)
    return ok
