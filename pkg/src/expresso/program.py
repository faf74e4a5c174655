"""The standardized membership program and its compiler.

The trust anchor publishes a small, human-readable program text; everyone
compiles it themselves, so nobody can lie about what is being proven or
which inputs are public.  The language is deliberately tiny: typed
parameter declarations plus a fixed set of gadget statements, enough to
express "I know a signature by the identity provider over a hidden client
identifier" and small calibration programs, and nothing else.

Compilation is deterministic: same source text, same constraint system,
byte for byte.  Witness generation replays per-wire assignment hints that
the compiler records while lowering, then the result can be checked
directly against the constraints (``ConstraintSystem.evaluate``), which is
also the independent oracle the proof-system tests lean on.

Grammar (one statement per line, ``#`` comments)::

    program <name> <version>
    meta <key> <int>
    param <name> public|private point|field|scalar [width <n>]
    const <name> <int>
    <dest> = hash(<atom>, ...)
    <dest> = bits(<atom>, <n>)        # n-bit decomposition, n < 254
    <dest> = canonbits(<atom>)        # 254 bits + canonical range check
    <dest> = slice(<bits>, <lo>, <hi>)
    <dest> = mulfix(<bits>)           # bits * subgroup generator
    <dest> = mulvar(<point>, <bits>)
    <dest> = add(<point>, <point>)
    <dest> = mul(<atom>, <atom>)
    assert_oncurve <point>
    assert_notlow <point>
    assert_eq <a> <b>
    assert_mul <a> <b> <c>
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from . import babyjubjub as ec
from .encoding import sha256
from .fields import R, inv
from .poseidon import PoseidonParams
from .r1cs import ConstraintSystem, freeze, lc_add, lc_const, lc_scale
from .schnorr import (
    CANONICAL_SCHEME,
    ClientCredential,
    SchemeParams,
    verify_native,
)

FIELD_BITS = 254


class ParseError(ValueError):
    def __init__(self, line: int, col: int, msg: str):
        super().__init__("line %d, col %d: %s" % (line, col, msg))
        self.line = line
        self.col = col


class SchemaMismatch(ValueError):
    """Program parameters do not match the declared schema."""


class InvalidCredential(ValueError):
    """Credential fails native verification; refused before proving."""


# The standardized parameter shape of the membership program: the identity
# provider's key is the only public input, everything else stays private.
MEMBERSHIP_SCHEMA = (
    ("pk", "public", "point"),
    ("R", "private", "point"),
    ("S", "private", "scalar"),
    ("M", "private", "field"),
)


@dataclass(frozen=True)
class BoilerplateProgram:
    source_text: str
    name: str
    version: int
    parameter_schema: tuple  # ((name, visibility, type), ...)
    meta: tuple              # ((key, value), ...)

    @property
    def program_digest(self) -> bytes:
        return sha256(self.source_text.encode())

    @classmethod
    def from_source(cls, text: str) -> "BoilerplateProgram":
        stmts = _parse(text)
        name, version = "", 0
        schema = []
        meta = []
        for st in stmts:
            if st.op == "program":
                name, version = st.args
            elif st.op == "param":
                schema.append(tuple(st.args[:3]))
            elif st.op == "meta":
                meta.append(tuple(st.args))
        return cls(text, name, version, tuple(schema), tuple(meta))

    def meta_int(self, key: str) -> int:
        for k, v in self.meta:
            if k == key:
                return v
        raise KeyError(key)


def require_membership_schema(program: BoilerplateProgram):
    if program.parameter_schema != MEMBERSHIP_SCHEMA:
        raise SchemaMismatch(
            "expected schema %r, program declares %r"
            % (MEMBERSHIP_SCHEMA, program.parameter_schema)
        )


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

@dataclass
class _Stmt:
    line: int
    op: str
    args: list
    dest: str | None = None


_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*|\d+|[(),=]|\S")

_TYPES = ("point", "field", "scalar")
_FUNCS = ("hash", "bits", "canonbits", "slice", "mulfix", "mulvar", "add", "mul")
_ASSERTS = ("assert_oncurve", "assert_notlow", "assert_eq", "assert_mul")


def _parse(text: str) -> list[_Stmt]:
    stmts: list[_Stmt] = []
    seen_program = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        toks = [(m.group(0), m.start() + 1) for m in _TOKEN.finditer(body)]
        words = [t for t, _ in toks]

        def err(msg, idx=0):
            col = toks[idx][1] if idx < len(toks) else len(body)
            raise ParseError(lineno, col, msg)

        head = words[0]
        if head == "program":
            if seen_program:
                err("duplicate program header")
            if len(words) != 3 or not words[2].isdigit():
                err("expected: program <name> <version>")
            seen_program = True
            stmts.append(_Stmt(lineno, "program", [words[1], int(words[2])]))
        elif head == "meta":
            if len(words) != 3 or not words[2].isdigit():
                err("expected: meta <key> <int>")
            stmts.append(_Stmt(lineno, "meta", [words[1], int(words[2])]))
        elif head == "param":
            if len(words) not in (4, 6) or words[2] not in ("public", "private") \
                    or words[3] not in _TYPES:
                err("expected: param <name> public|private point|field|scalar [width <n>]")
            width = None
            if len(words) == 6:
                if words[4] != "width" or not words[5].isdigit():
                    err("expected width <n>", 4)
                width = int(words[5])
            if words[3] == "scalar" and width is None:
                err("scalar parameters need an explicit width")
            stmts.append(_Stmt(lineno, "param", [words[1], words[2], words[3], width]))
        elif head == "const":
            if len(words) != 3 or not words[2].isdigit():
                err("expected: const <name> <int>")
            stmts.append(_Stmt(lineno, "const", [words[1], int(words[2])]))
        elif head in _ASSERTS:
            stmts.append(_Stmt(lineno, head, words[1:]))
        elif len(words) >= 3 and words[1] == "=":
            fn = words[2]
            if fn not in _FUNCS:
                err("unknown operation %r" % fn, 2)
            if len(words) < 4 or words[3] != "(" or words[-1] != ")":
                err("expected %s( ... )" % fn, 2)
            args = [w for w in words[4:-1] if w != ","]
            stmts.append(_Stmt(lineno, fn, args, dest=words[0]))
        else:
            err("unrecognized statement %r" % head)
    if not seen_program:
        raise ParseError(1, 1, "missing program header")
    return stmts


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

class _Builder:
    def __init__(self):
        self.nvars = 1  # wire 0 is the constant one
        self.rows: list = []
        self.assignments: list = []  # (wire index, fn(values) -> int)

    def new_wire(self, hint=None) -> int:
        idx = self.nvars
        self.nvars += 1
        if hint is not None:
            self.assignments.append((idx, hint))
        return idx

    def enforce(self, a: dict, b: dict, c: dict):
        self.rows.append((a, b, c))

    def mul(self, a: dict, b: dict) -> dict:
        w = self.new_wire(lambda vals, a=a, b=b: _veval(a, vals) * _veval(b, vals) % R)
        self.enforce(a, b, {w: 1})
        return {w: 1}

    def assert_zero(self, a: dict):
        self.enforce(a, lc_const(1), {})

    def assert_eq(self, a: dict, b: dict):
        self.assert_zero(lc_add(a, lc_scale(b, R - 1)))

    # --- gadget library -------------------------------------------------

    def bits(self, x: dict, n: int) -> list:
        out = []
        for i in range(n):
            w = self.new_wire(lambda vals, x=x, i=i: (_veval(x, vals) >> i) & 1)
            b = {w: 1}
            self.enforce(b, lc_add(b, lc_const(R - 1)), {})
            out.append(b)
        packed: dict = {}
        for i, b in enumerate(out):
            packed = lc_add(packed, lc_scale(b, 1 << i))
        self.assert_eq(packed, x)
        return out

    def canonbits(self, x: dict) -> list:
        out = self.bits(x, FIELD_BITS)
        # enforce value <= R-1 bit by bit from the top: while the prefix
        # still equals the modulus prefix, positions where R-1 has a zero
        # bit must be zero.
        bound = R - 1
        eq: dict = lc_const(1)
        for i in range(FIELD_BITS - 1, -1, -1):
            if (bound >> i) & 1:
                eq = self.mul(eq, out[i])
            else:
                self.enforce(eq, out[i], {})
        return out

    def edwards_add(self, p1, p2):
        x1, y1 = p1
        x2, y2 = p2
        t1 = self.mul(x1, y2)
        t2 = self.mul(y1, x2)
        t3 = self.mul(y1, y2)
        t4 = self.mul(x1, x2)
        t5 = self.mul(t3, t4)  # x1 x2 y1 y2

        def hint_x3(vals, t1=t1, t2=t2, t5=t5):
            den = (1 + ec.D * _veval(t5, vals)) % R
            return (_veval(t1, vals) + _veval(t2, vals)) * inv(den, R) % R

        def hint_y3(vals, t3=t3, t4=t4, t5=t5):
            den = (1 - ec.D * _veval(t5, vals)) % R
            return (_veval(t3, vals) - ec.A * _veval(t4, vals)) * inv(den, R) % R

        x3 = {self.new_wire(hint_x3): 1}
        y3 = {self.new_wire(hint_y3): 1}
        self.enforce(x3, lc_add(lc_const(1), lc_scale(t5, ec.D)), lc_add(t1, t2))
        self.enforce(y3, lc_add(lc_const(1), lc_scale(t5, R - ec.D)),
                     lc_add(t3, lc_scale(t4, R - ec.A)))
        return (x3, y3)

    def assert_oncurve(self, p):
        x, y = p
        x2 = self.mul(x, x)
        y2 = self.mul(y, y)
        x2y2 = self.mul(x2, y2)
        self.assert_zero(
            lc_add(
                lc_add(lc_scale(x2, ec.A), y2),
                lc_add(lc_const(R - 1), lc_scale(x2y2, R - ec.D)),
            )
        )

    def is_zero(self, v: dict) -> dict:
        """Wire that is 1 iff <v,w> == 0."""

        def hint_inv(vals, v=v):
            val = _veval(v, vals)
            return inv(val, R) if val else 0

        def hint_flag(vals, v=v):
            return 1 if _veval(v, vals) == 0 else 0

        iw = {self.new_wire(hint_inv): 1}
        z = {self.new_wire(hint_flag): 1}
        self.enforce(v, iw, lc_add(lc_const(1), lc_scale(z, R - 1)))
        self.enforce(v, z, {})
        return z

    def assert_notlow(self, p):
        q = p
        for _ in range(3):
            q = self.edwards_add(q, q)
        zx = self.is_zero(q[0])
        zy = self.is_zero(lc_add(q[1], lc_const(R - 1)))
        self.enforce(zx, zy, {})

    def mulfix(self, bits: list):
        """bits * BASE via 2-bit fixed windows; table points are compile-time
        constants so the window selection is purely linear."""
        acc = (lc_const(ec.IDENTITY[0]), lc_const(ec.IDENTITY[1]))
        i = 0
        while i < len(bits):
            if i + 1 < len(bits):
                table = [ec.mul(ec.BASE, j << i) for j in range(4)]
                b0, b1 = bits[i], bits[i + 1]
                s = self.mul(b0, b1)
                qx = lc_const(table[0][0])
                qx = lc_add(qx, lc_scale(b0, (table[1][0] - table[0][0]) % R))
                qx = lc_add(qx, lc_scale(b1, (table[2][0] - table[0][0]) % R))
                qx = lc_add(qx, lc_scale(
                    s, (table[3][0] - table[2][0] - table[1][0] + table[0][0]) % R))
                qy = lc_const(table[0][1])
                qy = lc_add(qy, lc_scale(b0, (table[1][1] - table[0][1]) % R))
                qy = lc_add(qy, lc_scale(b1, (table[2][1] - table[0][1]) % R))
                qy = lc_add(qy, lc_scale(
                    s, (table[3][1] - table[2][1] - table[1][1] + table[0][1]) % R))
                i += 2
            else:
                pt = ec.mul(ec.BASE, 1 << i)
                b = bits[i]
                qx = lc_scale(b, pt[0])
                qy = lc_add(lc_const(1), lc_scale(b, (pt[1] - 1) % R))
                i += 1
            acc = self.edwards_add(acc, (qx, qy))
        return acc

    def mulvar(self, p, bits: list):
        acc = (lc_const(ec.IDENTITY[0]), lc_const(ec.IDENTITY[1]))
        for b in reversed(bits):
            acc = self.edwards_add(acc, acc)
            qx = self.mul(b, p[0])
            by = self.mul(b, p[1])
            qy = lc_add(lc_add(lc_const(1), lc_scale(b, R - 1)), by)
            acc = self.edwards_add(acc, (qx, qy))
        return acc

    def hash(self, atoms: list, params: PoseidonParams):
        width = params.width
        rate = width - 1
        state = [lc_const(len(atoms) % R)] + [lc_const(0)] * rate
        for start in range(0, len(atoms), rate):
            chunk = atoms[start:start + rate]
            for i, a in enumerate(chunk):
                state[1 + i] = lc_add(state[1 + i], a)
            state = self._permute(state, params)
        return state[1]

    def _permute(self, state, params: PoseidonParams):
        t = params.width
        rf, rp = params.full_rounds, params.partial_rounds
        half = rf // 2
        consts = params.round_constants
        mds = params.mds
        s = list(state)
        for rnd in range(rf + rp):
            off = rnd * t
            s = [lc_add(x, lc_const(consts[off + i])) for i, x in enumerate(s)]
            sbox_lanes = t if (rnd < half or rnd >= half + rp) else 1
            for i in range(sbox_lanes):
                x2 = self.mul(s[i], s[i])
                x4 = self.mul(x2, x2)
                s[i] = self.mul(x4, s[i])
            mixed = []
            for i in range(t):
                acc: dict = {}
                for j in range(t):
                    acc = lc_add(acc, lc_scale(s[j], mds[i][j]))
                mixed.append(acc)
            s = mixed
        return s


def _veval(lc_dict: dict, values) -> int:
    total = 0
    for idx, coeff in lc_dict.items():
        total += coeff * values[idx]
    return total % R


@dataclass
class CompiledCircuit:
    program: BoilerplateProgram
    cs: ConstraintSystem
    param_wires: dict            # name -> wire index or (x, y) pair
    assignments: list = field(repr=False)
    hash_params: PoseidonParams | None = field(default=None, repr=False)

    def compute_witness(self, **params) -> list:
        """Fill parameter wires and replay assignment hints."""
        values = [0] * self.cs.num_vars
        values[0] = 1
        expected = set(self.param_wires)
        given = set(params)
        if expected != given:
            raise SchemaMismatch(
                "parameters %s expected, got %s" % (sorted(expected), sorted(given))
            )
        for name, wires in self.param_wires.items():
            v = params[name]
            if isinstance(wires, tuple):
                values[wires[0]], values[wires[1]] = v[0] % R, v[1] % R
            else:
                values[wires] = v % R
        for idx, fn in self.assignments:
            values[idx] = fn(values)
        return values


def compile_program(program: BoilerplateProgram) -> CompiledCircuit:
    """Deterministically lower a program to R1CS.

    Raises ParseError on bad source and SchemaMismatch when the source's
    parameter declarations disagree with ``program.parameter_schema``.
    """
    stmts = _parse(program.source_text)
    declared = tuple(
        tuple(st.args[:3]) for st in stmts if st.op == "param"
    )
    if declared != program.parameter_schema:
        raise SchemaMismatch(
            "declared parameters %r do not match schema %r"
            % (declared, program.parameter_schema)
        )

    b = _Builder()
    env: dict[str, tuple] = {}
    consts: dict[str, int] = {}
    param_wires: dict = {}
    hash_params = None

    meta = {st.args[0]: st.args[1] for st in stmts if st.op == "meta"}
    if any(st.op == "hash" for st in stmts):
        rf = meta.get("hash_full_rounds", 8)
        rp = meta.get("hash_partial_rounds", 60)
        hash_params = _poseidon_cached(rf, rp)

    # public parameter wires first, in declaration order, then private ones
    params = [st for st in stmts if st.op == "param"]
    num_public = 0
    for visibility in ("public", "private"):
        for st in params:
            name, vis, typ, width = st.args
            if vis != visibility:
                continue
            if typ == "point":
                x = b.new_wire()
                y = b.new_wire()
                env[name] = ("point", ({x: 1}, {y: 1}))
                param_wires[name] = (x, y)
                if vis == "public":
                    num_public += 2
            else:
                w = b.new_wire()
                env[name] = ("atom", {w: 1})
                param_wires[name] = w
                if vis == "public":
                    num_public += 1

    def atom(token: str, st: _Stmt) -> dict:
        if token.isdigit():
            return lc_const(int(token))
        if token in consts:
            return lc_const(consts[token])
        base, dot, coord = token.partition(".")
        if base in env:
            kind, val = env[base]
            if dot:
                if kind != "point" or coord not in ("x", "y"):
                    raise ParseError(st.line, 1, "bad coordinate access %r" % token)
                return val[0] if coord == "x" else val[1]
            if kind != "atom":
                raise ParseError(st.line, 1, "%r is not a field value" % token)
            return val
        raise ParseError(st.line, 1, "unknown name %r" % token)

    def point(token: str, st: _Stmt):
        kind, val = env.get(token, (None, None))
        if kind != "point":
            raise ParseError(st.line, 1, "%r is not a point" % token)
        return val

    def bitvec(token: str, st: _Stmt):
        kind, val = env.get(token, (None, None))
        if kind != "bits":
            raise ParseError(st.line, 1, "%r is not a bit vector" % token)
        return val

    def bind(st: _Stmt, kind: str, value):
        if st.dest in env or st.dest in consts or st.dest in param_wires:
            raise ParseError(st.line, 1, "redefinition of %r" % st.dest)
        env[st.dest] = (kind, value)

    for st in stmts:
        op = st.op
        if op in ("program", "meta", "param"):
            continue
        if op == "const":
            consts[st.args[0]] = st.args[1] % R
        elif op == "hash":
            bind(st, "atom", b.hash([atom(a, st) for a in st.args], hash_params))
        elif op == "bits":
            if len(st.args) != 2 or not st.args[1].isdigit():
                raise ParseError(st.line, 1, "bits(x, n)")
            n = int(st.args[1])
            if n >= FIELD_BITS:
                raise ParseError(st.line, 1, "use canonbits for full-width decomposition")
            bind(st, "bits", b.bits(atom(st.args[0], st), n))
        elif op == "canonbits":
            bind(st, "bits", b.canonbits(atom(st.args[0], st)))
        elif op == "slice":
            lo, hi = int(st.args[1]), int(st.args[2])
            vec = bitvec(st.args[0], st)
            if not (0 <= lo < hi <= len(vec)):
                raise ParseError(st.line, 1, "slice bounds out of range")
            bind(st, "bits", vec[lo:hi])
        elif op == "mulfix":
            bind(st, "point", b.mulfix(bitvec(st.args[0], st)))
        elif op == "mulvar":
            bind(st, "point", b.mulvar(point(st.args[0], st), bitvec(st.args[1], st)))
        elif op == "add":
            bind(st, "point", b.edwards_add(point(st.args[0], st), point(st.args[1], st)))
        elif op == "mul":
            bind(st, "atom", b.mul(atom(st.args[0], st), atom(st.args[1], st)))
        elif op == "assert_oncurve":
            b.assert_oncurve(point(st.args[0], st))
        elif op == "assert_notlow":
            b.assert_notlow(point(st.args[0], st))
        elif op == "assert_eq":
            a0, a1 = st.args
            if a0 in env and env[a0][0] == "point":
                p0, p1 = point(a0, st), point(a1, st)
                b.assert_eq(p0[0], p1[0])
                b.assert_eq(p0[1], p1[1])
            else:
                b.assert_eq(atom(a0, st), atom(a1, st))
        elif op == "assert_mul":
            b.enforce(atom(st.args[0], st), atom(st.args[1], st), atom(st.args[2], st))
        else:  # pragma: no cover - parser rejects unknown ops
            raise ParseError(st.line, 1, "unhandled op %r" % op)

    cs = ConstraintSystem(
        num_vars=b.nvars,
        num_public=num_public,
        rows=tuple((freeze(a), freeze(bb), freeze(c)) for a, bb, c in b.rows),
    )
    return CompiledCircuit(program, cs, param_wires, b.assignments, hash_params)


@lru_cache(maxsize=8)
def _poseidon_cached(rf: int, rp: int) -> PoseidonParams:
    return PoseidonParams.generate(full_rounds=rf, partial_rounds=rp)


_COMPILE_CACHE: dict[bytes, CompiledCircuit] = {}


def compile_cached(program: BoilerplateProgram) -> CompiledCircuit:
    key = program.program_digest
    if key not in _COMPILE_CACHE:
        _COMPILE_CACHE[key] = compile_program(program)
    return _COMPILE_CACHE[key]


# ---------------------------------------------------------------------------
# The membership program family
# ---------------------------------------------------------------------------

def membership_source(scheme: SchemeParams = CANONICAL_SCHEME,
                      hash_partial_rounds: int = 60,
                      name: str = "membership",
                      version: int = 1) -> str:
    """Render the signature-verification program for a parameter profile."""
    lines = [
        "program %s %d" % (name, version),
        "",
        "# Scheme widths (signer side mirrors these; see meta keys below).",
        "meta sk_bits %d" % scheme.sk_bits,
        "meta nonce_bits %d" % scheme.nonce_bits,
        "meta hash_bits %d" % scheme.hash_bits,
        "meta s_bits %d" % scheme.s_bits,
        "meta hash_full_rounds 8",
        "meta hash_partial_rounds %d" % hash_partial_rounds,
        "",
        "param pk public point",
        "param R private point",
        "param S private scalar width %d" % scheme.s_bits,
        "param M private field",
        "",
        "assert_oncurve pk",
        "assert_oncurve R",
        "assert_notlow R",
        "",
        "h = hash(R.x, R.y, pk.x, pk.y, M)",
        "hb = canonbits(h)",
    ]
    if scheme.hash_bits < FIELD_BITS:
        lines.append("ht = slice(hb, 0, %d)" % scheme.hash_bits)
        hash_bits_name = "ht"
    else:
        hash_bits_name = "hb"
    lines += [
        "sb = bits(S, %d)" % scheme.s_bits,
        "",
        "lhs = mulfix(sb)",
        "t = mulvar(pk, %s)" % hash_bits_name,
        "rhs = add(R, t)",
        "assert_eq lhs rhs",
        "",
    ]
    return "\n".join(lines)


def scheme_from_program(program: BoilerplateProgram) -> SchemeParams:
    return SchemeParams(
        sk_bits=program.meta_int("sk_bits"),
        nonce_bits=program.meta_int("nonce_bits"),
        hash_bits=program.meta_int("hash_bits"),
        s_bits=program.meta_int("s_bits"),
    )


def canonical_membership_program() -> BoilerplateProgram:
    text = resources.files("expresso.data").joinpath("membership_v1.prog").read_text()
    return BoilerplateProgram.from_source(text)


def build_witness(circuit: CompiledCircuit, pk, credential: ClientCredential) -> list:
    """Witness for the membership circuit from an issued credential.

    Fails fast (InvalidCredential) when the credential does not verify
    natively, long before any expensive proving work.
    """
    require_membership_schema(circuit.program)
    scheme = scheme_from_program(circuit.program)
    if credential.idp_credential_pk != pk:
        raise InvalidCredential("credential was issued under a different key")
    if not verify_native(pk, credential.client_id, credential.signature,
                         scheme, circuit.hash_params):
        raise InvalidCredential("signature does not verify against the key")
    sig = credential.signature
    return circuit.compute_witness(
        pk=pk, R=sig.R, S=sig.S, M=credential.client_id
    )


def public_inputs_for(pk) -> list:
    """The public-input vector of a membership proof: the key coordinates."""
    return [pk[0], pk[1]]
