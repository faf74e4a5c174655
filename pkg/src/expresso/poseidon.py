"""Algebraic sponge hash over the circuit field.

A Poseidon-style permutation with width 6 (rate 5, capacity 1), quintic
s-box, 8 full rounds and a configurable number of partial rounds.  Keeping
the width fixed at 6 lets the signature circuit hash its five inputs
(R.x, R.y, pk.x, pk.y, M) in a single permutation call.

Round constants are rejection-sampled from a SHA-256 counter stream with a
fixed label, and the mixing matrix is the Cauchy matrix over x_i = i,
y_j = t + j.  The canonical parameter set is also committed to the repo as
a JSON data file; a test pins the generated values to the committed ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .fields import R, HashDRBG

WIDTH = 6
RATE = WIDTH - 1
FULL_ROUNDS = 8
PARTIAL_ROUNDS = 60  # canonical instance

_SEED_LABEL = b"expresso-poseidon-w%d"


@dataclass(frozen=True)
class PoseidonParams:
    width: int
    full_rounds: int
    partial_rounds: int
    round_constants: tuple  # flat, width * (full+partial) entries
    mds: tuple  # width x width

    @classmethod
    def generate(cls, width: int = WIDTH, full_rounds: int = FULL_ROUNDS,
                 partial_rounds: int = PARTIAL_ROUNDS) -> "PoseidonParams":
        label = _SEED_LABEL % width
        drbg = HashDRBG(label + b"-rf%d-rp%d" % (full_rounds, partial_rounds),
                        domain=b"round-constants")
        n = width * (full_rounds + partial_rounds)
        constants = tuple(drbg.read_scalar(R) for _ in range(n))
        mds = tuple(
            tuple(pow(i + width + j, R - 2, R) for j in range(width))
            for i in range(width)
        )
        return cls(width, full_rounds, partial_rounds, constants, mds)

    def to_json(self) -> str:
        return json.dumps(
            {
                "field_modulus": str(R),
                "width": self.width,
                "full_rounds": self.full_rounds,
                "partial_rounds": self.partial_rounds,
                "round_constants": [str(c) for c in self.round_constants],
                "mds": [[str(c) for c in row] for row in self.mds],
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "PoseidonParams":
        obj = json.loads(text)
        if int(obj["field_modulus"]) != R:
            raise ValueError("parameter file is for a different field")
        return cls(
            obj["width"],
            obj["full_rounds"],
            obj["partial_rounds"],
            tuple(int(c) for c in obj["round_constants"]),
            tuple(tuple(int(c) for c in row) for row in obj["mds"]),
        )


def _pow5(x: int) -> int:
    x2 = x * x % R
    return x2 * x2 % R * x % R


def permute(state, params: PoseidonParams):
    """Apply the permutation to a list of ``width`` field elements."""
    t = params.width
    if len(state) != t:
        raise ValueError("state width mismatch")
    rf, rp = params.full_rounds, params.partial_rounds
    half = rf // 2
    consts = params.round_constants
    mds = params.mds
    s = list(state)
    for rnd in range(rf + rp):
        off = rnd * t
        for i in range(t):
            s[i] = (s[i] + consts[off + i]) % R
        if rnd < half or rnd >= half + rp:
            for i in range(t):
                s[i] = _pow5(s[i])
        else:
            s[0] = _pow5(s[0])
        s = [sum(mds[i][j] * s[j] for j in range(t)) % R for i in range(t)]
    return s


_CANONICAL: PoseidonParams | None = None


def canonical_params() -> PoseidonParams:
    global _CANONICAL
    if _CANONICAL is None:
        text = resources.files("expresso.data").joinpath("poseidon_w6.json").read_text()
        _CANONICAL = PoseidonParams.from_json(text)
    return _CANONICAL


def circuit_hash(inputs, params: PoseidonParams | None = None) -> int:
    """Sponge hash of a non-empty list of field elements to one element.

    The capacity lane is initialised with the input count, which
    domain-separates lists of different lengths.
    """
    if not inputs:
        raise ValueError("circuit_hash requires at least one input")
    for v in inputs:
        if not (0 <= v < R):
            raise ValueError("input not a canonical field element")
    if params is None:
        params = canonical_params()
    rate = params.width - 1
    state = [len(inputs) % R] + [0] * rate
    for start in range(0, len(inputs), rate):
        chunk = inputs[start:start + rate]
        for i, v in enumerate(chunk):
            state[1 + i] = (state[1 + i] + v) % R
        state = permute(state, params)
    return state[1]
