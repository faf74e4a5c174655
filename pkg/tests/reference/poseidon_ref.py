"""Independent reference implementation of the sponge hash.

Written separately from the production module on purpose: it reads the
committed parameter file directly and evaluates the permutation the slow,
obvious way (explicit matrix-vector product, pow() for the s-box).  Test
vectors frozen into test_poseidon.py were produced by this code.
"""

import json
import pathlib

_DATA = pathlib.Path(__file__).resolve().parents[2] / "src" / "expresso" / "data" / "poseidon_w6.json"

with open(_DATA) as _fh:
    _params = json.load(_fh)

MODULUS = int(_params["field_modulus"])
WIDTH = _params["width"]
FULL = _params["full_rounds"]
PARTIAL = _params["partial_rounds"]
CONSTANTS = [int(c) for c in _params["round_constants"]]
MDS = [[int(c) for c in row] for row in _params["mds"]]


def permutation(state):
    state = list(state)
    for rnd in range(FULL + PARTIAL):
        for i in range(WIDTH):
            state[i] = (state[i] + CONSTANTS[rnd * WIDTH + i]) % MODULUS
        if FULL // 2 <= rnd < FULL // 2 + PARTIAL:
            state[0] = pow(state[0], 5, MODULUS)
        else:
            state = [pow(x, 5, MODULUS) for x in state]
        state = [
            sum(MDS[i][j] * state[j] for j in range(WIDTH)) % MODULUS
            for i in range(WIDTH)
        ]
    return state


def sponge_hash(inputs):
    if not inputs:
        raise ValueError("need at least one input")
    rate = WIDTH - 1
    state = [len(inputs) % MODULUS] + [0] * rate
    for start in range(0, len(inputs), rate):
        for i, v in enumerate(inputs[start:start + rate]):
            state[1 + i] = (state[1 + i] + v) % MODULUS
        state = permutation(state)
    return state[1]
