"""Shared fixtures.

The expensive piece is the reduced-profile setup: phase-1 powers plus the
honest (group-iNTT) circuit preparation, about two minutes of group
arithmetic.  It is immutable, so one session-scoped copy feeds every
module that needs real artifacts; each module then builds its own cheap
registry/stack on top so state never leaks between modules.
"""

import time
from types import SimpleNamespace

import pytest

from expresso import ceremony as cer
from expresso import program as prog
from expresso.harness import PROFILES, build_stack

REDUCED = PROFILES["reduced"]


@pytest.fixture(scope="session")
def reduced_setup():
    t0 = time.perf_counter()
    program = REDUCED.program()
    circuit = prog.compile_cached(program)
    phase1 = cer.phase1_generate(REDUCED.phase1_degree, b"suite-phase1")
    prep = cer.prepare_circuit(phase1, circuit.cs)
    build_seconds = time.perf_counter() - t0
    return SimpleNamespace(
        profile=REDUCED,
        program=program,
        circuit=circuit,
        phase1=phase1,
        prep=prep,
        build_seconds=build_seconds,
    )


def make_stack(reduced_setup, **kwargs):
    kwargs.setdefault("pool", 2)
    kwargs.setdefault("low_watermark", 1)
    kwargs.setdefault("entropy_seed", b"suite-entropy")
    return build_stack(
        REDUCED,
        prebuilt=(reduced_setup.phase1, reduced_setup.prep),
        **kwargs,
    )


@pytest.fixture(scope="module")
def stack(reduced_setup):
    s = make_stack(reduced_setup)
    yield s
    s.stop()
