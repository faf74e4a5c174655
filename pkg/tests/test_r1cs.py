import pytest

from expresso.fields import R
from expresso.r1cs import (
    ConstraintSystem,
    LengthMismatch,
    eval_lc,
    freeze,
    lc,
    lc_add,
    lc_const,
    lc_scale,
)


def simple_system():
    # w = [1, pub, a, b]; constraints: a*b = pub, (a+b)*1 = 7
    rows = (
        (freeze(lc((2, 1))), freeze(lc((3, 1))), freeze(lc((1, 1)))),
        (freeze(lc((2, 1), (3, 1))), freeze(lc_const(1)), freeze(lc_const(7))),
    )
    return ConstraintSystem(num_vars=4, num_public=1, rows=rows)


def test_lc_algebra():
    a = lc((1, 5), (2, 3))
    b = lc((1, R - 5))
    assert lc_add(a, b) == {2: 3}
    assert lc_scale(a, 0) == {}
    assert lc_scale(a, 2) == {1: 10, 2: 6}
    assert lc_const(0) == {}
    assert eval_lc(freeze(a), [0, 2, 3]) == (5 * 2 + 3 * 3) % R


def test_evaluate():
    cs = simple_system()
    assert cs.evaluate([1, 12, 3, 4])
    assert not cs.evaluate([1, 12, 3, 5])
    assert cs.first_violation([1, 12, 3, 4]) is None
    assert cs.first_violation([1, 13, 3, 4]) == 0
    assert cs.first_violation([1, 8, 2, 4]) == 1
    assert cs.first_violation([0, 12, 3, 4]) == -1  # broken constant wire


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        simple_system().evaluate([1, 2, 3])


def test_export_round_trip_and_digest():
    cs = simple_system()
    data = cs.to_bytes()
    assert data[:4] == b"XR1C"
    assert cs.to_bytes() == data  # stable
    assert cs.digest() == ConstraintSystem(cs.num_vars, cs.num_public, cs.rows).digest()
    other = ConstraintSystem(5, 1, cs.rows)
    assert other.digest() != cs.digest()
