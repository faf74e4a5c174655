"""Rank-1 constraint systems.

A constraint is a triple of linear combinations (A, B, C) over the witness
vector w (with w[0] == 1) such that <A,w> * <B,w> == <C,w>.  The witness
layout is fixed: [1, public inputs..., private wires...].

Linear combinations are built as {index: coeff} dicts and frozen into
sorted tuples when the system is sealed, which makes compilation output
bit-reproducible and gives the export format a canonical form.
"""

from __future__ import annotations

from dataclasses import dataclass

from .encoding import fr_bytes, sha256, u32
from .fields import R


class LengthMismatch(ValueError):
    """Witness length does not match the constraint system."""


Term = tuple[int, int]  # (wire index, coefficient)
Row = tuple[Term, ...]


def lc(*terms) -> dict:
    """Build a linear combination dict from (index, coeff) pairs."""
    out: dict[int, int] = {}
    for idx, coeff in terms:
        c = (out.get(idx, 0) + coeff) % R
        if c:
            out[idx] = c
        elif idx in out:
            del out[idx]
    return out


def lc_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for idx, coeff in b.items():
        c = (out.get(idx, 0) + coeff) % R
        if c:
            out[idx] = c
        elif idx in out:
            del out[idx]
    return out


def lc_scale(a: dict, k: int) -> dict:
    k %= R
    if k == 0:
        return {}
    return {idx: coeff * k % R for idx, coeff in a.items()}


def lc_const(value: int) -> dict:
    value %= R
    return {0: value} if value else {}


def freeze(a: dict) -> Row:
    return tuple(sorted(a.items()))


def eval_lc(row, witness) -> int:
    total = 0
    for idx, coeff in row:
        total += coeff * witness[idx]
    return total % R


@dataclass(frozen=True)
class ConstraintSystem:
    num_vars: int          # total wires including the constant-one wire
    num_public: int        # public input wires (excluding the constant)
    rows: tuple            # tuple of (A, B, C) frozen rows

    @property
    def num_constraints(self) -> int:
        return len(self.rows)

    def evaluate(self, witness) -> bool:
        return self.first_violation(witness) is None

    def first_violation(self, witness):
        """Index of the first unsatisfied constraint, or None."""
        if len(witness) != self.num_vars:
            raise LengthMismatch(
                "witness has %d entries, system has %d wires"
                % (len(witness), self.num_vars)
            )
        if witness[0] != 1:
            return -1  # the constant wire itself is wrong
        for i, (a, b, c) in enumerate(self.rows):
            if eval_lc(a, witness) * eval_lc(b, witness) % R != eval_lc(c, witness):
                return i
        return None

    def to_bytes(self) -> bytes:
        """Canonical export: counts, then per-constraint sparse triples."""
        out = [b"XR1C", u32(1), u32(self.num_vars), u32(self.num_public),
               u32(len(self.rows))]
        for triple in self.rows:
            for row in triple:
                out.append(u32(len(row)))
                for idx, coeff in row:
                    out.append(u32(idx))
                    out.append(fr_bytes(coeff))
        return b"".join(out)

    def digest(self) -> bytes:
        return sha256(self.to_bytes())
