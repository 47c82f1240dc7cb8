"""Boolean circuits and brute-force counting oracles.

Input bit ``xJ`` of assignment ``y`` (an integer in ``[0, 2**n)``) is bit
``J-1`` of ``y``.  All counting is exhaustive over the truth table; that is
the point, the counts here are the ground truth everything else is
checked against.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "ENUMERATION_BOUND",
    "Gate",
    "BooleanCircuit",
    "CountingInstance",
    "CircuitError",
    "CircuitSyntaxError",
    "DanglingReference",
    "ArityError",
    "BoundExceeded",
    "TieNotAllowed",
    "parse_circuit",
    "serialize_circuit",
    "truth_table",
    "evaluate",
    "count_accepting",
    "membership",
    "negate",
    "constant_circuit",
    "threshold_circuit",
    "random_circuit",
    "shift_for_strict_majority",
]

ENUMERATION_BOUND = 20

ARITY = {"AND": 2, "OR": 2, "XOR": 2, "NOT": 1, "CONST0": 0, "CONST1": 0}


class CircuitError(ValueError):
    pass


class CircuitSyntaxError(CircuitError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class DanglingReference(CircuitError):
    pass


class ArityError(CircuitError):
    pass


class BoundExceeded(ValueError):
    """Raised when an exhaustive enumeration would exceed its configured size."""


class TieNotAllowed(ValueError):
    """Majority instance accepts exactly half its certificates.

    Apply :func:`shift_for_strict_majority` to obtain an equivalent
    instance that never ties.
    """


@dataclass(frozen=True)
class Gate:
    id: int
    kind: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class BooleanCircuit:
    n_inputs: int
    gates: tuple[Gate, ...]
    output: int

    def __post_init__(self):
        if self.n_inputs < 0:
            raise CircuitError("negative input count")
        seen: set[int] = set()
        last = 0
        for g in self.gates:
            if g.kind not in ARITY:
                raise CircuitError(f"unknown gate kind {g.kind!r}")
            if len(g.args) != ARITY[g.kind]:
                raise ArityError(f"g{g.id}: {g.kind} takes {ARITY[g.kind]} operand(s), got {len(g.args)}")
            if g.id <= last:
                raise CircuitError(f"gate ids must be increasing (g{g.id} after g{last})")
            for a in g.args:
                self._check_ref(a, seen, g.id)
            seen.add(g.id)
            last = g.id
        if self.output not in seen:
            raise DanglingReference(f"output references undefined g{self.output}")

    def _check_ref(self, ref: str, seen: set[int], gid: int) -> None:
        kind, idx = ref[0], int(ref[1:])
        if kind == "x":
            if not 1 <= idx <= self.n_inputs:
                raise DanglingReference(f"g{gid} references undefined input {ref}")
        elif kind == "g":
            if idx not in seen:
                raise DanglingReference(f"g{gid} references undefined gate {ref}")
        else:
            raise CircuitError(f"bad operand {ref!r}")

    def __str__(self):
        return serialize_circuit(self)


def parse_circuit(text: str) -> BooleanCircuit:
    """Parse the line-oriented circuit format.

    ``inputs N``, then gate lines ``gID = KIND arg1 [arg2]``, then
    ``output gID``.  ``#`` starts a comment.
    """
    n_inputs = None
    gates: list[Gate] = []
    output = None
    defined: set[int] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if output is not None:
            raise CircuitSyntaxError(lineno, "content after output line")
        toks = line.split()
        if toks[0] == "inputs":
            if n_inputs is not None or len(toks) != 2 or not toks[1].isdigit():
                raise CircuitSyntaxError(lineno, "expected 'inputs N' once")
            n_inputs = int(toks[1])
            continue
        if n_inputs is None:
            raise CircuitSyntaxError(lineno, "missing 'inputs N' header")
        if toks[0] == "output":
            if len(toks) != 2 or not _is_ref(toks[1], "g"):
                raise CircuitSyntaxError(lineno, "expected 'output gID'")
            output = int(toks[1][1:])
            if output not in defined:
                raise DanglingReference(f"line {lineno}: output references undefined {toks[1]}")
            continue
        if len(toks) < 3 or toks[1] != "=" or not _is_ref(toks[0], "g"):
            raise CircuitSyntaxError(lineno, f"cannot parse gate line {line!r}")
        gid, kind, args = int(toks[0][1:]), toks[2], tuple(toks[3:])
        if kind not in ARITY:
            raise CircuitSyntaxError(lineno, f"unknown gate kind {kind!r}")
        if len(args) != ARITY[kind]:
            raise ArityError(f"line {lineno}: {kind} takes {ARITY[kind]} operand(s), got {len(args)}")
        for a in args:
            if _is_ref(a, "x"):
                if not 1 <= int(a[1:]) <= n_inputs:
                    raise DanglingReference(f"line {lineno}: undefined input {a}")
            elif _is_ref(a, "g"):
                if int(a[1:]) not in defined:
                    raise DanglingReference(f"line {lineno}: undefined gate {a}")
            else:
                raise CircuitSyntaxError(lineno, f"bad operand {a!r}")
        if gates and gid <= gates[-1].id:
            raise CircuitSyntaxError(lineno, f"gate ids must be increasing (g{gid} after g{gates[-1].id})")
        gates.append(Gate(gid, kind, args))
        defined.add(gid)
    if n_inputs is None:
        raise CircuitSyntaxError(0, "empty circuit")
    if output is None:
        raise CircuitSyntaxError(lineno if text else 0, "missing 'output gID' line")
    return BooleanCircuit(n_inputs, tuple(gates), output)


def _is_ref(tok: str, prefix: str) -> bool:
    return len(tok) > 1 and tok[0] == prefix and tok[1:].isdigit() and tok[1] != "0"


def serialize_circuit(c: BooleanCircuit) -> str:
    lines = [f"inputs {c.n_inputs}"]
    lines += [" ".join([f"g{g.id}", "=", g.kind, *g.args]) for g in c.gates]
    lines.append(f"output g{c.output}")
    return "\n".join(lines) + "\n"


def _check_bound(n: int, bound: int) -> None:
    if n > bound:
        raise BoundExceeded(f"{n} inputs exceeds enumeration bound {bound}")


@lru_cache(maxsize=4096)
def _truth_table(c: BooleanCircuit) -> np.ndarray:
    ys = np.arange(1 << c.n_inputs, dtype=np.int64)
    vals: dict[str, np.ndarray] = {f"x{j}": ((ys >> (j - 1)) & 1).astype(bool) for j in range(1, c.n_inputs + 1)}
    for g in c.gates:
        a = [vals[r] for r in g.args]
        if g.kind == "AND":
            v = a[0] & a[1]
        elif g.kind == "OR":
            v = a[0] | a[1]
        elif g.kind == "XOR":
            v = a[0] ^ a[1]
        elif g.kind == "NOT":
            v = ~a[0]
        elif g.kind == "CONST0":
            v = np.zeros(len(ys), dtype=bool)
        else:
            v = np.ones(len(ys), dtype=bool)
        vals[f"g{g.id}"] = v
    out = vals[f"g{c.output}"]
    out.setflags(write=False)
    return out


def truth_table(c: BooleanCircuit, bound: int = ENUMERATION_BOUND) -> np.ndarray:
    """Boolean array of length ``2**n``; entry ``y`` is the output on assignment ``y``."""
    _check_bound(c.n_inputs, bound)
    return _truth_table(c)


def evaluate(c: BooleanCircuit, y: int) -> int:
    vals: dict[str, int] = {f"x{j}": (y >> (j - 1)) & 1 for j in range(1, c.n_inputs + 1)}
    for g in c.gates:
        a = [vals[r] for r in g.args]
        if g.kind == "AND":
            v = a[0] & a[1]
        elif g.kind == "OR":
            v = a[0] | a[1]
        elif g.kind == "XOR":
            v = a[0] ^ a[1]
        elif g.kind == "NOT":
            v = 1 - a[0]
        else:
            v = int(g.kind == "CONST1")
        vals[f"g{g.id}"] = v
    return vals[f"g{c.output}"]


def count_accepting(c: BooleanCircuit, bound: int = ENUMERATION_BOUND) -> int:
    return int(np.count_nonzero(truth_table(c, bound)))


@dataclass(frozen=True)
class CountingInstance:
    circuit: BooleanCircuit
    mode: str = "majority"
    bound: int = ENUMERATION_BOUND

    def __post_init__(self):
        if self.mode not in ("majority", "parity", "count"):
            raise ValueError(f"unknown mode {self.mode!r}")
        _check_bound(self.circuit.n_inputs, self.bound)

    @property
    def n(self) -> int:
        return self.circuit.n_inputs


def membership(inst: CountingInstance) -> int:
    """Ground-truth answer: majority bit, parity bit, or the count itself."""
    k = count_accepting(inst.circuit, inst.bound)
    n = inst.circuit.n_inputs
    if inst.mode == "count":
        return k
    if inst.mode == "parity":
        return k & 1
    if 2 * k == 1 << n:
        raise TieNotAllowed(f"exactly half of the 2^{n} certificates accept")
    return int(2 * k > 1 << n)


# -- builders ----------------------------------------------------------------


def _next_id(c: BooleanCircuit) -> int:
    return c.gates[-1].id + 1 if c.gates else 1


def negate(c: BooleanCircuit) -> BooleanCircuit:
    g = Gate(_next_id(c), "NOT", (f"g{c.output}",))
    return BooleanCircuit(c.n_inputs, c.gates + (g,), g.id)


def constant_circuit(n: int, value: int) -> BooleanCircuit:
    return BooleanCircuit(n, (Gate(1, "CONST1" if value else "CONST0"),), 1)


def threshold_circuit(n: int, k: int) -> BooleanCircuit:
    """Circuit on ``n`` inputs accepting exactly the assignments ``y < k``."""
    if not 0 <= k <= 1 << n:
        raise ValueError("k out of range")
    if k == 0 or k == 1 << n:
        return constant_circuit(n, int(k > 0))
    gates = [Gate(1, "CONST0")]
    lt = "g1"
    for j in range(1, n + 1):
        gid = len(gates) + 1
        gates.append(Gate(gid, "NOT", (f"x{j}",)))
        op = "OR" if (k >> (j - 1)) & 1 else "AND"
        gates.append(Gate(gid + 1, op, (f"g{gid}", lt)))
        lt = f"g{gid + 1}"
    return BooleanCircuit(n, tuple(gates), len(gates))


def random_circuit(rng: random.Random, n: int, n_gates: int) -> BooleanCircuit:
    kinds = ["AND", "OR", "XOR", "NOT", "AND", "OR"]
    refs = [f"x{j}" for j in range(1, n + 1)]
    gates = []
    for gid in range(1, n_gates + 1):
        kind = rng.choice(kinds) if refs else "CONST1"
        args = tuple(rng.choice(refs) for _ in range(ARITY[kind]))
        gates.append(Gate(gid, kind, args))
        refs.append(f"g{gid}")
    return BooleanCircuit(n, tuple(gates), n_gates)


def shift_for_strict_majority(c: BooleanCircuit) -> BooleanCircuit:
    """Equivalent majority instance on ``n + 2`` inputs that never ties.

    With the two new bits ``(z1, z2)``: ``z1 = 0`` copies ``c`` twice,
    ``(1, 0)`` accepts everything and ``(1, 1)`` accepts only ``y = 0``.
    The new count is ``2k + 2**n + 1``: odd, hence never half, and above
    half exactly when ``k >= 2**(n-1)``.
    """
    n = c.n_inputs
    if n < 1:
        raise ValueError("shift needs at least one input")
    z1, z2 = f"x{n + 1}", f"x{n + 2}"
    gates = list(c.gates)
    nid = _next_id(c)

    def add(kind, *args):
        nonlocal nid
        gates.append(Gate(nid, kind, args))
        nid += 1
        return f"g{nid - 1}"

    nz1 = add("NOT", z1)
    nz2 = add("NOT", z2)
    copy = add("AND", nz1, f"g{c.output}")
    all_ones = add("AND", z1, nz2)
    zero = add("NOT", "x1")
    for j in range(2, n + 1):
        zero = add("AND", zero, add("NOT", f"x{j}"))
    single = add("AND", add("AND", z1, z2), zero)
    out = add("OR", add("OR", copy, all_ones), single)
    return BooleanCircuit(n + 2, tuple(gates), int(out[1:]))
