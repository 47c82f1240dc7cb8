"""Seeded circuit corpora with brute-force ground truth.

File format: entries separated by ``---`` lines; each entry is a header
line ``truth: count=K majority=M parity=P shifted=S`` followed by the
circuit text.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .circuits import (
    BooleanCircuit,
    CircuitSyntaxError,
    count_accepting,
    parse_circuit,
    random_circuit,
    serialize_circuit,
    shift_for_strict_majority,
)

__all__ = ["CorpusEntry", "generate_corpus", "write_corpus", "read_corpus", "read_instances"]


@dataclass(frozen=True)
class CorpusEntry:
    circuit: BooleanCircuit
    count: int
    majority: int
    parity: int
    shifted: bool = False

    @classmethod
    def of(cls, c: BooleanCircuit, shifted: bool = False) -> "CorpusEntry":
        k = count_accepting(c)
        n = c.n_inputs
        if 2 * k == 1 << n:
            raise ValueError("corpus entries must not tie")
        return cls(c, k, int(2 * k > 1 << n), k & 1, shifted)

    def header(self) -> str:
        return f"truth: count={self.count} majority={self.majority} parity={self.parity} shifted={int(self.shifted)}"


def generate_corpus(seed: int, count: int, max_n: int, min_n: int = 1) -> list[CorpusEntry]:
    """``count`` random circuits with ``min_n <= n <= max_n`` inputs and no majority ties.

    A draw that accepts exactly half its inputs is replaced by its
    two-bit shift when that still fits in ``max_n``, and redrawn otherwise.
    """
    if not 1 <= min_n <= max_n:
        raise ValueError("need 1 <= min_n <= max_n")
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n = rng.randint(min_n, max_n)
        c = random_circuit(rng, n, rng.randint(1, 2 * n + 2))
        if 2 * count_accepting(c) == 1 << n:
            if n + 2 > max_n:
                continue
            out.append(CorpusEntry.of(shift_for_strict_majority(c), shifted=True))
        else:
            out.append(CorpusEntry.of(c))
    return out


def write_corpus(entries) -> str:
    return "---\n".join(f"{e.header()}\n{serialize_circuit(e.circuit)}" for e in entries)


def read_corpus(text: str) -> list[CorpusEntry]:
    """Parse a corpus file; headers must match a recount."""
    entries = []
    for block in _blocks(text):
        lines = block.splitlines()
        head = lines[0].strip()
        if not head.startswith("truth:"):
            raise CircuitSyntaxError(1, "corpus entry must start with a 'truth:' line")
        fields = dict(kv.split("=", 1) for kv in head[len("truth:") :].split())
        c = parse_circuit("\n".join(lines[1:]))
        e = CorpusEntry.of(c, shifted=bool(int(fields.get("shifted", 0))))
        for key in ("count", "majority", "parity"):
            if key in fields and int(fields[key]) != getattr(e, key):
                raise ValueError(f"recorded {key}={fields[key]} disagrees with recount {getattr(e, key)}")
        entries.append(e)
    return entries


def read_instances(text: str) -> list[BooleanCircuit]:
    """Circuits from a corpus file or from one or more bare circuit texts.

    Ties are allowed here; callers decide what a tie means.
    """
    out = []
    for block in _blocks(text):
        lines = [ln for ln in block.splitlines() if not ln.strip().startswith("truth:")]
        out.append(parse_circuit("\n".join(lines)))
    return out


def _blocks(text: str) -> list[str]:
    blocks, cur = [], []
    for line in text.splitlines():
        if line.strip() == "---":
            blocks.append("\n".join(cur))
            cur = []
        else:
            cur.append(line)
    blocks.append("\n".join(cur))
    return [b for b in blocks if b.strip()]
