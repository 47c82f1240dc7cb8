"""Comparing expectations of two circuits and finding the best message by knockout."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .circuits import ENUMERATION_BOUND, BooleanCircuit, truth_table
from .dyadic import Dyadic
from .protocol import ProtocolSpec, reward_vector
from .protocols import one_bit_transform

__all__ = ["compare_bits_prob", "compare_expectations_prob", "knockout_argmax"]

_CHUNK = 1 << 12


def compare_bits_prob(bits0: np.ndarray, bits1: np.ndarray) -> Dyadic:
    """Acceptance probability of the two-sample comparison test.

    Draws ``r`` and ``r'`` uniformly, accepts if ``bits0[r] < bits1[r']``,
    rejects if greater and flips a fair coin on a tie.  Computed by
    enumerating every ``(r, r', coin)``; both lengths must be powers of two.
    """
    b0 = np.asarray(bits0, dtype=np.int8)
    b1 = np.asarray(bits1, dtype=np.int8)
    for b in (b0, b1):
        if len(b) & (len(b) - 1) or not len(b):
            raise ValueError("sample spaces must have power-of-two size")
        if b.min() < 0 or b.max() > 1:
            raise ValueError("inputs must be bits")
    accept = 0
    for lo in range(0, len(b0), _CHUNK):
        blk = b0[lo : lo + _CHUNK, None]
        # two coin outcomes: strict wins count twice, ties once
        accept += 2 * int((blk < b1[None, :]).sum()) + int((blk == b1[None, :]).sum())
    bits = (len(b0) * len(b1)).bit_length() - 1 + 1
    return Dyadic(accept, bits)


def compare_expectations_prob(c0: BooleanCircuit, c1: BooleanCircuit, bound: int = ENUMERATION_BOUND) -> Dyadic:
    """Exact acceptance probability ``1/2 + (E1 - E0)/2`` of the comparison test on two circuits."""
    return compare_bits_prob(truth_table(c0, bound), truth_table(c1, bound))


def knockout_argmax(
    spec: ProtocolSpec,
    x=None,
    comparator: str = "exact",
    workers: int = 1,
    trace: Optional[list] = None,
) -> int:
    """Winner of a knockout tournament over every message of a 1-round protocol.

    Messages are paired in index order; the odd one out gets a bye.  The
    second message of a pair wins unless the first has strictly larger
    expected reward.  ``comparator="oracle"`` decides each match with
    :func:`compare_bits_prob` on the one-bit form of the protocol instead
    of comparing exact expectations.
    """
    if spec.rounds != 1:
        raise ValueError("knockout selection needs a 1-round protocol")
    if comparator == "exact":
        cache: dict = {}

        def score(m):
            if m not in cache:
                cache[m] = int(reward_vector(spec, x, (m,)).sum())
            return cache[m]

        def second_wins(a, b):
            return score(a) <= score(b)

    elif comparator == "oracle":
        bit_spec = one_bit_transform(spec)

        def second_wins(a, b):
            pa = reward_vector(bit_spec, x, (a,))
            pb = reward_vector(bit_spec, x, (b,))
            return compare_bits_prob(pa, pb) >= Dyadic(1, 1)

    else:
        raise ValueError(f"unknown comparator {comparator!r}")

    alive = list(range(1 << spec.msg_bits[0]))
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while len(alive) > 1:
            pairs = [(alive[i], alive[i + 1]) for i in range(0, len(alive) - 1, 2)]
            if pool is not None:
                wins = list(pool.map(lambda ab: second_wins(*ab), pairs))
            else:
                wins = [second_wins(a, b) for a, b in pairs]
            nxt = [b if w else a for (a, b), w in zip(pairs, wins)]
            if trace is not None:
                trace.append([(a, b, b if w else a) for (a, b), w in zip(pairs, wins)])
            if len(alive) % 2:
                nxt.append(alive[-1])
            alive = nxt
    finally:
        if pool is not None:
            pool.shutdown()
    return alive[0]
