"""Small hand-made and random multi-round protocols used as fixtures."""

from __future__ import annotations

import numpy as np

from .circuits import CountingInstance, membership, truth_table, evaluate, BooleanCircuit
from .dyadic import Dyadic
from .protocol import ProtocolSpec, resolution_delta

__all__ = ["make_revealed_vote", "random_two_round", "sabotaged_pp_vote"]


def make_revealed_vote(inst) -> ProtocolSpec:
    """Two rounds: Merlin votes ``b``, Arthur reveals his sample ``y``, Merlin names ``C(y)``.

    Pays ``(I{b = C(y)} + I{c = C(y)})/2`` and outputs ``b``.
    """
    if isinstance(inst, BooleanCircuit):
        inst = CountingInstance(inst, "majority")
    membership(CountingInstance(inst.circuit, "majority", inst.bound))
    c = inst.circuit
    n = c.n_inputs
    tt = truth_table(c, inst.bound).astype(np.int64)

    def reward(x, msgs, rands):
        v = evaluate(c, rands[0])
        return Dyadic(int(msgs[0] == v) + int(msgs[1] == v), 1)

    def batch(x, msgs):
        return (tt if msgs[0] else 1 - tt) + (tt if msgs[1] else 1 - tt)

    return ProtocolSpec(
        msg_bits=(1, 1),
        rand_bits=(n, 0),
        reward=reward,
        value=lambda x, msgs, arthur: msgs[0],
        declared_delta=lambda x: Dyadic(1, n),
        reward_resolution_bits=1,
        arthur_rule=lambda x, msgs, rands: rands[0] if len(msgs) == 1 else 0,
        name="revealed-vote",
        reward_vector=batch,
        arthur_vector=lambda x, msgs: np.arange(1 << n, dtype=np.int64),
    )


def sabotaged_pp_vote(inst) -> ProtocolSpec:
    """pp-vote with the reward inverted: pays ``I{b != C(y)}``."""
    if isinstance(inst, BooleanCircuit):
        inst = CountingInstance(inst, "majority")
    membership(CountingInstance(inst.circuit, "majority", inst.bound))
    c = inst.circuit
    n = c.n_inputs
    tt = truth_table(c, inst.bound).astype(np.int64)
    return ProtocolSpec(
        msg_bits=(1,),
        rand_bits=(n,),
        reward=lambda x, msgs, rands: Dyadic(int(msgs[0] != evaluate(c, rands[0]))),
        value=lambda x, msgs, arthur: msgs[0],
        declared_delta=lambda x: Dyadic(1, n),
        reward_resolution_bits=0,
        name="pp-vote-sabotaged",
        reward_vector=lambda x, msgs: 1 - tt if msgs[0] else tt,
    )


def random_two_round(
    rng: np.random.Generator,
    msg_bits=(2, 2),
    rand_bits=(3, 2),
    p: int = 2,
) -> ProtocolSpec:
    """Random 2-round protocol with a random reward table.

    Arthur's first message is the low ``g(m_1)`` bits of ``r_1 XOR f(m_1)``
    for random ``f`` and ``g``, so every belief is a power-of-two set.
    The output is the low bit of ``m_1``.
    """
    m1, m2 = (1 << b for b in msg_bits)
    r1b, r2b = rand_bits
    f = rng.integers(0, 1 << r1b, size=m1)
    g = rng.integers(0, r1b + 1, size=m1)
    size = 1 << (r1b + r2b)
    table = rng.integers(0, (1 << p) + 1, size=(m1, m2, size)).astype(np.int64)
    r1_of = np.arange(size, dtype=np.int64) & ((1 << r1b) - 1)

    def reveal(m, r1):
        return (r1 ^ int(f[m])) & ((1 << int(g[m])) - 1)

    def reward(x, msgs, rands):
        return Dyadic(int(table[msgs[0], msgs[1], rands[0] | (rands[1] << r1b)]), p)

    def arthur(x, msgs, rands):
        return int(reveal(msgs[0], rands[0])) if len(msgs) == 1 else 0

    def arthur_batch(x, msgs):
        if len(msgs) != 1:
            return np.zeros(size, dtype=np.int64)
        return reveal(msgs[0], r1_of)

    spec = ProtocolSpec(
        msg_bits=tuple(msg_bits),
        rand_bits=tuple(rand_bits),
        reward=reward,
        value=lambda x, msgs, arthur: msgs[0] & 1,
        declared_delta=lambda x: Dyadic(1, p + r1b + r2b),
        reward_resolution_bits=p,
        arthur_rule=arthur,
        name="random-2round",
        reward_vector=lambda x, msgs: table[msgs[0], msgs[1]],
        arthur_vector=arthur_batch,
        meta={"table": table, "f": f, "g": g},
    )
    assert spec.declared_delta(None) == resolution_delta(spec)
    return spec
