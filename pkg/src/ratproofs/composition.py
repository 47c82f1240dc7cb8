"""Running an adaptive oracle machine inside one rational protocol.

Merlin's first message is ``(l; y_1..y_l; m_1^(1)..m_1^(l))``: the number
of queries, the claimed oracle answers, and his first message in each
subprotocol.  Arthur replays the machine on the claimed answers to learn
the queries ``x_j``, runs the ``l`` subprotocols side by side, and pays

    R = R_1/2 + (D/4) R_2 + ... + (D**(l-1)/2**l) R_l + D**l/2**(l+1)

where ``D`` is the smallest declared gap of every subprotocol the machine
could ever query.  A wrong ``l``, nonzero padding, or a subprotocol whose
output differs from the claimed ``y_j`` pays 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .dyadic import ONE, ZERO, Dyadic
from .protocol import (
    DEFAULT_MAX_ENUM,
    NO_GAP,
    MalformedSpec,
    ProtocolSpec,
    resolution_delta,
    reward_vector,
    solve_rational,
    verify_protocol,
)
from .protocols import _value_vector

__all__ = [
    "Halt",
    "OracleMachine",
    "compose_with_machine",
    "composition_reward",
    "CompositionReport",
    "check_composition",
    "equal_majorities",
    "adaptive_and",
    "majority_of_three",
]


@dataclass(frozen=True)
class Halt:
    verdict: int


@dataclass(frozen=True)
class OracleMachine:
    """Deterministic adaptive machine: ``program(x, answers)`` returns the next query or a :class:`Halt`."""

    query_bound: int
    program: Callable[[Any, tuple], Any]
    name: str = "machine"

    def run(self, x, oracle: Callable[[Any], int]) -> tuple[int, list]:
        """Verdict and query list of the machine with a real oracle."""
        answers: list = []
        queries: list = []
        while True:
            step = self.program(x, tuple(answers))
            if isinstance(step, Halt):
                return step.verdict, queries
            if len(queries) == self.query_bound:
                raise MalformedSpec(f"{self.name} exceeds its query bound {self.query_bound}")
            queries.append(step)
            answers.append(oracle(step))

    def query_tree(self, x, answer_bits: int = 1) -> dict[tuple, Any]:
        """Every reachable step, keyed by the answer prefix that leads to it.

        Raises if some answer sequence makes more than ``query_bound`` queries.
        """
        tree: dict = {}
        stack = [()]
        while stack:
            ans = stack.pop()
            step = self.program(x, ans)
            tree[ans] = step
            if isinstance(step, Halt):
                continue
            if len(ans) == self.query_bound:
                raise MalformedSpec(f"{self.name} exceeds its query bound {self.query_bound}")
            stack.extend(ans + (a,) for a in range(1 << answer_bits))
        return tree


def composition_reward(delta: Dyadic, rewards) -> Dyadic:
    """``sum_j delta**(j-1)/2**j * R_j + delta**l/2**(l+1)``."""
    delta = Dyadic(delta)
    total = ZERO
    w = ONE
    for j, r in enumerate(rewards, start=1):
        total = total + (w * Dyadic(r)).scale(j)
        w = w * delta
    return total + w.scale(len(rewards) + 1)


def compose_with_machine(
    machine: OracleMachine,
    inner: Callable[[Any], ProtocolSpec],
    x,
    answer_bits: int = 1,
    inner_input: Callable[[Any], Any] = lambda q: q,
) -> ProtocolSpec:
    """One protocol computing ``machine`` with oracle answers proven by ``inner``.

    ``inner(query)`` builds the subprotocol for a query and
    ``inner_input(query)`` the input label it is solved on.  The
    construction is specialised to ``x``: all queries ``machine`` can
    make on ``x`` are enumerated up front.
    """
    L = machine.query_bound
    tree = machine.query_tree(x, answer_bits)
    specs: dict[tuple, ProtocolSpec] = {}
    for ans, step in tree.items():
        if not isinstance(step, Halt):
            specs[ans] = inner(step)
    if not specs:
        raise MalformedSpec(f"{machine.name} makes no queries on this input")
    k = next(iter(specs.values())).rounds
    if any(s.rounds != k for s in specs.values()):
        raise MalformedSpec("every subprotocol must have the same number of rounds")
    deltas = []
    for ans, s in specs.items():
        d = s.declared_delta(inner_input(tree[ans]))
        if d is NO_GAP or not isinstance(d, Dyadic) or d <= 0:
            raise MalformedSpec(f"subprotocol {s.name} has no usable gap")
        deltas.append(d)
    delta = min(deltas)
    if delta > 1:
        raise MalformedSpec("declared gap above 1")

    # Block widths per query position j and round t.
    msg_w = [[0] * k for _ in range(L)]
    rand_w = [[0] * k for _ in range(L)]
    for ans, s in specs.items():
        j = len(ans)
        for t in range(k):
            msg_w[j][t] = max(msg_w[j][t], s.msg_bits[t])
            rand_w[j][t] = max(rand_w[j][t], s.rand_bits[t])
    lbits = L.bit_length()
    head = lbits + L * answer_bits
    msg_bits = tuple((head if t == 0 else 0) + sum(msg_w[j][t] for j in range(L)) for t in range(k))
    rand_bits = tuple(sum(rand_w[j][t] for j in range(L)) for t in range(k))
    p_max = max(s.reward_resolution_bits for s in specs.values())
    p = L * delta.exp + L + 1 + p_max

    def blocks(value: int, widths) -> list[int]:
        out = []
        for w in widths:
            out.append(value & ((1 << w) - 1))
            value >>= w
        return out

    def decode(msgs):
        """``(l, answers, sub_msgs)`` with ``sub_msgs[j]`` the messages of subprotocol ``j``, or None."""
        m0 = msgs[0]
        l = m0 & ((1 << lbits) - 1)
        ys = blocks(m0 >> lbits, [answer_bits] * L)
        rest = [m0 >> head] + list(msgs[1:])
        per_round = [blocks(rest[t], [msg_w[j][t] for j in range(L)]) for t in range(len(msgs))]
        if l > L or any(ys[l:]):
            return None
        ans = tuple(ys[:l])
        for j in range(l):
            if ans[:j] not in specs:
                return None
        if not isinstance(tree.get(ans), Halt):
            return None
        sub = []
        for j in range(L):
            row = tuple(per_round[t][j] for t in range(len(msgs)))
            if j >= l:
                if any(row):
                    return None
                continue
            s = specs[ans[:j]]
            if any(m >> s.msg_bits[t] for t, m in enumerate(row)):
                return None
            sub.append(row)
        return l, ans, sub

    def sub_rands(rands, l, ans):
        out = []
        for t, r in enumerate(rands):
            bl = blocks(r, [rand_w[j][t] for j in range(L)])
            out.append(bl)
        return [
            tuple(out[t][j] & ((1 << specs[ans[:j]].rand_bits[t]) - 1) for t in range(len(rands)))
            for j in range(l)
        ]

    def reward(x_, msgs, rands):
        d = decode(msgs)
        if d is None:
            return ZERO
        l, ans, sub = d
        rs = sub_rands(rands, l, ans)
        rewards = []
        for j in range(l):
            s = specs[ans[:j]]
            xj = inner_input(tree[ans[:j]])
            arthur = tuple(s.arthur_rule(xj, sub[j][: t + 1], rs[j][: t + 1]) for t in range(k - 1))
            if s.value(xj, sub[j], arthur) != ans[j]:
                return ZERO
            rewards.append(s.reward(xj, sub[j], rs[j]))
        return composition_reward(delta, rewards)

    def arthur_rule(x_, msgs, rands):
        d = decode(msgs)
        if d is None:
            return None
        l, ans, sub = d
        rs = sub_rands(rands, l, ans)
        t = len(msgs)
        return tuple(
            specs[ans[:j]].arthur_rule(inner_input(tree[ans[:j]]), sub[j][:t], rs[j][:t]) for j in range(l)
        )

    def value(x_, msgs, arthur):
        d = decode(msgs)
        if d is None:
            return 0
        l, ans, sub = d
        for j in range(l):
            s = specs[ans[:j]]
            if s.value(inner_input(tree[ans[:j]]), sub[j], tuple(a[j] for a in arthur)) != ans[j]:
                return 0
        return tree[ans].verdict

    layout = ProtocolSpec(msg_bits, rand_bits, None, None, None, 0)
    size = 1 << layout.total_rand_bits
    idx = np.arange(size, dtype=np.int64)
    dt = np.int64 if p + layout.total_rand_bits <= 62 else object

    def sub_index(j: int, s: ProtocolSpec) -> np.ndarray:
        out = np.zeros(size, dtype=np.int64)
        for t in range(k):
            shift = layout.rand_offsets[t] + sum(rand_w[i][t] for i in range(j))
            out |= ((idx >> shift) & ((1 << s.rand_bits[t]) - 1)) << s.rand_offsets[t]
        return out

    index_cache: dict = {}

    def batch(x_, msgs):
        d = decode(msgs)
        if d is None:
            return np.zeros(size, dtype=dt)
        l, ans, sub = d
        out = np.full(size, Dyadic(delta.num**l, delta.exp * l + l + 1).numerator_at(p), dtype=dt)
        ok = np.ones(size, dtype=bool)
        w = ONE
        for j in range(l):
            s = specs[ans[:j]]
            xj = inner_input(tree[ans[:j]])
            key = (j, ans[:j])
            if key not in index_cache:
                index_cache[key] = sub_index(j, s)
            sidx = index_cache[key]
            if k == 1:
                ok &= s.value(xj, sub[j], ()) == ans[j]
            else:
                ok &= _value_vector(s, xj, sub[j], sidx, ans[j]).astype(bool)
            coef = w.scale(j + 1 + s.reward_resolution_bits).numerator_at(p)
            out = out + reward_vector(s, xj, sub[j])[sidx].astype(dt) * coef
            w = w * delta
        out[~ok] = 0
        return out

    return ProtocolSpec(
        msg_bits=msg_bits,
        rand_bits=rand_bits,
        reward=reward,
        value=value,
        declared_delta=lambda x_: Dyadic(1, p + layout.total_rand_bits),
        reward_resolution_bits=p,
        arthur_rule=arthur_rule,
        name=f"compose({machine.name}, {next(iter(specs.values())).name})",
        reward_vector=batch,
        meta={
            "delta": delta,
            "lbits": lbits,
            "answer_bits": answer_bits,
            "msg_widths": msg_w,
            "rand_widths": rand_w,
            "tree": tree,
            "specs": specs,
            "decode": decode,
            "inner_input": inner_input,
        },
    )


@dataclass
class CompositionReport:
    passed: bool
    branches: int = 0
    verdict: Optional[int] = None
    expected: Optional[int] = None
    violations: list = None


def check_composition(
    machine: OracleMachine,
    inner: Callable[[Any], ProtocolSpec],
    x,
    oracle: Callable[[Any], int],
    spec: Optional[ProtocolSpec] = None,
    max_enum: int = DEFAULT_MAX_ENUM,
    workers: int = 1,
) -> CompositionReport:
    """Exhaustively check the composed protocol against the real machine.

    On every rational branch: (a) each simulated query is the real
    machine's query, (b) each sub-message is optimal in its own
    subprotocol, (c) each claimed answer is the oracle's answer, and the
    output is the machine's real verdict.
    """
    spec = spec or compose_with_machine(machine, inner, x)
    expected, real_queries = machine.run(x, oracle)
    table = solve_rational(spec, x, max_enum=max_enum, workers=workers)
    decode = spec.meta["decode"]
    tree, specs, inner_input = spec.meta["tree"], spec.meta["specs"], spec.meta["inner_input"]
    sub_tables: dict = {}
    violations = []
    leaves = table.rational_leaves()
    for leaf in leaves:
        msgs, arthur = leaf[0::2], leaf[1::2]
        d = decode(msgs)
        if d is None:
            violations.append({"transcript": leaf, "property": "format"})
            continue
        l, ans, sub = d
        queries = [tree[ans[:j]] for j in range(l)]
        if queries != real_queries:
            violations.append({"transcript": leaf, "property": "a"})
        for j in range(l):
            if ans[j] != oracle(queries[j]):
                violations.append({"transcript": leaf, "property": "c", "query": j})
            key = ans[:j]
            if key not in sub_tables:
                sub_tables[key] = solve_rational(specs[key], inner_input(queries[j]), max_enum=max_enum)
            st = sub_tables[key]
            for t in range(len(sub[j])):
                node = []
                for u in range(t):
                    node += [sub[j][u], arthur[u][j]]
                if sub[j][t] not in st[tuple(node)].argmax:
                    violations.append({"transcript": leaf, "property": "b", "query": j, "round": t})
        out = spec.value(x, msgs, arthur)
        if out != expected:
            violations.append({"transcript": leaf, "property": "verdict", "output": out})
    outs = verify_protocol(spec, x, expected, table).outputs
    return CompositionReport(
        passed=not violations,
        branches=len(leaves),
        verdict=outs[0] if len(outs) == 1 else None,
        expected=expected,
        violations=violations,
    )


# -- toy machines over tuples of instances ------------------------------------


def _equal_majorities(x, answers):
    if len(answers) < 2:
        return x[len(answers)]
    return Halt(int(answers[0] == answers[1]))


def _adaptive_and(x, answers):
    if answers and not answers[-1]:
        return Halt(0)
    if len(answers) == len(x):
        return Halt(1)
    return x[len(answers)]


def _majority_of_three(x, answers):
    if len(answers) == 2 and answers[0] == answers[1]:
        return Halt(answers[0])
    if len(answers) == 3:
        return Halt(int(sum(answers) >= 2))
    return x[len(answers)]


equal_majorities = OracleMachine(2, _equal_majorities, "equal-majorities")
adaptive_and = OracleMachine(2, _adaptive_and, "adaptive-and")
majority_of_three = OracleMachine(3, _majority_of_three, "majority-of-three")
