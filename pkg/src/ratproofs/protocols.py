"""Protocol constructors over circuit instances.

Each constructor bakes its instance into the returned
:class:`~ratproofs.protocol.ProtocolSpec`; the solver's ``x`` argument is
then only a label.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .circuits import (
    BooleanCircuit,
    CountingInstance,
    TieNotAllowed,
    evaluate,
    membership,
    truth_table,
)
from .dyadic import ONE, ZERO, Dyadic
from .protocol import (
    ProtocolSpec,
    MalformedSpec,
    reward_vector,
    arthur_codes,
    resolution_delta,
    solve_rational,
    verify_protocol,
)

__all__ = ["make_pp_vote", "make_brier_count", "one_bit_transform", "pp_oracle_round", "constant_protocol"]


def _as_instance(inst, mode: str) -> CountingInstance:
    if isinstance(inst, BooleanCircuit):
        return CountingInstance(inst, mode)
    return inst


def make_pp_vote(inst) -> ProtocolSpec:
    """One bit ``b`` from Merlin, reward ``I{b = C(y)}`` on a uniform certificate ``y``.

    Raises :class:`TieNotAllowed` for an instance accepting exactly half.
    """
    inst = _as_instance(inst, "majority")
    membership(CountingInstance(inst.circuit, "majority", inst.bound))
    c = inst.circuit
    n = c.n_inputs
    tt = truth_table(c, inst.bound).astype(np.int64)

    def reward(x, msgs, rands):
        return Dyadic(int(msgs[0] == evaluate(c, rands[0])))

    def batch(x, msgs):
        return tt if msgs[0] else 1 - tt

    return ProtocolSpec(
        msg_bits=(1,),
        rand_bits=(n,),
        reward=reward,
        value=lambda x, msgs, arthur: msgs[0],
        declared_delta=lambda x: Dyadic(1, n),
        reward_resolution_bits=0,
        name="pp-vote",
        reward_vector=batch,
    )


def make_brier_count(inst, width: int | None = None) -> ProtocolSpec:
    """Merlin claims the count; Arthur scores one sample with the quadratic rule.

    With full width (``n + 1`` bits) message ``c <= 2**n`` claims ``q = c/2**n``
    and larger ``c`` is malformed (reward 0).  With ``width = w < n + 1``
    message ``m`` claims ``q = m/2**w``.  The payment is ``1 - (q - C(y))**2``.
    The output is the claimed count in ``count`` mode and the low bit of
    the message in ``parity`` mode.
    """
    inst = _as_instance(inst, "parity")
    c = inst.circuit
    n = c.n_inputs
    full = width is None or width == n + 1
    w = n + 1 if full else width
    if not 1 <= w <= n + 1:
        raise ValueError(f"width must lie in 1..{n + 1}")
    scale = n if full else w
    p = 2 * scale
    tt = truth_table(c, inst.bound).astype(np.int64)
    top = 1 << scale

    def claim_ok(m):
        return not full or m <= top

    def reward(x, msgs, rands):
        m = msgs[0]
        if not claim_ok(m):
            return ZERO
        b = evaluate(c, rands[0])
        q = Dyadic(m, scale)
        return ONE - (q - b) ** 2

    def batch(x, msgs):
        m = msgs[0]
        if not claim_ok(m):
            return np.zeros(1 << n, dtype=np.int64)
        return (1 << p) - (m - tt * top) ** 2

    def value(x, msgs, arthur):
        m = msgs[0]
        if inst.mode == "count":
            return m if full else m << (n - w)
        return m & 1

    declared = Dyadic(1, 2 * n) if full else Dyadic(1, p + n)
    return ProtocolSpec(
        msg_bits=(w,),
        rand_bits=(n,),
        reward=reward,
        value=value,
        declared_delta=lambda x: declared,
        reward_resolution_bits=p,
        name="brier-count" if full else f"brier-count-w{w}",
        reward_vector=batch,
        meta={"width": w, "full_width": full},
    )


def constant_protocol(reward: Dyadic, msg_bits: int = 2, rand_bits: int = 1) -> ProtocolSpec:
    """Every message earns ``reward``; every message is optimal."""
    reward = Dyadic(reward)
    p = reward.exp
    size = 1 << rand_bits
    return ProtocolSpec(
        msg_bits=(msg_bits,),
        rand_bits=(rand_bits,),
        reward=lambda x, msgs, rands: reward,
        value=lambda x, msgs, arthur: msgs[0],
        declared_delta=lambda x: Dyadic(1, p + rand_bits),
        reward_resolution_bits=p,
        name="constant",
        reward_vector=lambda x, msgs: np.full(size, reward.num, dtype=np.int64),
    )


def one_bit_transform(spec: ProtocolSpec) -> ProtocolSpec:
    """Replace the reward by a single bit that is 1 with probability exactly ``R``.

    Arthur draws ``p = reward_resolution_bits`` extra uniform bits ``u`` in
    the last round and pays ``I{u < R * 2**p}``.  Message widths and the
    round count are unchanged; the new bits sit above the old last-round
    randomness, so Arthur's messages never see them.
    """
    p = spec.reward_resolution_bits
    last = spec.rand_bits[-1]
    old_size = 1 << spec.total_rand_bits
    aux = np.arange(1 << p, dtype=object if p > 62 else np.int64)

    def base_rands(rands):
        return rands[:-1] + (rands[-1] & ((1 << last) - 1),) if len(rands) == spec.rounds else rands

    def reward(x, msgs, rands):
        u = rands[-1] >> last
        r = spec.reward(x, msgs, base_rands(rands))
        r = Dyadic(r)
        if r.exp > p or r < 0 or r > 1:
            raise MalformedSpec(f"reward {r} is not a multiple of 2^-{p} in [0, 1]")
        return ONE if u < r.numerator_at(p) else ZERO

    def batch(x, msgs):
        old = reward_vector(spec, x, msgs)
        return (aux[:, None] < old[None, :]).ravel().astype(np.int64)

    def arthur_rule(x, msgs, rands):
        return spec.arthur_rule(x, msgs, base_rands(rands))

    def arthur_batch(x, msgs):
        codes, labels = arthur_codes(spec, x, msgs)
        lab = np.empty(len(labels), dtype=object)
        lab[:] = labels
        return np.tile(lab[codes], 1 << p)

    return ProtocolSpec(
        msg_bits=spec.msg_bits,
        rand_bits=spec.rand_bits[:-1] + (last + p,),
        reward=reward,
        value=spec.value,
        declared_delta=spec.declared_delta,
        reward_resolution_bits=0,
        arthur_rule=arthur_rule,
        name=f"one-bit({spec.name})",
        reward_vector=batch,
        arthur_vector=arthur_batch if spec.rounds > 1 else None,
        meta={**spec.meta, "wraps": spec.name},
    )


def pp_oracle_round(
    instances: Sequence,
    inner: Callable[[object], ProtocolSpec],
    inner_truth: Sequence | None = None,
    inner_inputs: Sequence | None = None,
) -> ProtocolSpec:
    """Majority over ``y`` of a ``k``-round subprotocol, as a ``k + 1``-round protocol.

    ``instances[y]`` is the instance for certificate ``y`` (``len`` must be
    a power of two).  Merlin first sends the claimed majority bit ``b``;
    Arthur replies with a uniform ``y``; the subprotocol for
    ``instances[y]`` runs; Arthur pays ``R/2 + (delta/4) I{b = pi}`` with
    ``delta`` the smallest declared gap over all ``y`` and outputs ``b``.
    """
    q = (len(instances) - 1).bit_length()
    if len(instances) != 1 << q or q < 1:
        raise ValueError("need 2^q instances with q >= 1")
    specs = [inner(inst) for inst in instances]
    xs = list(inner_inputs) if inner_inputs is not None else [f"y{y}" for y in range(1 << q)]
    k = specs[0].rounds
    if any(s.rounds != k for s in specs):
        raise MalformedSpec("subprotocols must share a round count")
    if inner_truth is None:
        inner_truth = []
        for s, xy in zip(specs, xs):
            outs = verify_protocol(s, xy, None).outputs
            if len(outs) != 1:
                raise MalformedSpec(f"subprotocol on {xy} has no unique rational output")
            inner_truth.append(outs[0])
    ones = sum(1 for t in inner_truth if t)
    if 2 * ones == 1 << q:
        raise TieNotAllowed("subprotocol decisions split exactly in half over y")
    delta = min(s.declared_delta(xy) for s, xy in zip(specs, xs))
    if delta > 1:
        raise MalformedSpec("declared gap above 1")
    msg_w = [max(s.msg_bits[t] for s in specs) for t in range(k)]
    rand_w = [max(s.rand_bits[t] for s in specs) for t in range(k)]
    p_in = max(s.reward_resolution_bits for s in specs)
    p = max(p_in + 1, delta.exp + 2)
    layout = ProtocolSpec((1, *msg_w), (q, *rand_w), None, None, None, 0)

    def sub_view(y, msgs, rands):
        """Subprotocol messages and randomness, or None on a padding violation."""
        s = specs[y]
        sm = msgs[1:]
        if any(m >> s.msg_bits[t] for t, m in enumerate(sm)):
            return None
        sr = tuple(r & ((1 << s.rand_bits[t]) - 1) for t, r in enumerate(rands[1:]))
        return sm, sr

    def reward(x, msgs, rands):
        y = rands[0]
        view = sub_view(y, msgs, rands)
        if view is None:
            return ZERO
        sm, sr = view
        s = specs[y]
        r = Dyadic(s.reward(xs[y], sm, sr))
        arthur = tuple(s.arthur_rule(xs[y], sm[: t + 1], sr[: t + 1]) for t in range(k - 1))
        pi = s.value(xs[y], sm, arthur)
        return r.scale(1) + (delta.scale(2) if msgs[0] == pi else ZERO)

    def arthur_rule(x, msgs, rands):
        y = rands[0]
        if len(msgs) == 1:
            return y
        view = sub_view(y, msgs, rands)
        if view is None:
            return None
        sm, sr = view
        return specs[y].arthur_rule(xs[y], sm, sr)

    def value(x, msgs, arthur):
        return msgs[0]

    # Subprotocol randomness index inside our packed layout, for each y.
    size = 1 << layout.total_rand_bits
    idx = np.arange(size, dtype=np.int64)
    ys = idx & ((1 << q) - 1)

    def sub_index(y):
        s = specs[y]
        out = np.zeros(size, dtype=np.int64)
        for t in range(k):
            block = (idx >> layout.rand_offsets[t + 1]) & ((1 << s.rand_bits[t]) - 1)
            out |= block << s.rand_offsets[t]
        return out

    sub_idx = [sub_index(y) for y in range(1 << q)]
    dt = np.int64 if p + layout.total_rand_bits <= 62 else object

    def batch(x, msgs):
        out = np.zeros(size, dtype=dt)
        for y in range(1 << q):
            s = specs[y]
            sm = msgs[1:]
            if any(m >> s.msg_bits[t] for t, m in enumerate(sm)):
                continue
            sel = ys == y
            rv = reward_vector(s, xs[y], sm)[sub_idx[y][sel]].astype(dt)
            if k == 1:
                bonus = int(msgs[0] == s.value(xs[y], sm, ()))
                pis = np.full(int(sel.sum()), bonus, dtype=dt)
            else:
                pis = _value_vector(s, xs[y], sm, sub_idx[y][sel], msgs[0]).astype(dt)
            out[sel] = rv * (1 << (p - s.reward_resolution_bits - 1)) + pis * (delta.num << (p - delta.exp - 2))
        return out

    return ProtocolSpec(
        msg_bits=layout.msg_bits,
        rand_bits=layout.rand_bits,
        reward=reward,
        value=value,
        declared_delta=lambda x: delta.scale(q + 1),
        reward_resolution_bits=p,
        arthur_rule=arthur_rule,
        name=f"pp-oracle-round({specs[0].name})",
        reward_vector=batch,
        meta={"inner_delta": delta, "y_bits": q, "inner_truth": list(inner_truth)},
    )


def _value_vector(s: ProtocolSpec, x, msgs, sub_idx: np.ndarray, b) -> np.ndarray:
    """``I{b = pi}`` of subprotocol ``s`` at each of the given randomness indices."""
    k = s.rounds
    cols = [arthur_codes(s, x, msgs[: t + 1]) for t in range(k - 1)]
    keys = np.stack([c[0][sub_idx] for c in cols], axis=1) if cols else np.zeros((len(sub_idx), 0), np.int64)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    hits = np.array(
        [int(b == s.value(x, msgs, tuple(cols[t][1][row[t]] for t in range(k - 1)))) for row in uniq],
        dtype=np.int64,
    )
    return hits[inv.ravel()]
