"""Eliciting a continuation's expected reward, and splitting a protocol at a round.

:func:`elicit_expectation` turns a ``k``-round protocol into a
``(k - i)``-round one whose input is ``(x, prefix)`` with ``prefix`` an
observable transcript ``(m_1, a_1, ..., m_i, a_i)``.  Merlin's first
message carries a claimed value ``E`` next to his real next message, and
Arthur pays ``R/2 + (delta/4)(1 - (E - R)**2)``.  Arthur resamples the
first ``i`` rounds of randomness uniformly among the vectors consistent
with the prefix, so the claim is scored against exactly Merlin's belief.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dyadic import ONE, ZERO, Dyadic
from .protocol import (
    DEFAULT_MAX_ENUM,
    InconsistentTranscript,
    MalformedSpec,
    ProtocolSpec,
    _Solver,
    _ValueRow,
    arthur_codes,
    info_set_value,
    reward_vector,
    solve_rational,
    verify_protocol,
)

__all__ = [
    "elicit_expectation",
    "claim_grid_bits",
    "encode_claim",
    "ElicitationReport",
    "elicitation_audit",
    "SplitReport",
    "split_at_round",
]


def claim_grid_bits(spec: ProtocolSpec) -> int:
    """Exponent of the claim grid; every conditional expectation lies on it."""
    return spec.reward_resolution_bits + spec.total_rand_bits


def encode_claim(spec: ProtocolSpec, E: Dyadic, m: int) -> int:
    """First message of the elicitation protocol claiming ``E`` alongside ``m``."""
    P = claim_grid_bits(spec)
    return Dyadic(E).numerator_at(P) | (m << (P + 1))


def elicit_expectation(spec: ProtocolSpec, i: int, x=None, fixed_claim: Optional[Dyadic] = None) -> ProtocolSpec:
    """Wrap rounds ``i+1..k`` of ``spec`` into a claim-scoring protocol.

    ``x`` is the wrapped protocol's input, where its declared gap is read.
    With ``fixed_claim`` the claim is hard-wired instead of sent, which
    prices claims off the message grid.
    """
    k = spec.rounds
    if not 1 <= i < k:
        raise ValueError(f"split round {i} must satisfy 1 <= i < {k}")
    delta = spec.declared_delta(x)
    if not isinstance(delta, Dyadic) or delta <= 0 or delta > 1:
        raise MalformedSpec(f"declared gap {delta!r} unusable for elicitation")
    p = spec.reward_resolution_bits
    P = claim_grid_bits(spec)
    if fixed_claim is not None:
        fixed_claim = Dyadic(fixed_claim)
        if fixed_claim < 0 or fixed_claim > 1:
            raise ValueError("claim must lie in [0, 1]")
    grid = P if fixed_claim is None else max(P, fixed_claim.exp)
    ebits = 0 if fixed_claim is not None else P + 1
    pre = spec.rand_offsets[i]
    msg_bits = (ebits + spec.msg_bits[i],) + spec.msg_bits[i + 1 :]
    rand_bits = (pre + spec.rand_bits[i],) + spec.rand_bits[i + 1 :]
    size = 1 << spec.total_rand_bits
    pt = 2 + delta.exp + 2 * grid
    dt = np.int64 if pt + spec.total_rand_bits <= 62 else object

    cache: dict = {}

    def consistent(xt) -> np.ndarray:
        """Packed prefixes r_1..r_i consistent with the observed transcript, sorted."""
        key = ("B", xt)
        if key not in cache:
            x_in, prefix = xt
            if len(prefix) != 2 * i:
                raise ValueError(f"prefix must hold {2 * i} entries, got {len(prefix)}")
            mask, _ = _Solver(spec, x_in, max_enum=1 << 62).locate(tuple(prefix))
            idx = np.arange(size, dtype=np.int64) if mask is None else np.flatnonzero(mask)
            cache[key] = np.unique(idx & ((1 << pre) - 1))
        return cache[key]

    def index_map(xt) -> np.ndarray:
        key = ("map", xt)
        if key not in cache:
            B = consistent(xt)
            r = np.arange(size, dtype=np.int64)
            cache[key] = B[(r & ((1 << pre) - 1)) % len(B)] | ((r >> pre) << pre)
        return cache[key]

    def split_first(m0: int):
        return m0 & ((1 << ebits) - 1), m0 >> ebits

    def claim(e: int) -> Optional[Dyadic]:
        if fixed_claim is not None:
            return fixed_claim
        return Dyadic(e, P) if e <= 1 << P else None

    def outer_msgs(xt, msgs):
        _, m = split_first(msgs[0])
        return tuple(xt[1][0::2]) + (m,) + tuple(msgs[1:])

    def outer_rands(xt, rands):
        B = consistent(xt)
        u = rands[0] & ((1 << pre) - 1)
        head = spec.split_randomness(int(B[u % len(B)]), i)
        return head + (rands[0] >> pre,) + tuple(rands[1:])

    def reward(xt, msgs, rands):
        E = claim(split_first(msgs[0])[0])
        if E is None:
            return ZERO
        R = Dyadic(spec.reward(xt[0], outer_msgs(xt, msgs), outer_rands(xt, rands)))
        return R.scale(1) + delta.scale(2) * (ONE - (E - R) ** 2)

    def batch(xt, msgs):
        E = claim(split_first(msgs[0])[0])
        if E is None:
            return np.zeros(size, dtype=dt)
        full = outer_msgs(xt, msgs)
        key = ("R", xt, full)
        if key not in cache:
            cache[key] = reward_vector(spec, xt[0], full)[index_map(xt)].astype(dt)
        Rn = cache[key]
        d = E.numerator_at(grid) - Rn * (1 << (grid - p))
        return Rn * (1 << (pt - p - 1)) + delta.num * ((1 << (2 * grid)) - d * d)

    def leaf_sums(xt, msgs, mask):
        # Summed score of every (claim, message) pair from the moments of R.
        if fixed_claim is not None:
            En = np.array([fixed_claim.numerator_at(grid)], dtype=object)
        else:
            En = np.arange(1 << ebits, dtype=object) << (grid - P)
        valid = np.arange(1 << ebits) <= (1 << P) if ebits else np.ones(1, dtype=bool)
        s = 1 << (grid - p)
        rows = []
        for m in range(1 << spec.msg_bits[i]):
            full = tuple(xt[1][0::2]) + (m,)
            Rn = reward_vector(spec, xt[0], full)[index_map(xt)]
            if mask is not None:
                Rn = Rn[mask]
            Rn = Rn.astype(object)
            S0, S1, S2 = len(Rn), int(Rn.sum()), int((Rn * Rn).sum())
            row = S1 * (1 << (pt - p - 1)) + delta.num * (
                (S0 << (2 * grid)) - (En * En * S0 - 2 * En * s * S1 + s * s * S2)
            )
            row[~valid] = 0
            rows.append(row)
        return np.concatenate(rows)

    def arthur_rule(xt, msgs, rands):
        return spec.arthur_rule(xt[0], outer_msgs(xt, msgs), outer_rands(xt, rands))

    def value(xt, msgs, arthur):
        E = claim(split_first(msgs[0])[0])
        return (E, spec.value(xt[0], outer_msgs(xt, msgs), tuple(xt[1][1::2]) + tuple(arthur)))

    return ProtocolSpec(
        msg_bits=msg_bits,
        rand_bits=rand_bits,
        reward=reward,
        value=value,
        declared_delta=lambda xt: Dyadic(1, pt + spec.total_rand_bits),
        reward_resolution_bits=pt,
        arthur_rule=arthur_rule,
        name=f"elicit({spec.name}, i={i})",
        reward_vector=batch,
        leaf_sums=leaf_sums if k - i == 1 else None,
        meta={
            "wraps": spec.name,
            "nesting": spec.meta.get("nesting", 0) + 1,
            "claim_bits": P,
            "split": i,
            "delta": delta,
        },
    )


def _interleave(msgs, arthur):
    out = []
    for m, a in zip(msgs, arthur):
        out += [m, a]
    return tuple(out)


def _off_grid_probes(target: Dyadic, delta: Dyadic) -> list:
    out = []
    for k in (1, 3):
        out += [target + delta.scale(k), target - delta.scale(k)]
    return [E for E in out if 0 <= E <= 1]


@dataclass
class ElicitationReport:
    passed: bool
    prefixes: int = 0
    claims_checked: int = 0
    failures: list = field(default_factory=list)


def elicitation_audit(
    spec: ProtocolSpec,
    x,
    i: int,
    off_grid: bool = True,
    prefixes=None,
    max_enum: int = DEFAULT_MAX_ENUM,
) -> ElicitationReport:
    """Check the elicited claim on every rational prefix of length ``i``.

    For each prefix the rational claim must be unique and equal to
    :func:`info_set_value`; every other claim on the grid must lose exactly
    ``(delta/4)(E - E*)**2``, and with ``off_grid`` the claims
    ``E* +- delta/2`` (hard-wired) must lose at least that much.
    """
    table = solve_rational(spec, x, max_enum=max_enum)
    if prefixes is None:
        prefixes = sorted((key for key, n in table.nodes.items() if n.rational and len(key) == 2 * i), key=repr)
    tilde = elicit_expectation(spec, i, x)
    delta = tilde.meta["delta"]
    P = tilde.meta["claim_bits"]
    ebits = P + 1
    rep = ElicitationReport(True)
    for prefix in prefixes:
        rep.prefixes += 1
        xt = (x, prefix)
        target = info_set_value(spec, x, prefix, max_enum=max_enum)
        tt = solve_rational(tilde, xt, max_enum=max_enum)
        claims = {out[0] for out in verify_protocol(tilde, xt, None, tt).outputs}
        if claims != {target}:
            rep.failures.append({"prefix": prefix, "claims": sorted(claims, key=str), "expected": target})
            continue
        best = tt.root_value
        children = tt.root.children
        if isinstance(children, _ValueRow):
            per_claim = children.sums.reshape(-1, 1 << ebits).max(axis=0)
            by_claim = {e: Dyadic(int(per_claim[e]), children.exp) for e in range((1 << P) + 1)}
        else:
            by_claim = {}
            for m0, v in children.items():
                e = m0 & ((1 << ebits) - 1)
                if e <= 1 << P and (e not in by_claim or v > by_claim[e]):
                    by_claim[e] = v
        for e, v in by_claim.items():
            E = Dyadic(e, P)
            rep.claims_checked += 1
            if best - v != delta.scale(2) * (E - target) ** 2:
                rep.failures.append({"prefix": prefix, "claim": E, "loss": best - v})
        if off_grid:
            for E in _off_grid_probes(target, delta):
                fixed = elicit_expectation(spec, i, x, fixed_claim=E)
                v = solve_rational(fixed, xt, max_enum=max_enum).root_value
                rep.claims_checked += 1
                if best - v < delta.scale(2) * (E - target) ** 2:
                    rep.failures.append({"prefix": prefix, "claim": E, "loss": best - v, "off_grid": True})
    rep.passed = not rep.failures
    return rep


@dataclass
class SplitReport:
    passed: bool
    nodes_compared: int = 0
    oracle_calls: int = 0
    mismatches: list = field(default_factory=list)


def split_at_round(spec: ProtocolSpec, x, i: int, max_enum: int = DEFAULT_MAX_ENUM) -> SplitReport:
    """Run rounds ``1..i`` of ``spec``, then ask the elicitation protocol as a one-shot oracle.

    The truncated protocol pays the oracle's claimed value.  Passes iff its
    values and argmax sets equal those of ``spec`` at every node of rounds
    ``1..i`` and the oracle's second output equals ``spec``'s rational
    output on every rational prefix.
    """
    if not 1 <= i < spec.rounds:
        raise ValueError(f"split round {i} must satisfy 1 <= i < {spec.rounds}")
    tilde = elicit_expectation(spec, i, x)
    answers: dict = {}
    rep = SplitReport(True)

    def oracle(prefix):
        if prefix not in answers:
            xt = (x, prefix)
            outs = verify_protocol(tilde, xt, None, solve_rational(tilde, xt, max_enum=max_enum)).outputs
            answers[prefix] = outs
            rep.oracle_calls += 1
            if len(outs) != 1:
                rep.mismatches.append({"prefix": prefix, "oracle_outputs": outs})
        return answers[prefix][0]

    def reward(x_, msgs, rands):
        arthur = tuple(spec.arthur_rule(x_, msgs[: t + 1], rands[: t + 1]) for t in range(i))
        return oracle(_interleave(msgs, arthur))[0]

    truncated = ProtocolSpec(
        msg_bits=spec.msg_bits[:i],
        rand_bits=spec.rand_bits[:i],
        reward=reward,
        value=lambda x_, msgs, arthur: None,
        declared_delta=lambda x_: Dyadic(1, claim_grid_bits(spec) + spec.rand_offsets[i]),
        reward_resolution_bits=claim_grid_bits(spec),
        arthur_rule=spec.arthur_rule,
        name=f"split({spec.name}, i={i})",
    )
    direct = solve_rational(spec, x, max_enum=max_enum)
    split = solve_rational(truncated, x, max_enum=max_enum)
    for key, node in split.items():
        ref = direct[key]
        rep.nodes_compared += 1
        if node.value != ref.value or (node.to_move == "merlin" and node.argmax != ref.argmax):
            rep.mismatches.append({"node": key, "split": (node.value, sorted(node.argmax)), "direct": (ref.value, sorted(ref.argmax))})
    direct_leaves = direct.rational_leaves()
    for leaf in split.rational_leaves():
        codes, labels = arthur_codes(spec, x, leaf[0::2])
        for a in sorted({labels[c] for c in np.unique(codes)}, key=repr):
            prefix = leaf + (a,)
            try:
                _Solver(spec, x, max_enum=1 << 62).locate(prefix)
            except InconsistentTranscript:
                continue
            oracle(prefix)
            got = {out[1] for out in answers[prefix]}
            want = {
                spec.value(x, d[0::2], d[1::2]) for d in direct_leaves if d[: len(prefix)] == prefix
            }
            if got != want:
                rep.mismatches.append({"prefix": prefix, "oracle_outputs": sorted(got, key=repr), "direct_outputs": sorted(want, key=repr)})
    rep.passed = not rep.mismatches
    return rep
