"""The k-round rational protocol model and its exact solver.

Messages are integers of a fixed bit width per round.  Arthur's private
randomness for round ``i`` is an integer of ``rand_bits[i]`` bits; the
full randomness vector is packed least-significant round first, so the
prefix ``r_1..r_i`` of a packed index ``r`` is ``r & (2**offset[i] - 1)``.

Merlin observes only the transcript.  His belief at a node is uniform over
the randomness prefixes that reproduce the Arthur messages seen so far;
the solver keeps it as a boolean mask over packed full randomness vectors
(consistent prefixes times every possible fresh suffix).
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .circuits import BoundExceeded
from .dyadic import Dyadic

__all__ = [
    "DEFAULT_MAX_ENUM",
    "NO_GAP",
    "ProtocolSpec",
    "Transcript",
    "InfoSet",
    "InfoSetTable",
    "VerificationReport",
    "MalformedSpec",
    "InconsistentTranscript",
    "silent_arthur",
    "resolution_delta",
    "reward_vector",
    "arthur_codes",
    "solve_rational",
    "info_set_value",
    "delta_exact",
    "verify_protocol",
    "play",
    "run_interaction",
    "argmax_strategy",
    "solver_report",
]

DEFAULT_MAX_ENUM = 1 << 24


class MalformedSpec(ValueError):
    pass


class InconsistentTranscript(ValueError):
    pass


class _NoGap:
    """Gap of a protocol in which no reachable node has a suboptimal message."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = object.__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NO_GAP"

    def __str__(self):
        return "inf"

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self


NO_GAP = _NoGap()


def silent_arthur(x, msgs, rands):
    return 0


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    """A k-round rational protocol.

    ``reward(x, msgs, rands)`` returns a :class:`Dyadic` in ``[0, 1]`` that is
    a multiple of ``2**-reward_resolution_bits``.  ``arthur_rule(x, msgs,
    rands)`` receives the first ``i`` messages and randomness strings and
    returns Arthur's ``i``-th message (any hashable).  ``value(x, msgs,
    arthur_msgs)`` gets ``a_1..a_{k-1}``.

    ``reward_vector(x, msgs)`` and ``arthur_vector(x, msgs_prefix)`` are
    optional batched forms over every packed randomness index; the reward
    batch returns integer numerators over ``2**reward_resolution_bits``.
    They must agree with the scalar callables.

    ``leaf_sums(x, msgs_prefix, mask)`` optionally returns, for every
    last-round message, the sum of its reward numerators over the packed
    randomness selected by ``mask`` (all of it when ``mask`` is None).
    """

    msg_bits: tuple[int, ...]
    rand_bits: tuple[int, ...]
    reward: Callable[[Any, tuple, tuple], Dyadic]
    value: Callable[[Any, tuple, tuple], Any]
    declared_delta: Callable[[Any], Dyadic]
    reward_resolution_bits: int
    arthur_rule: Callable[[Any, tuple, tuple], Hashable] = silent_arthur
    name: str = "protocol"
    reward_vector: Optional[Callable[[Any, tuple], np.ndarray]] = None
    arthur_vector: Optional[Callable[[Any, tuple], np.ndarray]] = None
    leaf_sums: Optional[Callable[[Any, tuple, Optional[np.ndarray]], np.ndarray]] = None
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "msg_bits", tuple(self.msg_bits))
        object.__setattr__(self, "rand_bits", tuple(self.rand_bits))
        if not self.msg_bits or len(self.msg_bits) != len(self.rand_bits):
            raise MalformedSpec("need one message width and one randomness width per round")
        if min(self.msg_bits) < 0 or min(self.rand_bits) < 0 or self.reward_resolution_bits < 0:
            raise MalformedSpec("widths must be non-negative")
        offs = [0]
        for b in self.rand_bits:
            offs.append(offs[-1] + b)
        object.__setattr__(self, "_offsets", tuple(offs))

    @property
    def rounds(self) -> int:
        return len(self.msg_bits)

    @property
    def total_rand_bits(self) -> int:
        return self._offsets[-1]

    @property
    def rand_offsets(self) -> tuple[int, ...]:
        return self._offsets

    @property
    def enumeration_size(self) -> int:
        return 1 << (sum(self.msg_bits) + self.total_rand_bits)

    def split_randomness(self, r: int, rounds: Optional[int] = None) -> tuple[int, ...]:
        k = self.rounds if rounds is None else rounds
        return tuple((r >> self._offsets[i]) & ((1 << self.rand_bits[i]) - 1) for i in range(k))

    def pack_randomness(self, rands: Sequence[int]) -> int:
        return sum(r << self._offsets[i] for i, r in enumerate(rands))


def resolution_delta(spec: ProtocolSpec) -> Dyadic:
    """Universal gap bound ``2**-(reward bits + random bits)``.

    Every conditional expectation is a multiple of this, so distinct
    expected rewards at one node differ by at least this much.
    """
    return Dyadic(1, spec.reward_resolution_bits + spec.total_rand_bits)


@dataclass(frozen=True)
class Transcript:
    input: Any
    entries: tuple = ()

    @property
    def msgs(self) -> tuple:
        return self.entries[0::2]

    @property
    def arthur_msgs(self) -> tuple:
        return self.entries[1::2]


# -- batched views -----------------------------------------------------------


def _dtype(spec: ProtocolSpec):
    return np.int64 if spec.reward_resolution_bits + spec.total_rand_bits <= 62 else object


def reward_vector(spec: ProtocolSpec, x, msgs: tuple) -> np.ndarray:
    """Reward numerators (over ``2**p``) for every packed randomness vector."""
    size = 1 << spec.total_rand_bits
    p = spec.reward_resolution_bits
    dt = _dtype(spec)
    if spec.reward_vector is not None:
        vec = np.asarray(spec.reward_vector(x, msgs))
        if vec.shape != (size,):
            raise MalformedSpec(f"{spec.name}: batched reward has shape {vec.shape}, expected ({size},)")
        if vec.min() < 0 or vec.max() > (1 << p):
            raise MalformedSpec(f"{spec.name}: reward outside [0, 1] for messages {msgs}")
        return vec.astype(dt, copy=False)
    out = np.empty(size, dtype=dt)
    for r in range(size):
        v = spec.reward(x, msgs, spec.split_randomness(r))
        if not isinstance(v, Dyadic):
            v = Dyadic(v)
        if v < 0 or v > 1:
            raise MalformedSpec(f"{spec.name}: reward {v} outside [0, 1] for messages {msgs}")
        if v.exp > p:
            raise MalformedSpec(f"{spec.name}: reward {v} finer than 2^-{p}")
        out[r] = v.num << (p - v.exp)
    return out


def arthur_codes(spec: ProtocolSpec, x, msgs: tuple) -> tuple[np.ndarray, list]:
    """Arthur's message after ``msgs`` as integer codes over packed randomness.

    Returns ``(codes, labels)`` with ``labels[codes[r]]`` the actual message.
    """
    size = 1 << spec.total_rand_bits
    i = len(msgs)
    if spec.arthur_vector is not None:
        arr = np.asarray(spec.arthur_vector(x, msgs))
        if arr.shape != (size,):
            raise MalformedSpec(f"{spec.name}: batched Arthur rule has shape {arr.shape}")
        if arr.dtype != object:
            labels, codes = np.unique(arr, return_inverse=True)
            return codes.astype(np.int64), [v.item() for v in labels]
        return _codes_from_objects(arr)
    pbits = spec.rand_offsets[i]
    raw = [spec.arthur_rule(x, msgs, spec.split_randomness(r, i)) for r in range(1 << pbits)]
    codes, labels = _codes_from_objects(raw)
    if pbits < spec.total_rand_bits:
        codes = codes[np.arange(size, dtype=np.int64) & ((1 << pbits) - 1)]
    return codes, labels


def _codes_from_objects(values) -> tuple[np.ndarray, list]:
    index: dict = {}
    labels: list = []
    codes = np.empty(len(values), dtype=np.int64)
    for j, v in enumerate(values):
        c = index.get(v)
        if c is None:
            c = index[v] = len(labels)
            labels.append(v)
        codes[j] = c
    return codes, labels


# -- information sets ----------------------------------------------------------


class _ValueRow(Mapping):
    """Child values of a last-round Merlin node, kept as integer numerators."""

    def __init__(self, sums: np.ndarray, exp: int):
        self.sums = sums
        self.exp = exp

    def __getitem__(self, m) -> Dyadic:
        if not isinstance(m, (int, np.integer)) or not 0 <= m < len(self.sums):
            raise KeyError(m)
        return Dyadic(int(self.sums[m]), self.exp)

    def __iter__(self):
        return iter(range(len(self.sums)))

    def __len__(self):
        return len(self.sums)

    def best_second(self):
        best = self.sums.max()
        worse = self.sums[self.sums != best]
        second = None if len(worse) == 0 else Dyadic(int(worse.max()), self.exp)
        return Dyadic(int(best), self.exp), second


def _best_second(children: Mapping):
    if isinstance(children, _ValueRow):
        return children.best_second()
    best = max(children.values())
    worse = [v for v in children.values() if v != best]
    return best, (max(worse) if worse else None)


@dataclass
class InfoSet:
    """One observable transcript.

    Merlin nodes (even-length transcripts) carry ``children`` mapping each
    message to its value and the exact ``argmax`` set.  Arthur nodes map
    each possible reply to its probability; at the last round they are
    leaves whose value is the average reward over the belief.
    """

    transcript: tuple
    to_move: str
    value: Dyadic
    belief: frozenset
    argmax: frozenset = frozenset()
    children: dict = field(default_factory=dict)
    rational: bool = False

    @property
    def round(self) -> int:
        return (len(self.transcript) + 1) // 2 if self.to_move == "arthur" else len(self.transcript) // 2


class InfoSetTable(Mapping):
    """Every observable transcript of a solved protocol.

    Leaves below a last-round Merlin node whose children were summed in
    bulk are built on first access; all nodes on rational branches are
    stored.
    """

    def __init__(self, spec: ProtocolSpec, x, nodes: dict[tuple, InfoSet]):
        self.spec = spec
        self.input = x
        self.nodes = nodes
        self._bulk = [k for k, n in nodes.items() if isinstance(n.children, _ValueRow)]
        self._bulk_keys = set(self._bulk)
        self._mark_rational()

    def _leaf(self, key: tuple) -> Optional[InfoSet]:
        parent = self.nodes.get(key[:-1])
        if parent is None or not isinstance(parent.children, _ValueRow) or key[-1] not in parent.children:
            return None
        return InfoSet(key, "arthur", parent.children[key[-1]], parent.belief)

    def __getitem__(self, key) -> InfoSet:
        if isinstance(key, Transcript):
            key = key.entries
        key = tuple(key)
        node = self.nodes.get(key)
        if node is None and key:
            node = self._leaf(key)
        if node is None:
            raise KeyError(key)
        return node

    def __iter__(self):
        yield from self.nodes
        for pk in self._bulk:
            for m in self.nodes[pk].children:
                if pk + (m,) not in self.nodes:
                    yield pk + (m,)

    def __len__(self):
        extra = sum(len(self.nodes[pk].children) for pk in self._bulk)
        stored = sum(1 for k in self.nodes if k and k[:-1] in self._bulk_keys)
        return len(self.nodes) + extra - stored

    @property
    def root(self) -> InfoSet:
        return self.nodes[()]

    @property
    def root_value(self) -> Dyadic:
        return self.root.value

    @property
    def root_argmax(self) -> frozenset:
        return self.root.argmax

    def _mark_rational(self) -> None:
        stack = [()]
        while stack:
            key = stack.pop()
            node = self.nodes.get(key)
            if node is None:
                node = self.nodes[key] = self._leaf(key)
            node.rational = True
            if node.to_move == "merlin":
                stack.extend(key + (m,) for m in node.argmax)
            elif len(key) < 2 * self.spec.rounds - 1:
                stack.extend(key + (a,) for a in node.children)

    def rational_nodes(self) -> Iterator[InfoSet]:
        return (n for n in self.nodes.values() if n.rational)

    def rational_leaves(self) -> list[tuple]:
        """Observable transcripts ``(m_1, a_1, ..., m_k)`` of every rational branch."""
        depth = 2 * self.spec.rounds - 1
        return sorted((k for k, n in self.nodes.items() if n.rational and len(k) == depth), key=repr)


class _Solver:
    def __init__(self, spec: ProtocolSpec, x, max_enum: int = DEFAULT_MAX_ENUM):
        if spec.enumeration_size > max_enum:
            raise BoundExceeded(
                f"{spec.name}: enumeration size 2^{spec.enumeration_size.bit_length() - 1} exceeds bound {max_enum}"
            )
        self.spec = spec
        self.x = x
        self.k = spec.rounds
        self.p = spec.reward_resolution_bits
        self.size = 1 << spec.total_rand_bits

    def belief(self, mask: Optional[np.ndarray], rounds: int) -> frozenset:
        bits = self.spec.rand_offsets[rounds]
        if bits == 0:
            return frozenset({()})
        idx = np.arange(self.size, dtype=np.int64) if mask is None else np.flatnonzero(mask)
        prefixes = np.unique(idx & ((1 << bits) - 1))
        return frozenset(self.spec.split_randomness(int(r), rounds) for r in prefixes)

    def merlin(self, entries: tuple, mask, lc: int, nodes: dict, workers: int = 1) -> Dyadic:
        i = len(entries) // 2
        bel = self.belief(mask, i)
        if i == self.k - 1 and self.spec.leaf_sums is not None:
            sums = np.asarray(self.spec.leaf_sums(self.x, entries[0::2], mask))
            if sums.shape != (1 << self.spec.msg_bits[i],):
                raise MalformedSpec(f"{self.spec.name}: leaf sums have shape {sums.shape}")
            if sums.min() < 0 or sums.max() > (1 << (self.p + lc)):
                raise MalformedSpec(f"{self.spec.name}: expected reward outside [0, 1]")
            row = _ValueRow(sums, self.p + lc)
            best, _ = row.best_second()
            argmax = frozenset(int(m) for m in np.flatnonzero(sums == sums.max()))
            nodes[entries] = InfoSet(entries, "merlin", best, bel, argmax, row)
            return best
        msgs = range(1 << self.spec.msg_bits[i])
        if workers > 1 and len(msgs) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda m: self._child(entries + (m,), mask, lc, bel), msgs))
            children = {}
            for m, (v, sub) in zip(msgs, parts):
                children[m] = v
                nodes.update(sub)
        else:
            children = {m: self.arthur(entries + (m,), mask, lc, nodes, bel) for m in msgs}
        best = max(children.values())
        argmax = frozenset(m for m, v in children.items() if v == best)
        nodes[entries] = InfoSet(entries, "merlin", best, bel, argmax, children)
        return best

    def _child(self, entries, mask, lc, bel):
        sub: dict = {}
        return self.arthur(entries, mask, lc, sub, bel), sub

    def arthur(self, entries: tuple, mask, lc: int, nodes: dict, bel: Optional[frozenset] = None) -> Dyadic:
        i = len(entries) // 2
        msgs = entries[0::2]
        if bel is None:
            bel = self.belief(mask, i)
        if i == self.k - 1:
            vec = reward_vector(self.spec, self.x, msgs)
            total = int(vec.sum() if mask is None else vec[mask].sum())
            value = Dyadic(total, self.p + lc)
            nodes[entries] = InfoSet(entries, "arthur", value, bel)
            return value
        codes, labels = arthur_codes(self.spec, self.x, msgs)
        sel = codes if mask is None else codes[mask]
        counts = np.bincount(sel, minlength=len(labels))
        value = Dyadic(0)
        probs = {}
        for c in np.flatnonzero(counts):
            cnt = int(counts[c])
            if cnt & (cnt - 1):
                raise MalformedSpec(
                    f"{self.spec.name}: Arthur message {labels[c]!r} leaves {cnt} consistent randomness "
                    "vectors; beliefs must stay uniform over a power-of-two set"
                )
            sub_lc = cnt.bit_length() - 1
            sub_mask = codes == c if mask is None else mask & (codes == c)
            prob = Dyadic(cnt, lc)
            v = self.merlin(entries + (labels[c],), sub_mask, sub_lc, nodes)
            probs[labels[c]] = prob
            value = value + prob * v
        nodes[entries] = InfoSet(entries, "arthur", value, bel, children=probs)
        return value

    def locate(self, entries: tuple) -> tuple[Optional[np.ndarray], int]:
        """Belief mask for an arbitrary observable transcript."""
        spec = self.spec
        if len(entries) > 2 * self.k:
            raise InconsistentTranscript("transcript longer than the protocol")
        for t, m in enumerate(entries[0::2]):
            if not isinstance(m, (int, np.integer)) or not 0 <= m < 1 << spec.msg_bits[t]:
                raise InconsistentTranscript(f"message {m!r} does not fit round {t + 1} width {spec.msg_bits[t]}")
        mask = None
        msgs = entries[0::2]
        for t, a in enumerate(entries[1::2]):
            codes, labels = arthur_codes(spec, self.x, msgs[: t + 1])
            try:
                c = labels.index(a)
            except ValueError:
                raise InconsistentTranscript(f"no randomness produces Arthur message {a!r} in round {t + 1}")
            hit = codes == c
            mask = hit if mask is None else mask & hit
            if not mask.any():
                raise InconsistentTranscript(f"no randomness produces the Arthur messages up to round {t + 1}")
        cnt = self.size if mask is None else int(mask.sum())
        if cnt & (cnt - 1):
            raise MalformedSpec(f"{spec.name}: belief of size {cnt} is not a power of two")
        return mask, cnt.bit_length() - 1


def solve_rational(spec: ProtocolSpec, x, max_enum: int = DEFAULT_MAX_ENUM, workers: int = 1) -> InfoSetTable:
    """Backward induction over information sets.

    Returns the value, argmax set and belief at every observable transcript;
    ties are kept, never broken.  ``workers`` evaluates root messages
    concurrently; the result does not depend on it.
    """
    s = _Solver(spec, x, max_enum)
    nodes: dict = {}
    s.merlin((), None, spec.total_rand_bits, nodes, workers=workers)
    return InfoSetTable(spec, x, nodes)


def info_set_value(spec: ProtocolSpec, x, transcript, max_enum: int = DEFAULT_MAX_ENUM) -> Dyadic:
    """Expected reward from an arbitrary transcript prefix under rational play onward."""
    entries = tuple(transcript.entries if isinstance(transcript, Transcript) else transcript)
    s = _Solver(spec, x, max_enum)
    mask, lc = s.locate(entries)
    nodes: dict = {}
    if len(entries) == 2 * spec.rounds:
        vec = reward_vector(spec, x, entries[0::2])
        return Dyadic(int(vec.sum() if mask is None else vec[mask].sum()), s.p + lc)
    if len(entries) % 2:
        return s.arthur(entries, mask, lc, nodes)
    return s.merlin(entries, mask, lc, nodes)


def delta_exact(spec: ProtocolSpec, x, table: Optional[InfoSetTable] = None, **kw):
    """Smallest gap between the best and second-best distinct message value.

    Only nodes reachable by a rational Merlin count.  Returns ``NO_GAP``
    when every message is optimal everywhere.
    """
    table = table or solve_rational(spec, x, **kw)
    gap = NO_GAP
    for node in table.rational_nodes():
        if node.to_move != "merlin":
            continue
        _, second = _best_second(node.children)
        if second is not None:
            g = node.value - second
            if gap is NO_GAP or g < gap:
                gap = g
    return gap


@dataclass
class VerificationReport:
    passed: bool
    branches: int
    violations: list = field(default_factory=list)
    outputs: list = field(default_factory=list)


def verify_protocol(spec: ProtocolSpec, x, truth, table: Optional[InfoSetTable] = None, **kw) -> VerificationReport:
    """Check ``value == truth`` on every branch a rational Merlin can take."""
    table = table or solve_rational(spec, x, **kw)
    violations = []
    outputs = []
    leaves = table.rational_leaves()
    for leaf in leaves:
        out = spec.value(x, leaf[0::2], leaf[1::2])
        if out not in outputs:
            outputs.append(out)
        if out != truth:
            violations.append({"transcript": leaf, "output": out})
    return VerificationReport(not violations, len(leaves), violations, outputs)


# -- sampled play ------------------------------------------------------------


def play(spec: ProtocolSpec, x, strategy: Callable[[Transcript], int], randomness: Sequence[int]):
    """One interaction on a fixed randomness vector.

    A message that does not fit its round's width ends the run with
    reward 0 and the transcript truncated before it.
    """
    entries: list = []
    for i in range(spec.rounds):
        m = strategy(Transcript(x, tuple(entries)))
        if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or not 0 <= m < 1 << spec.msg_bits[i]:
            return Transcript(x, tuple(entries)), Dyadic(0)
        entries.append(int(m))
        msgs = tuple(entries[0::2])
        entries.append(spec.arthur_rule(x, msgs, tuple(randomness[: i + 1])))
    reward = spec.reward(x, tuple(entries[0::2]), tuple(randomness))
    return Transcript(x, tuple(entries)), Dyadic(reward)


def run_interaction(spec: ProtocolSpec, x, strategy: Callable[[Transcript], int], seed: int):
    rng = random.Random(seed)
    rands = tuple(rng.getrandbits(b) if b else 0 for b in spec.rand_bits)
    return play(spec, x, strategy, rands)


def argmax_strategy(table: InfoSetTable, choose: Callable = min) -> Callable[[Transcript], int]:
    """Deterministic strategy picking ``choose(argmax)`` at every Merlin node."""

    def strategy(t: Transcript) -> int:
        return choose(table[t.entries[: 2 * (len(t.entries) // 2)]].argmax)

    return strategy


# -- reports -----------------------------------------------------------------


def jsonable(v):
    if isinstance(v, Dyadic) or v is NO_GAP:
        return str(v)
    if isinstance(v, (tuple, list)):
        return [jsonable(u) for u in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def solver_report(spec: ProtocolSpec, x, truth=None, input_id=None, timing: bool = False, **kw) -> dict:
    t0 = time.perf_counter()
    table = solve_rational(spec, x, **kw)
    gap = delta_exact(spec, x, table)
    declared = spec.declared_delta(x)
    ver = verify_protocol(spec, x, truth, table)
    report = {
        "input": str(x) if input_id is None else input_id,
        "protocol": spec.name,
        "root_value": str(table.root_value),
        "root_argmax": sorted(int(m) for m in table.root_argmax),
        "decision": jsonable(ver.outputs[0]) if len(ver.outputs) == 1 else jsonable(ver.outputs),
        "delta_exact": str(gap),
        "declared_delta": str(declared),
        "delta_ok": gap is NO_GAP or declared <= gap,
        "delta_scope": "rational-reachable nodes",
        "nodes": len(table),
    }
    if spec.meta.get("nesting"):
        report["nesting_depth"] = spec.meta["nesting"]
    if truth is not None:
        report["truth"] = jsonable(truth)
        report["passed"] = ver.passed
        report["branches"] = ver.branches
        if not ver.passed:
            report["witness"] = jsonable(list(ver.violations[0]["transcript"]))
    if timing:
        report["wall_time"] = round(time.perf_counter() - t0, 6)
    return report
