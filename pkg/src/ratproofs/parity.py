"""Sampler protocols and the parity audit.

A sampler protocol sees the count ``k`` only through ``d`` i.i.d. bits
``r`` with ``Pr[r_t = 1] = p = k / 2**n``, plus ``s`` uniform bits ``a``.
The expected reward of a message is then a polynomial ``Q_m(p)`` of degree
at most ``d``.  Two such polynomials cross at most ``d`` times, so with few
samples the best message cannot track the parity of ``k`` across all
``2**n + 1`` values.  The audit checks this exhaustively at fixed ``n``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .circuits import ENUMERATION_BOUND, BoundExceeded
from .dyadic import ONE, ZERO, Dyadic, DyadicPolynomial

__all__ = [
    "SamplerProtocol",
    "brier_sampler",
    "flat_sampler",
    "width_for_alpha",
    "bernoulli_poly",
    "direct_expectation",
    "AuditReport",
    "parity_audit",
    "sign_alternations",
    "alternation_counts",
    "MAX_SAMPLER_ENUM",
]

MAX_SAMPLER_ENUM = 1 << 22


@dataclass(frozen=True, eq=False)
class SamplerProtocol:
    n: int
    msg_bits: int
    s: int
    d: int
    reward: Callable[[int, int, int], Dyadic]
    value: Callable[[int], int]
    name: str = "sampler"

    def check_bounds(self, max_n: int = ENUMERATION_BOUND) -> None:
        if not 0 <= self.n <= max_n:
            raise BoundExceeded(f"n = {self.n} outside 0..{max_n}")
        size = 1 << (self.msg_bits + self.s + self.d)
        if size > MAX_SAMPLER_ENUM:
            raise BoundExceeded(f"sampler enumeration 2^{size.bit_length() - 1} exceeds 2^{MAX_SAMPLER_ENUM.bit_length() - 1}")


def width_for_alpha(alpha: Dyadic, n: int) -> int:
    """Message width ``ceil(alpha * n)``."""
    return -((-Dyadic(alpha).num * n) >> Dyadic(alpha).exp)


def brier_sampler(n: int, width: Optional[int] = None) -> SamplerProtocol:
    """The counting protocol's quadratic score as a one-sample sampler.

    Full width ``n + 1`` claims ``q = m/2**n`` (``m > 2**n`` pays 0);
    width ``w <= n`` claims ``q = m/2**w``.  The output is ``m mod 2``.
    """
    full = width is None or width == n + 1
    w = n + 1 if full else width
    if not 1 <= w <= n + 1:
        raise ValueError(f"width must lie in 1..{n + 1}")
    scale = n if full else w

    def reward(m, a, r):
        if full and m > 1 << n:
            return ZERO
        return ONE - (Dyadic(m, scale) - r) ** 2

    return SamplerProtocol(n, w, 0, 1, reward, lambda m: m & 1, "brier" if full else f"brier-w{w}")


def flat_sampler(n: int, phi: int, msg_bits: int = 1, rewards=None) -> SamplerProtocol:
    """Sampler that ignores its samples (``d = 0``); every message has output ``phi``."""
    rewards = [Dyadic(1, 1)] * (1 << msg_bits) if rewards is None else [Dyadic(r) for r in rewards]
    return SamplerProtocol(n, msg_bits, 0, 0, lambda m, a, r: rewards[m], lambda m: phi, f"flat-phi{phi}")


def bernoulli_poly(sp: SamplerProtocol, m: int) -> DyadicPolynomial:
    """``Q_m(p) = 2**-s sum_a sum_r R(m, a, r) p**|r| (1-p)**(d-|r|)``, expanded."""
    sp.check_bounds()
    d = sp.d
    by_weight = [ZERO] * (d + 1)
    for a in range(1 << sp.s):
        for r in range(1 << d):
            by_weight[r.bit_count()] += Dyadic(sp.reward(m, a, r))
    coeffs = [ZERO] * (d + 1)
    for w, S in enumerate(by_weight):
        if not S:
            continue
        # p^w (1-p)^(d-w) = sum_i C(d-w, i) (-1)^i p^(w+i)
        for i in range(d - w + 1):
            coeffs[w + i] += S * (math.comb(d - w, i) * (-1) ** i)
    return DyadicPolynomial(c.scale(sp.s) for c in coeffs)


def direct_expectation(sp: SamplerProtocol, m: int, k: int) -> Dyadic:
    """Expected reward of ``m`` at ``p = k/2**n`` by weighted enumeration of ``(a, r)``."""
    p = Dyadic(k, sp.n)
    q = ONE - p
    total = ZERO
    for a in range(1 << sp.s):
        for r in range(1 << sp.d):
            w = r.bit_count()
            total += Dyadic(sp.reward(m, a, r)) * p**w * q ** (sp.d - w)
    return total.scale(sp.s)


@dataclass
class AuditReport:
    n: int
    msg_bits: int
    d: int
    s: int
    protocol: str
    failures: list = field(default_factory=list)
    polynomials: dict = field(default_factory=dict)
    argmax: list = field(default_factory=list)
    alpha: Optional[str] = None
    phi: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "n": self.n,
            "msg_bits": self.msg_bits,
            "d": self.d,
            "s": self.s,
            "alpha": self.alpha,
            "computes_parity": self.passed,
            "failure_count": len(self.failures),
            "failures": self.failures,
            "scope": "exhaustive over k in 0..2^n and every message; a constructive instance, not a proof over all protocols",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["section", "key", "values"])
        for m, q in sorted(self.polynomials.items()):
            w.writerow(["poly", m, " ".join(str(c) for c in q.coeffs)])
        for k, arg in enumerate(self.argmax):
            ok = all(self.phi[m] == k & 1 for m in arg)
            w.writerow(["k", k, f"argmax={'|'.join(map(str, arg))} parity={k & 1} correct={int(ok)}"])
        return buf.getvalue()


def _numerators(polys: list[DyadicPolynomial], n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer matrices ``C`` and ``K`` with ``(C @ K)[m, k]`` proportional to ``Q_m(k/2**n)``."""
    E = max((c.exp for q in polys for c in q.coeffs), default=0)
    C = np.zeros((len(polys), d + 1), dtype=object)
    for m, q in enumerate(polys):
        for j, c in enumerate(q.coeffs):
            C[m, j] = c.numerator_at(E)
    ks = np.arange((1 << n) + 1, dtype=object)
    K = np.stack([ks**j * (1 << (n * (d - j))) for j in range(d + 1)])
    return C, K


def parity_audit(
    family: Union[SamplerProtocol, Callable[[int], SamplerProtocol]],
    n: Optional[int] = None,
    workers: int = 1,
    alpha: Optional[Dyadic] = None,
) -> AuditReport:
    """Check, for every ``k`` in ``0..2**n``, that every optimal message has output ``k mod 2``."""
    sp = family if isinstance(family, SamplerProtocol) else family(n)
    sp.check_bounds()
    n = sp.n
    msgs = range(1 << sp.msg_bits)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            polys = list(pool.map(lambda m: bernoulli_poly(sp, m), msgs))
    else:
        polys = [bernoulli_poly(sp, m) for m in msgs]
    phi = [sp.value(m) for m in msgs]
    C, K = _numerators(polys, n, sp.d)

    def chunk(cols):
        vals = C.dot(K[:, cols])
        out = []
        for j, k in enumerate(cols):
            col = vals[:, j]
            best = max(col)
            out.append((k, [m for m in msgs if col[m] == best]))
        return out

    cols = list(range((1 << n) + 1))
    parts = [cols[i : i + 64] for i in range(0, len(cols), 64)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = [r for part in pool.map(chunk, parts) for r in part]
    else:
        rows = [r for part in parts for r in chunk(part)]

    rep = AuditReport(n, sp.msg_bits, sp.d, sp.s, sp.name, alpha=None if alpha is None else str(Dyadic(alpha)))
    rep.polynomials = dict(enumerate(polys))
    rep.phi = phi
    for k, arg in rows:
        rep.argmax.append(arg)
        wrong = sorted({phi[m] for m in arg if phi[m] != k & 1})
        if wrong:
            rep.failures.append({"k": k, "argmax": arg, "wrong_parity": wrong[0]})
    return rep


def sign_alternations(sp: SamplerProtocol, m0: int, m1: int) -> int:
    """Sign changes of ``Q_m0 - Q_m1`` along ``k/2**n``, zeros skipped."""
    diff = bernoulli_poly(sp, m0) - bernoulli_poly(sp, m1)
    if diff.is_zero():
        return 0
    C, K = _numerators([diff], sp.n, max(diff.degree, 0))
    vals = C.dot(K)[0]
    signs = [1 if v > 0 else -1 for v in vals if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _sign_changes(rows: np.ndarray) -> np.ndarray:
    """Sign changes along each row of an integer matrix, zeros skipped."""
    sg = (rows > 0).astype(np.int8) - (rows < 0).astype(np.int8)
    pos = np.where(sg != 0, np.arange(sg.shape[1]), -1)
    last = np.maximum.accumulate(pos, axis=1)
    filled = np.take_along_axis(sg, np.maximum(last, 0), axis=1)
    filled[last < 0] = 0
    a, b = filled[:, :-1], filled[:, 1:]
    return ((a != 0) & (b != 0) & (a != b)).sum(axis=1)


def alternation_counts(sp: SamplerProtocol, polys: Optional[list] = None) -> np.ndarray:
    """Matrix of :func:`sign_alternations` over every message pair, computed in bulk."""
    polys = polys or [bernoulli_poly(sp, m) for m in range(1 << sp.msg_bits)]
    C, K = _numerators(polys, sp.n, sp.d)
    V = C.dot(K)
    if max(abs(int(v)) for v in V.ravel()).bit_length() < 61:
        V = V.astype(np.int64)
    M = len(polys)
    out = np.zeros((M, M), dtype=np.int64)
    for m0 in range(M - 1):
        cnt = _sign_changes(V[m0 + 1 :] - V[m0])
        out[m0, m0 + 1 :] = cnt
        out[m0 + 1 :, m0] = cnt
    return out
