"""Acceptance criteria, one test each, with exact checks and wall-time limits.

Each test appends a ``PASS``/``FAIL`` line to ``ACCEPTANCE_LINES``; the
summary is printed at the end of the pytest run, or directly when this
file is executed as a script.
"""

import itertools
import random
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from ratproofs.circuits import (
    CountingInstance,
    TieNotAllowed,
    constant_circuit,
    count_accepting,
    membership,
    random_circuit,
    threshold_circuit,
)
from ratproofs.composition import (
    adaptive_and,
    check_composition,
    compose_with_machine,
    composition_reward,
    equal_majorities,
    majority_of_three,
)
from ratproofs.corpus import generate_corpus, write_corpus
from ratproofs.dyadic import Dyadic, HALF
from ratproofs.elicit import elicit_expectation, elicitation_audit
from ratproofs.parity import (
    alternation_counts,
    bernoulli_poly,
    brier_sampler,
    direct_expectation,
    flat_sampler,
    parity_audit,
)
from ratproofs.protocol import NO_GAP, delta_exact, solve_rational, verify_protocol
from ratproofs.protocols import (
    constant_protocol,
    make_brier_count,
    make_pp_vote,
    one_bit_transform,
    pp_oracle_round,
)
from ratproofs.selection import compare_expectations_prob, knockout_argmax
from ratproofs.toys import make_revealed_vote, random_two_round


def _record(num, title, ok, elapsed, limit, detail=""):
    ok = ok and elapsed < limit
    line = f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {title}: {detail} ({elapsed:.2f} s, limit {limit} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _majority(c):
    return membership(CountingInstance(c, "majority"))


def _corpus_protocols():
    """Protocols of every construction at small sizes, paired with an input label."""
    out = []
    for e in generate_corpus(21, 8, 4):
        out.append((make_pp_vote(e.circuit), "c"))
        out.append((make_brier_count(e.circuit), "c"))
        out.append((make_brier_count(CountingInstance(e.circuit, "count"), width=2), "c"))
    rng = np.random.default_rng(5)
    for _ in range(4):
        out.append((random_two_round(rng), "r"))
    for c0, c1 in [(threshold_circuit(2, 3), threshold_circuit(3, 6)), (threshold_circuit(2, 1), threshold_circuit(1, 0))]:
        out.append((pp_oracle_round([c0, c1], make_pp_vote), "x"))
        out.append((make_revealed_vote(c0), "x"))
    out.append((constant_protocol(HALF), None))
    out.append((constant_protocol(Dyadic(3, 2), msg_bits=3), None))
    return out


def test_criterion_01_majority_vote():
    t0 = time.perf_counter()
    entries = generate_corpus(2024, 120, 10)
    bad = 0
    for e in entries:
        n = e.circuit.n_inputs
        spec = make_pp_vote(e.circuit)
        table = solve_rational(spec, "c")
        rep = verify_protocol(spec, "c", e.majority, table)
        if not rep.passed or table.root_value != Dyadic(max(e.count, (1 << n) - e.count), n):
            bad += 1
    ok = _record(1, "pp_vote suite", bad == 0, time.perf_counter() - t0, 10, f"{len(entries) - bad}/{len(entries)} circuits, n <= 10")
    assert ok


def test_criterion_02_compare_expectations():
    t0 = time.perf_counter()
    rng = random.Random(99)
    bad = pairs = 0
    while pairs < 60:
        c0 = random_circuit(rng, rng.randint(1, 8), rng.randint(1, 12))
        c1 = random_circuit(rng, rng.randint(1, 8), rng.randint(1, 12))
        e0 = Dyadic(count_accepting(c0), c0.n_inputs)
        e1 = Dyadic(count_accepting(c1), c1.n_inputs)
        p01 = compare_expectations_prob(c0, c1)
        p10 = compare_expectations_prob(c1, c0)
        if p01 != HALF + (e1 - e0).scale(1) or p01 + p10 != 1:
            bad += 1
        pairs += 1
    ok = _record(2, "compare-expectations exactness", bad == 0, time.perf_counter() - t0, 5, f"{pairs - bad}/{pairs} pairs, n <= 8")
    assert ok


def test_criterion_03_one_bit_argmax():
    t0 = time.perf_counter()
    protos = _corpus_protocols()
    bad = nodes = 0
    for spec, x in protos:
        before = solve_rational(spec, x)
        after = solve_rational(one_bit_transform(spec), x)
        for key, node in before.items():
            nodes += 1
            if after[key].value != node.value or after[key].argmax != node.argmax:
                bad += 1
    ok = _record(3, "one-bit transform keeps values and argmax", bad == 0, time.perf_counter() - t0, 30, f"{len(protos)} protocols, {nodes} nodes, {bad} mismatches")
    assert ok


def test_criterion_04_elicitation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    hosts = []
    for msg, rand in [((1, 1), (2, 1)), ((2, 2), (3, 2)), ((2, 1), (3, 2)), ((1, 2), (2, 2)), ((2, 2), (4, 2)), ((1, 1), (5, 3))]:
        hosts.append((random_two_round(rng, msg, rand, p=1), "r"))
    hosts.append((pp_oracle_round([threshold_circuit(2, 3), threshold_circuit(2, 3)], make_pp_vote), "x"))
    hosts.append((make_revealed_vote(threshold_circuit(3, 5)), "x"))
    bad = prefixes = claims = 0
    for spec, x in hosts:
        assert max(spec.msg_bits) <= 4 and spec.total_rand_bits <= 10
        rep = elicitation_audit(spec, x, 1)
        prefixes += rep.prefixes
        claims += rep.claims_checked
        bad += len(rep.failures)
    ok = _record(4, "elicited claim equals prefix value; other claims lose exactly", bad == 0, time.perf_counter() - t0, 30, f"{len(hosts)} protocols, {prefixes} prefixes, {claims} claims")
    assert ok


def _composition_instances():
    pool = [constant_circuit(1, 0), constant_circuit(1, 1), threshold_circuit(2, 1), threshold_circuit(2, 3), threshold_circuit(3, 2), threshold_circuit(3, 5)]
    out = []
    for m in (equal_majorities, adaptive_and):
        out += [(m, x) for x in itertools.product(pool, repeat=2)]
    small = pool[:4]
    out += [(majority_of_three, x) for x in itertools.product(small[:2], repeat=3)]
    out += [(majority_of_three, x) for x in [(small[2], small[3], small[1]), (small[3], small[2], small[0]), (pool[4], pool[5], pool[4])]]
    return out


def test_criterion_05_composition():
    t0 = time.perf_counter()
    insts = _composition_instances()
    bad = branches = 0
    for machine, x in insts:
        rep = check_composition(machine, make_pp_vote, x, _majority)
        branches += rep.branches
        if not rep.passed or rep.verdict != machine.run(x, _majority)[0]:
            bad += 1
    formula_ok = all(
        composition_reward(d, [r1, r2]) == r1.scale(1) + d.scale(2) * r2 + (d * d).scale(3)
        for d in (Dyadic(1, 1), Dyadic(1, 2), Dyadic(3, 3))
        for r1 in (Dyadic(0), Dyadic(1, 1), Dyadic(1))
        for r2 in (Dyadic(0), Dyadic(3, 2), Dyadic(1))
    )
    spec = compose_with_machine(equal_majorities, make_pp_vote, (constant_circuit(2, 1), constant_circuit(2, 1)))
    root_ok = solve_rational(spec, "x").root_value == Dyadic(73, 7)
    ok = bad == 0 and formula_ok and root_ok and len(insts) >= 50
    ok = _record(5, "composition decisions and properties a/b/c", ok, time.perf_counter() - t0, 60, f"{len(insts) - bad}/{len(insts)} instances, {branches} branches, l=2 formula {'exact' if formula_ok and root_ok else 'WRONG'}")
    assert ok


def test_criterion_06_oracle_round():
    t0 = time.perf_counter()
    rng = random.Random(6)
    bad = done = 0
    for q in (1, 2, 3, 4):
        made = 0
        while made < (6 if q < 4 else 3):
            circs = []
            while len(circs) < 1 << q:
                c = random_circuit(rng, rng.randint(1, 6), rng.randint(1, 8))
                if 2 * count_accepting(c) != 1 << c.n_inputs:
                    circs.append(c)
            truths = [_majority(c) for c in circs]
            if 2 * sum(truths) == len(truths):
                continue
            spec = pp_oracle_round(circs, make_pp_vote)
            want = int(2 * sum(truths) > len(truths))
            rep = verify_protocol(spec, "x", want)
            if not rep.passed or rep.outputs != [want]:
                bad += 1
            made += 1
            done += 1
    ok = _record(6, "oracle-round bit equals the y-majority", bad == 0, time.perf_counter() - t0, 30, f"{done - bad}/{done} instances, y <= 4 bits, inner n <= 6")
    assert ok


def test_criterion_07_knockout():
    t0 = time.perf_counter()
    protos = [(s, x) for s, x in _corpus_protocols() if s.rounds == 1]
    protos += [(constant_protocol(Dyadic(1, 1), msg_bits=b), None) for b in (1, 2, 4)]
    bad = 0
    for spec, x in protos:
        arg = solve_rational(spec, x).root_argmax
        for comp in ("exact", "oracle"):
            if knockout_argmax(spec, x, comparator=comp) not in arg:
                bad += 1
    ok = _record(7, "knockout winner lies in the argmax set", bad == 0, time.perf_counter() - t0, 10, f"{len(protos)} protocols x 2 comparators, {bad} misses")
    assert ok


def test_criterion_08_delta_discipline():
    t0 = time.perf_counter()
    protos = _corpus_protocols()
    c = threshold_circuit(2, 3)
    protos.append((compose_with_machine(adaptive_and, make_pp_vote, (c, threshold_circuit(2, 1))), "x"))
    protos.append((compose_with_machine(equal_majorities, make_revealed_vote, (constant_circuit(1, 1), constant_circuit(1, 0))), "x"))
    protos.append((one_bit_transform(make_pp_vote(c)), "x"))
    host = pp_oracle_round([c, c], make_pp_vote)
    protos.append((elicit_expectation(host, 1, "x"), ("x", (1, 0))))
    bad = []
    for spec, x in protos:
        d = delta_exact(spec, x)
        if d is NO_GAP:
            if spec.name != "constant":
                bad.append(spec.name)
        elif not (d > 0 and spec.declared_delta(x) <= d):
            bad.append(spec.name)
    ok = _record(8, "declared gap <= exact gap", not bad, time.perf_counter() - t0, 30, f"{len(protos)} protocols, violations: {bad or 'none'}")
    assert ok


def test_criterion_09_parity_mechanics():
    t0 = time.perf_counter()
    audited = [brier_sampler(n) for n in range(1, 9)] + [brier_sampler(8, 4), brier_sampler(5, 3), flat_sampler(3, 0), flat_sampler(3, 1)]
    poly_bad = alt_bad = 0
    for sp in audited:
        polys = [bernoulli_poly(sp, m) for m in range(1 << sp.msg_bits)]
        for m, q in enumerate(polys):
            if q.degree > sp.d:
                poly_bad += 1
            if sp.n <= 5:
                ks = range((1 << sp.n) + 1)
            else:
                ks = range(0, (1 << sp.n) + 1, 17)
            poly_bad += sum(1 for k in ks if q(Dyadic(k, sp.n)) != direct_expectation(sp, m, k))
        alt_bad += int((alternation_counts(sp, polys) > sp.d).sum())
    full = [len(parity_audit(brier_sampler, n).failures) for n in range(1, 9)]
    narrow = len(parity_audit(brier_sampler(8, 4)).failures)
    ok = poly_bad == 0 and alt_bad == 0 and not any(full) and narrow >= 1
    ok = _record(9, "parity-lab mechanics", ok, time.perf_counter() - t0, 120, f"poly mismatches {poly_bad}, alternation excess {alt_bad}, full-width failures {sum(full)}, width-4 n=8 failures {narrow}")
    assert ok


def _cli(args):
    return subprocess.run([sys.executable, "-m", "ratproofs.cli", *args], capture_output=True, check=False)


def test_criterion_10_determinism(tmp_path):
    t0 = time.perf_counter()
    corpus = tmp_path / "corpus.txt"
    corpus.write_text(write_corpus(generate_corpus(10, 8, 4)))
    configs = [
        ["run", "--protocol", p, "--instances", str(corpus), "--seed", "3"]
        for p in ("pp-vote", "brier-count", "one-bit", "pp-oracle-round", "compose", "knockout", "compare-exp")
    ]
    configs.append(["audit-parity", "--n", "6", "--width", "3", "--expect-failure"])
    configs.append(["audit-parity", "--n", "5", "--format", "csv"])
    configs.append(["gen-corpus", "--seed", "8", "--count", "12", "--n", "5"])
    differ = []
    for cfg in configs:
        outs = {_cli(cfg + ["--workers", str(w)]).stdout for w in (1, 2, 8)}
        if len(outs) != 1 or not next(iter(outs)):
            differ.append(cfg[:3])
    ok = _record(10, "byte-identical reports under 1/2/8 workers", not differ, time.perf_counter() - t0, 60, f"{len(configs)} configs, differing: {differ or 'none'}")
    assert ok


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    print("\n".join(ACCEPTANCE_LINES))
    sys.exit(code)
