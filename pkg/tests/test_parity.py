import json

import numpy as np
import pytest

from ratproofs.circuits import BoundExceeded
from ratproofs.dyadic import Dyadic, ONE, ZERO
from ratproofs.parity import (
    alternation_counts,
    bernoulli_poly,
    brier_sampler,
    direct_expectation,
    flat_sampler,
    parity_audit,
    sign_alternations,
    width_for_alpha,
)


def test_brier_polynomial_closed_form():
    sp = brier_sampler(2)
    # Q_m(p) = 1 - (q^2 - 2pq + p) with q = m/4
    for m in range(5):
        q = Dyadic(m, 2)
        for k in range(5):
            p = Dyadic(k, 2)
            assert bernoulli_poly(sp, m)(p) == ONE - (q * q - (p * q).scale(-1) + p)


@pytest.mark.parametrize("make", [lambda: brier_sampler(3), lambda: brier_sampler(4, 2), lambda: flat_sampler(3, 1, 2, [0, 1, Dyadic(1, 1), Dyadic(3, 2)])])
def test_polynomial_agrees_with_enumeration(make):
    sp = make()
    for m in range(1 << sp.msg_bits):
        q = bernoulli_poly(sp, m)
        assert q.degree <= sp.d
        for k in range((1 << sp.n) + 1):
            assert q(Dyadic(k, sp.n)) == direct_expectation(sp, m, k)


@pytest.mark.parametrize("n", range(1, 7))
def test_full_width_brier_computes_parity(n):
    rep = parity_audit(brier_sampler, n)
    assert rep.passed
    assert all(arg == [k] for k, arg in enumerate(rep.argmax))


def test_narrow_brier_fails():
    rep = parity_audit(brier_sampler(8, 4))
    assert len(rep.failures) == 136
    assert rep.failures[0]["k"] == 1


def test_flat_fixtures_fail_on_half():
    assert len(parity_audit(flat_sampler(3, 0)).failures) == 4
    assert len(parity_audit(flat_sampler(3, 1)).failures) == 5


def test_failure_record_shape():
    f = parity_audit(flat_sampler(2, 0)).failures[0]
    assert f == {"k": 1, "argmax": [0, 1], "wrong_parity": 0}


def test_workers_do_not_change_report():
    a = parity_audit(brier_sampler(6, 3))
    b = parity_audit(brier_sampler(6, 3), workers=4)
    assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()


def test_report_serialisations():
    rep = parity_audit(brier_sampler(2), alpha=Dyadic(1, 1))
    doc = json.loads(rep.to_json())
    assert doc["computes_parity"] and doc["alpha"] == "1/2^1"
    lines = rep.to_csv().splitlines()
    assert lines[0] == "section,key,values"
    assert sum(1 for ln in lines if ln.startswith("k,")) == 5


def test_sign_alternations_bounded_by_degree():
    sp = brier_sampler(3)
    assert sign_alternations(sp, 2, 5) == 1
    assert sign_alternations(sp, 4, 4) == 0


def test_alternation_matrix_matches_pairwise():
    sp = brier_sampler(3)
    M = alternation_counts(sp)
    for a in range(9):
        for b in range(9):
            assert M[a, b] == sign_alternations(sp, a, b)
    assert M.max() <= sp.d


def test_width_for_alpha():
    assert width_for_alpha(Dyadic(1, 1), 7) == 4
    assert width_for_alpha(Dyadic(1, 2), 8) == 2


def test_bounds():
    with pytest.raises(BoundExceeded):
        parity_audit(brier_sampler(21))
    with pytest.raises(ValueError):
        brier_sampler(3, 5)
