import dataclasses

import numpy as np
import pytest

from ratproofs.circuits import threshold_circuit
from ratproofs.dyadic import Dyadic, ZERO
from ratproofs.elicit import (
    claim_grid_bits,
    elicit_expectation,
    elicitation_audit,
    encode_claim,
    split_at_round,
)
from ratproofs.protocol import info_set_value, solve_rational, verify_protocol
from ratproofs.protocols import make_pp_vote, pp_oracle_round
from ratproofs.toys import make_revealed_vote, random_two_round


@pytest.fixture(scope="module")
def or_round(or2):
    return pp_oracle_round([or2, or2], make_pp_vote)


def test_claim_grid(or_round):
    assert claim_grid_bits(or_round) == or_round.reward_resolution_bits + 3
    P = claim_grid_bits(or_round)
    assert encode_claim(or_round, Dyadic(1, 1), 1) == (1 << (P - 1)) | (1 << (P + 1))


def test_elicited_claim_is_prefix_value(or_round):
    prefix = (1, 0)
    tilde = elicit_expectation(or_round, 1, "x")
    outs = verify_protocol(tilde, ("x", prefix), None).outputs
    target = info_set_value(or_round, "x", prefix)
    assert target == Dyadic(7, 4)
    assert outs == [(target, 1)]


def test_invalid_claim_pays_zero(or_round):
    tilde = elicit_expectation(or_round, 1, "x")
    P = claim_grid_bits(or_round)
    bad = (1 << P) + 1
    assert tilde.reward(("x", (1, 0)), (bad,), (0,)) == ZERO
    assert int(tilde.reward_vector(("x", (1, 0)), (bad,)).sum()) == 0


def test_batch_matches_scalar(or_round):
    tilde = elicit_expectation(or_round, 1, "x")
    xt = ("x", (1, 1))
    rng = np.random.default_rng(2)
    for m0 in rng.integers(0, 1 << tilde.msg_bits[0], size=12):
        vec = tilde.reward_vector(xt, (int(m0),))
        for r in range(len(vec)):
            want = tilde.reward(xt, (int(m0),), tilde.split_randomness(r))
            assert Dyadic(int(vec[r]), tilde.reward_resolution_bits) == want


def _same_tables(a, b):
    assert a.root_value == b.root_value
    assert a.root_argmax == b.root_argmax


@pytest.mark.parametrize("seed", range(4))
def test_leaf_sums_matches_per_message_path(seed):
    spec = random_two_round(np.random.default_rng(seed), (1, 1), (2, 1), p=1)
    t = solve_rational(spec, "r")
    for key, node in t.nodes.items():
        if len(key) != 2 or not node.rational:
            continue
        for fixed in (None, Dyadic(3, 5)):
            tilde = elicit_expectation(spec, 1, "r", fixed_claim=fixed)
            slow = dataclasses.replace(tilde, leaf_sums=None)
            _same_tables(solve_rational(tilde, ("r", key)), solve_rational(slow, ("r", key)))


def test_audit_on_oracle_round(or_round):
    rep = elicitation_audit(or_round, "x", 1)
    assert rep.passed, rep.failures
    assert rep.prefixes == 2
    assert rep.claims_checked > rep.prefixes * (1 << claim_grid_bits(or_round))


@pytest.mark.parametrize("seed", range(3))
def test_audit_on_random_protocols(seed):
    spec = random_two_round(np.random.default_rng(10 + seed), (1, 1), (2, 1), p=1)
    assert elicitation_audit(spec, "r", 1).passed


def test_off_grid_claim_loses(or_round):
    prefix = (1, 0)
    target = info_set_value(or_round, "x", prefix)
    delta = or_round.declared_delta("x")
    tilde = elicit_expectation(or_round, 1, "x")
    best = solve_rational(tilde, ("x", prefix)).root_value
    E = target - delta.scale(1)
    fixed = elicit_expectation(or_round, 1, "x", fixed_claim=E)
    lost = best - solve_rational(fixed, ("x", prefix)).root_value
    assert lost == delta.scale(2) * (E - target) ** 2


def test_split_round_range(or_round):
    for i in (0, 2):
        with pytest.raises(ValueError):
            elicit_expectation(or_round, i, "x")
        with pytest.raises(ValueError):
            split_at_round(or_round, "x", i)


def test_split_matches_direct(or_round):
    rep = split_at_round(or_round, "x", 1)
    assert rep.passed, rep.mismatches
    assert rep.nodes_compared >= 3 and rep.oracle_calls >= 2


def test_split_on_revealed_vote():
    spec = make_revealed_vote(threshold_circuit(2, 3))
    assert split_at_round(spec, "x", 1).passed


def test_nesting_depth_recorded(or_round):
    tilde = elicit_expectation(or_round, 1, "x")
    assert tilde.meta["nesting"] == 1
    assert tilde.declared_delta(None) == Dyadic(1, tilde.reward_resolution_bits + tilde.total_rand_bits)
