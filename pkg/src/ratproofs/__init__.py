"""Exact simulation and verification of rational Arthur-Merlin protocols."""

from .dyadic import Dyadic, DyadicPolynomial, dyadic_arith, poly_eval
from .circuits import (
    BooleanCircuit,
    CountingInstance,
    TieNotAllowed,
    BoundExceeded,
    parse_circuit,
    serialize_circuit,
    count_accepting,
    membership,
    threshold_circuit,
    constant_circuit,
)
from .protocol import (
    NO_GAP,
    ProtocolSpec,
    Transcript,
    InfoSetTable,
    solve_rational,
    info_set_value,
    delta_exact,
    verify_protocol,
    run_interaction,
    resolution_delta,
    argmax_strategy,
)
from .protocols import make_pp_vote, make_brier_count, one_bit_transform, pp_oracle_round, constant_protocol
from .elicit import elicit_expectation, elicitation_audit, split_at_round
from .composition import OracleMachine, Halt, compose_with_machine, check_composition
from .selection import compare_expectations_prob, knockout_argmax
from .parity import SamplerProtocol, bernoulli_poly, parity_audit, sign_alternations, brier_sampler

__version__ = "0.1.0"
