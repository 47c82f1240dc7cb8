"""Asking Merlin for the value of a position mid-game.

Take a 2-round protocol: a majority over two circuits, where Merlin first
votes on the outer majority and then on the circuit Arthur picks.  After
round 1 we can hand the rest of the game to a scoring protocol that pays
Merlin for reporting the expected remaining reward.  The best report is
exactly that value, and wrong reports lose a quadratic amount.
"""

from ratproofs import info_set_value, solve_rational, threshold_circuit
from ratproofs.elicit import elicit_expectation, elicitation_audit, split_at_round
from ratproofs.protocol import verify_protocol
from ratproofs.protocols import make_pp_vote, pp_oracle_round

spec = pp_oracle_round([threshold_circuit(2, 3), threshold_circuit(3, 6)], make_pp_vote)
print("rounds:", spec.rounds, "root value:", solve_rational(spec, "x").root_value.to_fraction())

prefix = (1, 0)  # Merlin voted 1, Arthur picked the first circuit
tilde = elicit_expectation(spec, 1, "x")
(claim, output), = verify_protocol(tilde, ("x", prefix), None).outputs
print("elicited value after", prefix, "=", claim.to_fraction())
print("direct value           =", info_set_value(spec, "x", prefix).to_fraction())
print("continuation output    =", output)

audit = elicitation_audit(spec, "x", 1)
print(f"audit: {audit.claims_checked} claims over {audit.prefixes} prefixes, passed={audit.passed}")
print("replacing round 2 by the oracle changes nothing:", split_at_round(spec, "x", 1).passed)
