"""An adaptive machine whose oracle answers are themselves proven.

The machine asks whether the first circuit has a majority, and only if so
asks about the second.  Merlin announces the answers up front and then
plays each vote side by side; answers are weighted so earlier queries
dominate.  Exhaustive search confirms the rational run follows the real
machine.
"""

from ratproofs import CountingInstance, membership, solve_rational, threshold_circuit
from ratproofs.composition import adaptive_and, check_composition, compose_with_machine, composition_reward
from ratproofs.dyadic import Dyadic
from ratproofs.protocols import make_pp_vote


def oracle(c):
    return membership(CountingInstance(c, "majority"))


for x in [(threshold_circuit(2, 3), threshold_circuit(3, 6)), (threshold_circuit(2, 1), threshold_circuit(2, 3))]:
    spec = compose_with_machine(adaptive_and, make_pp_vote, x)
    rep = check_composition(adaptive_and, make_pp_vote, x, oracle, spec)
    value = solve_rational(spec, "x").root_value
    print(f"verdict {rep.verdict} (machine says {rep.expected}), root value {value.to_fraction()}, checks passed: {rep.passed}")

print("two honest queries with gap 1/4 pay", composition_reward(Dyadic(1, 2), [1, 1]).to_fraction())
