"""Choosing the best message with pairwise comparisons only.

Two circuits can be compared with one sample of each: accept if the
second accepts and the first rejects, flip a coin on agreement.  The
acceptance probability is ``1/2 + (E1 - E0)/2``.  A knockout tournament
built on this comparison finds a best message without ever computing an
expectation directly.
"""

from ratproofs import CountingInstance, solve_rational, threshold_circuit
from ratproofs.protocols import make_brier_count
from ratproofs.selection import compare_expectations_prob, knockout_argmax

lo, hi = threshold_circuit(3, 3), threshold_circuit(3, 5)
print("Pr[accept] comparing 3/8 with 5/8:", compare_expectations_prob(lo, hi).to_fraction())
print("and the other way round:          ", compare_expectations_prob(hi, lo).to_fraction())

spec = make_brier_count(CountingInstance(threshold_circuit(4, 6), "count"))
trace = []
winner = knockout_argmax(spec, "c", comparator="oracle", trace=trace)
print("knockout winner:", winner, "over", len(trace), "rounds; solver argmax:", sorted(solve_rational(spec, "c").root_argmax))
