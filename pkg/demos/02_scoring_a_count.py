"""Paying for a count with the quadratic score.

Merlin names the number of accepting inputs; Arthur draws one input and
pays ``1 - (q - C(y))**2`` for the claimed fraction ``q``.  The expected
payment peaks exactly at the true fraction, so the low bit of the best
claim is the parity of the count.  Cutting the claim width breaks this,
and the parity audit finds where.
"""

from ratproofs import CountingInstance, solve_rational, threshold_circuit
from ratproofs.parity import brier_sampler, parity_audit
from ratproofs.protocols import make_brier_count

c = threshold_circuit(4, 11)  # accepts 11 of 16
spec = make_brier_count(CountingInstance(c, "count"))
table = solve_rational(spec, "c")
print("best claim:", sorted(table.root_argmax), "(true count 11)")
for m in (9, 10, 11, 12, 13):
    print(f"  claim {m:2d}: {table[(m,)].value.to_fraction()}")

for n, width in [(6, None), (6, 3), (8, 4)]:
    rep = parity_audit(brier_sampler(n, width))
    label = "full width" if width is None else f"width {width}"
    print(f"n={n} {label}: parity wrong at {len(rep.failures)} of {2**n + 1} counts")
