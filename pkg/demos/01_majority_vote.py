"""A one-bit vote, solved exactly.

Merlin says whether a circuit accepts most of its inputs.  Arthur checks
the claim against one random certificate and pays 1 on agreement.  We
solve the game by backward induction, confirm honesty is the only best
reply, then play one seeded round for flavour.
"""

from ratproofs import (
    argmax_strategy,
    delta_exact,
    parse_circuit,
    run_interaction,
    solve_rational,
    verify_protocol,
)
from ratproofs.protocols import make_pp_vote

circuit = parse_circuit(
    """
    inputs 3
    g1 = AND x1 x2
    g2 = OR g1 x3
    output g2
    """
)

spec = make_pp_vote(circuit)
table = solve_rational(spec, "demo")
print("expected reward of each vote:")
for b in sorted(table.root.children):
    print(f"  b = {b}: {table[(b,)].value.to_fraction()}")
print("rational vote:", sorted(table.root_argmax))
print("gap between best and runner-up:", delta_exact(spec, "demo").to_fraction())

report = verify_protocol(spec, "demo", truth=1, table=table)
print("honest on every rational branch:", report.passed)

transcript, reward = run_interaction(spec, "demo", argmax_strategy(table), seed=7)
print("one sampled play:", transcript.entries, "reward", reward.to_fraction())
