"""Turning an adaptive tester into one that only reads D, in fixed order.

The probe tester picks its second position from its first answer. After
restricting to D and simulating on V, the query positions depend on the
coins alone, yet acceptance on V is unchanged.
"""
from querybound import acceptance_probability_exact, is_nonadaptive, nonadaptivize, run
from querybound.catalog import adaptive_probe_tester, zero_instance
from querybound.words import Word

inst = zero_instance(8)
probe = adaptive_probe_tester(inst, 2)
out, report = nonadaptivize(probe, inst)

print(f"{probe.name}: non-adaptive? {is_nonadaptive(probe.tree)}")
print(f"{out.name}: non-adaptive? {is_nonadaptive(out.tree)}")
print(f"budget {report.original_budget} -> {report.transformed_budget}")

for X in (inst.V, Word.parse("01000000"), inst.U):
    before = acceptance_probability_exact(probe.tree, X)
    after = acceptance_probability_exact(out.tree, X)
    print(f"  X = {X}: accept {before} -> {after}")

# same coins, different inputs, same positions
for X in (inst.V, inst.U):
    print(f"  seed 7 on {X}: positions {[j for j, _ in run(out, X, 7).queries]}")
