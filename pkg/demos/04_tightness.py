"""The floor is matched: q = ceil(2n/l) samples suffice on the zero property.

For U = 1^n against {0^n} every position is in D, and a hybrid with l ones
is rejected with probability 1 - ((n-l)/n)^q >= 1 - e^-2. Sweeping q shows
the attack refuting small samplers and failing once q is large.
"""
import math

from querybound import attack, verify_distinguisher
from querybound.catalog import uniform_sampler_tester, zero_instance

n = 8
inst = zero_instance(n)
for l in (1, 2, 4):
    q = math.ceil(2 * n / l)
    r = verify_distinguisher(uniform_sampler_tester(n, q, with_replacement=True), inst, l)
    print(f"l = {l}, q = {q:2}: worst rejection {float(r.worst_rejection):.4f}"
          f" (>= {1 - math.exp(-2):.4f}), {r.outcome.value}")

print("\nsweep at l = 1 (floor 8/3):")
for q in range(1, 9):
    cert = attack(uniform_sampler_tester(n, q), inst, 1)
    print(f"  q = {q}: gap {str(cert.gap):>5} <= {str(cert.union_bound):>3}  {cert.verdict.value}")
