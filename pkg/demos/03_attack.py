"""Attacking a one-query sampler on the two-member instance.

With |D| = 4 and l = 1 a tester needs more than 4/3 queries. The sampler
uses one, so the certificate pins its acceptance gap between V and the
hybrid on the least-read position to at most 1/4, far below the 1/3 a
distinguisher needs.
"""
from querybound import attack
from querybound.catalog import two_member_instance, uniform_sampler_tester

inst = two_member_instance(8)
cert = attack(uniform_sampler_tester(8, 1), inst, l=1)

print(f"marginals on V: { {j: str(p) for j, p in cert.marginals.values.items()} }")
print(f"D' = {list(cert.d_prime)}, attack word = {cert.attack_word}")
print(f"accept on V {cert.original_accept_on_v}, on attack word {cert.original_accept_on_attack}")
print(f"gap {cert.gap} <= union bound {cert.union_bound}; floor |D|/3l = {cert.floor}")
print(f"verdict: {cert.verdict.value}")
