"""Hybrid words sit at exactly the distance their construction promises.

Take the two-member property {0^8, 11110000} and the far word U = 1^8.
The nearest member is V = 11110000, which differs from U on the last four
positions. Copying U onto any A of those positions lands exactly |A|/8
away from the property.
"""
import itertools

from querybound import build_attack_instance, distance_to_property, hybrid, verify_graded_distances
from querybound.catalog import two_member_property
from querybound.words import Word

P = two_member_property(8)
U = Word.parse("11111111")
inst = build_attack_instance(U, P)
print(f"V = {inst.V}, D = {list(inst.D)}, d(U, P) = {distance_to_property(U, P)}")

for size in range(len(inst.D) + 1):
    A = next(itertools.combinations(inst.D, size))
    X = hybrid(inst, A)
    print(f"  A = {str(list(A)):<14} U_A = {X}  distance = {distance_to_property(X, P)}")

report = verify_graded_distances(inst)
print(f"every subset checked: {report.passed} ({report.checked} of {report.total_subsets})")
