import math
from fractions import Fraction

import pytest

from querybound.adversary import (
    Outcome,
    Thresholds,
    Verdict,
    attack,
    corollary_params,
    select_low_marginal_set,
    theoretical_floor,
    verify_distinguisher,
    verify_epsilon_test,
)
from querybound.catalog import (
    adaptive_probe_tester,
    constant_tester,
    reference_testers,
    uniform_sampler_tester,
    zero_property,
)
from querybound.errors import (
    EnumerationBoundError,
    InvalidArgumentError,
    ModeUnavailableError,
    ParameterRangeError,
)
from querybound.machines import MarginalMap


def marginals(d):
    return MarginalMap({j: Fraction(p) for j, p in d.items()})


def test_select_low_marginal_set_examples():
    eighth = Fraction(1, 8)
    assert select_low_marginal_set(marginals({4: eighth, 5: eighth, 6: eighth, 7: eighth}), 1) == (4,)
    m = marginals({4: Fraction(1, 4), 5: eighth, 6: Fraction(3, 8), 7: eighth})
    assert select_low_marginal_set(m, 2) == (5, 7)
    assert select_low_marginal_set(m, 4) == (4, 5, 6, 7)
    with pytest.raises(ParameterRangeError):
        select_low_marginal_set(m, 0)
    with pytest.raises(ParameterRangeError):
        select_low_marginal_set(m, 5)


def test_theoretical_floor_examples():
    assert theoretical_floor(4, 1) == Fraction(4, 3)
    assert theoretical_floor(12, 2) == 2
    assert theoretical_floor(5, 5) == Fraction(1, 3)
    with pytest.raises(ParameterRangeError):
        theoretical_floor(4, 0)


def test_corollary_params():
    assert corollary_params(Fraction(1, 2), Fraction(1, 8), 16) == (8, 2)
    with pytest.raises(ParameterRangeError, match="n > 1/epsilon"):
        corollary_params(Fraction(1, 2), Fraction(1, 8), 3)
    with pytest.raises(ParameterRangeError, match="epsilon < alpha"):
        corollary_params(Fraction(1, 4), Fraction(1, 3), 100)
    with pytest.raises(ParameterRangeError, match="alpha - epsilon"):
        corollary_params(Fraction(1, 2), Fraction(3, 8), 8)


def test_thresholds():
    t = Thresholds()
    assert t.required_gap == Fraction(1, 3)
    assert Thresholds.parse("3/4,3/4").required_gap == Fraction(1, 2)
    with pytest.raises(ParameterRangeError):
        Thresholds(Fraction(1, 2), Fraction(2, 3))
    with pytest.raises(InvalidArgumentError):
        Thresholds.parse("2/3")


def test_attack_single_sampler_two_member(two_member):
    cert = attack(uniform_sampler_tester(8, 1), two_member, 1)
    assert all(cert.marginals[j] == Fraction(1, 8) for j in two_member.D)
    assert cert.d_prime == (4,)
    assert cert.gap == Fraction(1, 8) <= cert.union_bound == Fraction(1, 4)
    assert cert.floor == Fraction(4, 3) > cert.q == 1
    assert cert.verdict is Verdict.REFUTED_BY_GAP


def test_attack_constant_accept(zero8, two_member):
    for inst in (zero8, two_member):
        cert = attack(constant_tester(8), inst, 1)
        assert cert.gap == 0 and cert.original_accept_on_attack == 1
        assert cert.verdict is Verdict.REFUTED_BY_GAP


def test_attack_matching_sampler_survives(zero8):
    for l in (1, 2, 3):
        q = math.ceil(2 * len(zero8.D) / l)
        cert = attack(uniform_sampler_tester(8, q, with_replacement=True), zero8, l)
        # closed form: V = 0^n always accepted; U_D' accepted iff no draw lands in D'
        assert cert.original_accept_on_v == 1
        assert cert.original_accept_on_attack == Fraction(8 - l, 8) ** q
        assert cert.verdict is Verdict.SURVIVES


def test_attack_l_equal_D_is_not_applicable(two_member):
    cert = attack(uniform_sampler_tester(8, 2), two_member, 4)
    assert cert.verdict is Verdict.NOT_APPLICABLE
    with pytest.raises(ParameterRangeError):
        attack(uniform_sampler_tester(8, 2), two_member, 5)


def test_attack_reports_both_floors(zero8):
    cert = attack(uniform_sampler_tester(8, 1), zero8, 1, k=6)
    assert cert.floor == Fraction(8, 3) and cert.floor_k == 2
    assert cert.floor >= cert.floor_k


def test_attack_needs_tree_in_exact_mode(zero8):
    bare = uniform_sampler_tester(8, 1).with_tree(None)
    with pytest.raises(ModeUnavailableError):
        attack(bare, zero8, 1)
    assert attack(bare, zero8, 1, "mc", trials=500).verdict is Verdict.REFUTED_BY_GAP


def test_certificate_is_deterministic(two_member):
    probe = adaptive_probe_tester(two_member, 2)
    assert attack(probe, two_member, 1).to_json() == attack(probe, two_member, 1).to_json()
    a = attack(probe, two_member, 1, "mc", seed=5, trials=2000).to_json()
    assert a == attack(probe, two_member, 1, "mc", seed=5, trials=2000).to_json()


def test_mc_attack_verdicts(zero8):
    assert attack(uniform_sampler_tester(8, 1), zero8, 1, "mc").verdict is Verdict.REFUTED_BY_GAP
    strong = uniform_sampler_tester(8, 16, with_replacement=True)
    assert attack(strong, zero8, 1, "mc").verdict is Verdict.SURVIVES
    # exact gap 3/8 sits on the decision boundary for these thresholds
    edge = Thresholds(Fraction(11, 16), Fraction(11, 16))
    cert = attack(uniform_sampler_tester(8, 3), zero8, 1, "mc", thresholds=edge)
    assert cert.verdict is Verdict.INCONCLUSIVE


def test_verify_distinguisher_constant_accept_fails(zero8):
    report = verify_distinguisher(constant_tester(8), zero8, 1)
    assert report.outcome is Outcome.FAIL and report.failures == 8


@pytest.mark.parametrize("l", [1, 2, 3, 4])
def test_verify_distinguisher_tight_sampler(zero8, l):
    n = 8
    q = math.ceil(2 * n / l)
    report = verify_distinguisher(uniform_sampler_tester(n, q, with_replacement=True), zero8, l)
    closed_form = 1 - Fraction(n - l, n) ** q
    assert report.passed
    assert report.worst_rejection == closed_form
    assert float(closed_form) >= 1 - math.exp(-2) > 2 / 3


def test_verify_distinguisher_range(zero8):
    with pytest.raises(InvalidArgumentError):
        verify_distinguisher(constant_tester(8), zero8, 0)


def test_verify_distinguisher_sampled_mode(zero8):
    tester = uniform_sampler_tester(8, 8, with_replacement=True)
    report = verify_distinguisher(tester, zero8, 4, coverage=10)
    assert not report.exhaustive and report.checked <= 11


def test_verify_epsilon_test_examples():
    P = zero_property(4)
    assert verify_epsilon_test(constant_tester(4), P, Fraction(1, 4)).outcome is Outcome.FAIL
    sampler = uniform_sampler_tester(4, 8, with_replacement=True)
    report = verify_epsilon_test(sampler, P, Fraction(1, 2))
    assert report.passed
    assert report.members_checked == 1 and report.far_checked == 11
    # oracle: the nearest far words have two ones, accepted with probability (2/4)**8
    assert 1 - report.worst_far[1] == Fraction(1, 2) ** 8
    with pytest.raises(EnumerationBoundError):
        verify_epsilon_test(constant_tester(24), zero_property(24), Fraction(1, 4), bound=2 ** 20)


def test_distinguisher_failure_implies_epsilon_failure(zero8):
    P = zero8.property
    for tester in reference_testers(zero8):
        for l in (1, 2):
            if not verify_distinguisher(tester, zero8, l).passed:
                assert not verify_epsilon_test(tester, P, Fraction(l, 8)).passed


def test_mc_verification_matches_exact(zero8):
    tester = uniform_sampler_tester(8, 16, with_replacement=True)
    assert verify_distinguisher(tester, zero8, 1, mode="mc", trials=3000).outcome is Outcome.PASS
    assert verify_distinguisher(constant_tester(8), zero8, 1, mode="mc", trials=300).outcome \
        is Outcome.FAIL
