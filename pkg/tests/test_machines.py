import itertools
import math
from fractions import Fraction

import pytest

from conftest import w
from querybound.catalog import adaptive_probe_tester, uniform_sampler_tester
from querybound.errors import (
    BudgetViolationError,
    CoinCoverageError,
    InvalidArgumentError,
    InvalidQueryError,
    TreeValidationError,
)
from querybound.machines import (
    ACCEPT,
    REJECT,
    Chance,
    DecisionTree,
    Decide,
    NextQuery,
    Query,
    SeededCoins,
    StepwiseTester,
    acceptance_probability_exact,
    acceptance_probability_mc,
    as_stepwise,
    dumps_tree,
    hoeffding_half_width,
    is_nonadaptive,
    loads_tree,
    query_marginals_exact,
    query_marginals_mc,
    rejection_probability_exact,
    run,
    tree_from_stepwise,
    trials_for_half_width,
)
from querybound.words import BINARY, all_words


def zero_checker(coins):
    j = coins.randbelow(8)
    answer = yield j
    return answer == 0


def always_accept(coins):
    return True
    yield


ZERO_CHECKER = StepwiseTester(8, 2, 1, zero_checker, "zero_checker")
ACCEPTOR = StepwiseTester(8, 2, 0, always_accept, "accept")


class FixedCoins:
    def __init__(self, *outcomes):
        self._it = iter(outcomes)
        self.outcomes = []

    def randbelow(self, k):
        r = next(self._it)
        assert 0 <= r < k
        self.outcomes.append(r)
        return r


def uniform_query_tree():
    """Chance over 8 positions, accept iff the symbol read is 0."""
    return DecisionTree(8, 2, Chance((Fraction(1, 8),) * 8,
                                     tuple(Query(j, (ACCEPT, REJECT)) for j in range(8))))


def pair_tree():
    """Query a uniformly random ordered pair of distinct positions."""
    pairs = list(itertools.permutations(range(8), 2))
    children = tuple(Query(a, tuple(Query(b, (ACCEPT, REJECT)) for _ in range(2)))
                     for a, b in pairs)
    return DecisionTree(8, 2, Chance((Fraction(1, len(pairs)),) * len(pairs), children))


# ---- run -------------------------------------------------------------------

def test_run_zero_query_tester():
    t = run(ACCEPTOR, w("01010101"), 3)
    assert t.real_query_count == 0 and t.accept and t.queries == ()


def test_zero_checker_accepts_all_zero_word():
    assert all(run(ZERO_CHECKER, w("00000000"), seed).accept for seed in range(50))


def test_zero_checker_enumerated_outcomes():
    decisions = [run(ZERO_CHECKER, w("10000000"), FixedCoins(r)).accept for r in range(8)]
    assert decisions.count(False) == 1 and decisions[0] is False


def test_run_answers_match_input_and_budget():
    X = w("01100101")
    t = run(uniform_sampler_tester(8, 5), X, 11)
    assert t.real_query_count == 5 <= 5
    assert all(X[j] == a for j, a in t.queries)


def test_budget_violation_and_invalid_query():
    greedy = StepwiseTester.from_step(
        8, 2, 1, lambda h, c: NextQuery(len(h)) if len(h) < 2 else Decide(True))
    with pytest.raises(BudgetViolationError):
        run(greedy, w("00000000"))
    wild = StepwiseTester.from_step(8, 2, 1, lambda h, c: NextQuery(9) if not h else Decide(True))
    with pytest.raises(InvalidQueryError):
        run(wild, w("00000000"))


def test_repeat_queries_are_free():
    def twice(coins):
        a = yield 3
        b = yield 3
        return a == b

    t = run(StepwiseTester(8, 2, 1, twice), w("00010000"))
    assert t.real_query_count == 1 and t.accept


def test_run_rejects_incompatible_word():
    with pytest.raises(InvalidArgumentError):
        run(ZERO_CHECKER, w("0000"))


def test_replay_is_byte_identical():
    tester = uniform_sampler_tester(8, 3, with_replacement=True)
    first = run(tester, w("00101100"), 42).to_json()
    assert all(run(tester, w("00101100"), 42).to_json() == first for _ in range(5))
    coins = SeededCoins(42)
    again = run(tester, w("00101100"), coins)
    assert again.coin_outcomes == tuple(coins.outcomes)


# ---- exact evaluation ------------------------------------------------------

def test_acceptance_exact_examples():
    assert acceptance_probability_exact(DecisionTree(8, 2, ACCEPT), w("11111111")) == 1
    tree = uniform_query_tree()
    assert acceptance_probability_exact(tree, w("11110000")) == Fraction(1, 2)
    assert acceptance_probability_exact(tree, w("00000000")) == 1


def test_acceptance_plus_rejection_is_one():
    tree = pair_tree()
    for X in all_words(BINARY, 8):
        a = acceptance_probability_exact(tree, X)
        assert 0 <= a <= 1
        assert a + rejection_probability_exact(tree, X) == 1


def test_marginals_exact_examples():
    assert query_marginals_exact(DecisionTree(8, 2, REJECT), w("00000000")).values == {}
    m = query_marginals_exact(uniform_query_tree(), w("00000000"))
    assert all(m[j] == Fraction(1, 8) for j in range(8))
    m = query_marginals_exact(pair_tree(), w("01010101"))
    # oracle: ordered pairs containing j, out of 8*7
    assert all(m[j] == Fraction(2 * 7, 56) for j in range(8))
    assert m.total() == 2


def test_marginal_sum_at_most_budget():
    for t in [uniform_sampler_tester(8, q, r) for q in (1, 2, 3) for r in (False, True)]:
        for X in (w("00000000"), w("11110000"), w("10101010")):
            assert query_marginals_exact(t.tree, X).total() <= t.budget


def test_tree_validation():
    with pytest.raises(TreeValidationError):
        DecisionTree(8, 2, Chance((Fraction(1, 2), Fraction(1, 3)), (ACCEPT, REJECT)))
    with pytest.raises(TreeValidationError):
        DecisionTree(8, 2, Query(0, (Query(0, (ACCEPT, ACCEPT)), ACCEPT)))
    with pytest.raises(TreeValidationError):
        DecisionTree(8, 2, Query(0, (ACCEPT,)))
    with pytest.raises(TreeValidationError):
        DecisionTree(8, 2, Query(8, (ACCEPT, REJECT)))
    with pytest.raises(TreeValidationError):
        DecisionTree(8, 2, Query(0, (Query(1, (ACCEPT, ACCEPT)), ACCEPT)), budget=1)


# ---- non-adaptivity --------------------------------------------------------

def test_is_nonadaptive_examples():
    assert is_nonadaptive(uniform_query_tree())
    assert is_nonadaptive(pair_tree())
    adaptive = DecisionTree(8, 2, Query(0, (Query(1, (ACCEPT, REJECT)),
                                            Query(2, (ACCEPT, REJECT)))))
    assert not is_nonadaptive(adaptive)
    assert is_nonadaptive(DecisionTree(8, 2, ACCEPT))


def test_early_stop_counts_as_adaptive():
    early = DecisionTree(8, 2, Query(0, (Query(1, (ACCEPT, REJECT)), REJECT)))
    assert not is_nonadaptive(early)


def test_coin_after_query_is_handled():
    half = (Fraction(1, 2), Fraction(1, 2))
    # the position of the second query depends only on a coin tossed after the first
    tree = DecisionTree(8, 2, Query(0, tuple(
        Chance(half, (Query(1, (ACCEPT, REJECT)), Query(2, (ACCEPT, REJECT)))) for _ in range(2))))
    assert is_nonadaptive(tree)


# ---- unrolling -------------------------------------------------------------

def test_tree_from_stepwise_examples():
    assert tree_from_stepwise(ACCEPTOR).root == ACCEPT
    tree = tree_from_stepwise(ZERO_CHECKER)
    assert isinstance(tree.root, Chance) and tree.root.weights == (Fraction(1, 8),) * 8
    assert [c.position for c in tree.root.children] == list(range(8))
    assert tree == uniform_query_tree()


def test_tree_from_stepwise_coverage_error():
    def coin_hungry(coins):
        coins.randbelow(2)
        coins.randbelow(2)
        return True
        yield

    with pytest.raises(CoinCoverageError):
        tree_from_stepwise(StepwiseTester(8, 2, 0, coin_hungry), max_draws=1)


@pytest.mark.parametrize("q, replace", [(1, False), (2, False), (2, True), (3, True)])
def test_unrolled_tree_matches_exhaustively(q, replace):
    tester = uniform_sampler_tester(8, q, replace)
    unrolled = tree_from_stepwise(tester)
    for X in all_words(BINARY, 8):
        assert acceptance_probability_exact(unrolled, X) == acceptance_probability_exact(tester.tree, X)
    assert query_marginals_exact(unrolled, w("00000000")).values == \
        query_marginals_exact(tester.tree, w("00000000")).values


def test_probe_unrolling_matches_stepwise_exhaustively(zero8):
    probe = adaptive_probe_tester(zero8, 3)
    for X in all_words(BINARY, 8):
        # oracle: average the decision over the 8 equally likely starts
        accepts = sum(run(probe, X, FixedCoins(r)).accept for r in range(8))
        assert acceptance_probability_exact(probe.tree, X) == Fraction(accepts, 8)


def test_tree_as_stepwise_round_trip():
    tree = pair_tree()
    back = tree_from_stepwise(as_stepwise(tree))
    for X in (w("00000000"), w("01000000"), w("11000011")):
        assert acceptance_probability_exact(back, X) == acceptance_probability_exact(tree, X)


def test_from_step_adapter():
    def step(history, coins):
        if not history:
            return NextQuery(coins.randbelow(8))
        return Decide(history[-1][1] == 0)

    tester = StepwiseTester.from_step(8, 2, 1, step)
    assert tree_from_stepwise(tester) == uniform_query_tree()


# ---- serialization ---------------------------------------------------------

def test_tree_json_round_trip():
    tree = uniform_sampler_tester(8, 3, True).tree
    text = dumps_tree(tree)
    back = loads_tree(text)
    assert back == tree and dumps_tree(back) == text
    assert '"num"' in text and '"den"' in text
    with pytest.raises(TreeValidationError):
        loads_tree('{"n": 2, "alphabetSize": 2, "root": {"kind": "bogus"}}')


# ---- Monte Carlo -----------------------------------------------------------

def test_hoeffding_parameters():
    assert trials_for_half_width(0.02, 0.01) == math.ceil(math.log(200) / (2 * 0.02 ** 2))
    assert hoeffding_half_width(trials_for_half_width(0.02, 0.01), 0.01) <= 0.02


def test_mc_constant_accept():
    assert acceptance_probability_mc(ACCEPTOR, w("11111111"), 100).estimate == 1.0


def test_mc_zero_checker_close_to_exact():
    est = acceptance_probability_mc(ZERO_CHECKER, w("11110000"), 10_000, seed=7, delta=0.01)
    exact = acceptance_probability_exact(uniform_query_tree(), w("11110000"))
    assert est.half_width < 0.017
    assert abs(est.estimate - exact) <= 0.017


def test_mc_invalid_trials():
    with pytest.raises(InvalidArgumentError):
        acceptance_probability_mc(ZERO_CHECKER, w("11110000"), 0)


def test_mc_marginals():
    m = query_marginals_mc(ACCEPTOR, w("00000000"), 200)
    assert all(m[j] == 0.0 for j in range(8))
    m = query_marginals_mc(ZERO_CHECKER, w("00000000"), 10_000, seed=3)
    assert all(abs(m[j] - 1 / 8) <= m.half_width for j in range(8))
    assert query_marginals_mc(ZERO_CHECKER, w("00000000"), 1000, seed=5) == \
        query_marginals_mc(ZERO_CHECKER, w("00000000"), 1000, seed=5)


def test_mc_trials_depend_only_on_seed_and_index():
    # a longer batch extends a shorter one trial by trial, so blocks can run anywhere
    from querybound.machines import TRIAL_BLOCK, _mc_runs
    X = w("11001010")
    tester = uniform_sampler_tester(8, 2, True)
    short = list(_mc_runs(tester, X, TRIAL_BLOCK + 17, seed=9))
    long = list(_mc_runs(tester, X, 3 * TRIAL_BLOCK, seed=9))
    assert long[:len(short)] == short
