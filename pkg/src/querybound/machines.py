"""Randomized query-making algorithms in two interchangeable forms.

A :class:`StepwiseTester` wraps a *program*: a generator function taking a
coin source, yielding query positions, receiving the answered symbol index
for each, and finally returning ``True`` (accept) or ``False`` (reject)::

    def zero_checker(coins):
        j = coins.randbelow(8)
        answer = yield j
        return answer == 0

A :class:`DecisionTree` is the explicit form used for exact analysis:
``Chance`` nodes hold the coin tosses with rational weights, ``Query``
nodes branch on the symbol read, ``Leaf`` nodes decide.

Probabilities computed from trees are exact ``Fraction`` values. Monte
Carlo estimates are floats carrying a Hoeffding half-width; the two are
kept in separate types and never mixed.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Dict, Iterable, NamedTuple, Optional, Union

from .errors import (
    BudgetViolationError,
    CoinCoverageError,
    InvalidArgumentError,
    InvalidQueryError,
    TreeValidationError,
)
from .words import Word

DEFAULT_DELTA = 0.01
DEFAULT_HALF_WIDTH = 0.02


# ---- tree form -------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    accept: bool


@dataclass(frozen=True)
class Query:
    position: int
    children: tuple


@dataclass(frozen=True)
class Chance:
    weights: tuple
    children: tuple


ACCEPT = Leaf(True)
REJECT = Leaf(False)

Node = Union[Leaf, Query, Chance]


def uniform_chance(children) -> Node:
    children = tuple(children)
    if len(children) == 1:
        return children[0]
    w = Fraction(1, len(children))
    return Chance((w,) * len(children), children)


def query_depth(node: Node) -> int:
    memo = {}

    def depth(v):
        key = id(v)
        if key not in memo:
            if isinstance(v, Leaf):
                memo[key] = 0
            else:
                memo[key] = (isinstance(v, Query)) + max(depth(c) for c in v.children)
        return memo[key]

    return depth(node)


def _validate(root: Node, n: int, alphabet_size: int, budget: int):
    checked = set()

    def visit(v, path: frozenset):
        key = (id(v), path)
        if key in checked:
            return
        checked.add(key)
        if isinstance(v, Leaf):
            if not isinstance(v.accept, bool):
                raise TreeValidationError(f"leaf decision must be a bool, got {v.accept!r}")
            return
        if isinstance(v, Chance):
            if not v.children or len(v.weights) != len(v.children):
                raise TreeValidationError("chance node needs one weight per child")
            for w in v.weights:
                if not isinstance(w, Fraction) or w <= 0:
                    raise TreeValidationError(f"chance weights must be positive Fractions, got {w!r}")
            if sum(v.weights) != 1:
                raise TreeValidationError(f"chance weights sum to {sum(v.weights)}, not 1")
            for c in v.children:
                visit(c, path)
            return
        if isinstance(v, Query):
            if not isinstance(v.position, int) or not 0 <= v.position < n:
                raise TreeValidationError(f"query position {v.position!r} outside [0, {n})")
            if v.position in path:
                raise TreeValidationError(f"position {v.position} queried twice on one path")
            if len(v.children) != alphabet_size:
                raise TreeValidationError(
                    f"query node has {len(v.children)} children, alphabet has {alphabet_size}")
            if len(path) + 1 > budget:
                raise TreeValidationError(f"a path exceeds the query budget {budget}")
            for c in v.children:
                visit(c, path | {v.position})
            return
        raise TreeValidationError(f"unknown node {v!r}")

    visit(root, frozenset())


@dataclass(frozen=True, eq=False)
class DecisionTree:
    n: int
    alphabet_size: int
    root: Node
    budget: Optional[int] = None
    name: str = "tree"

    def __post_init__(self):
        if self.budget is None:
            object.__setattr__(self, "budget", query_depth(self.root))
        _validate(self.root, self.n, self.alphabet_size, self.budget)

    def __eq__(self, other):
        return (isinstance(other, DecisionTree) and self.n == other.n
                and self.alphabet_size == other.alphabet_size
                and self.budget == other.budget and self.root == other.root)

    __hash__ = None


def _check_word(n, alphabet_size, X: Word):
    if len(X) != n or len(X.alphabet) != alphabet_size:
        raise InvalidArgumentError(
            f"input of length {len(X)} over {len(X.alphabet)} symbols does not fit a "
            f"tester for n={n}, |alphabet|={alphabet_size}")


def acceptance_probability_exact(tree: DecisionTree, X: Word) -> Fraction:
    _check_word(tree.n, tree.alphabet_size, X)
    memo = {}

    def acc(v) -> Fraction:
        key = id(v)
        if key in memo:
            return memo[key]
        if isinstance(v, Leaf):
            p = Fraction(int(v.accept))
        elif isinstance(v, Query):
            p = acc(v.children[X[v.position]])
        else:
            p = sum((w * acc(c) for w, c in zip(v.weights, v.children)), Fraction(0))
        memo[key] = p
        return p

    return acc(tree.root)


def rejection_probability_exact(tree: DecisionTree, X: Word) -> Fraction:
    """Top-down sum of path weights over reject leaves.

    Deliberately shares no code with :func:`acceptance_probability_exact` so
    the two can cross-check each other.
    """
    _check_word(tree.n, tree.alphabet_size, X)
    total = Fraction(0)
    stack = [(tree.root, Fraction(1))]
    while stack:
        v, weight = stack.pop()
        if isinstance(v, Leaf):
            if not v.accept:
                total += weight
        elif isinstance(v, Query):
            stack.append((v.children[X[v.position]], weight))
        else:
            stack.extend((c, weight * w) for w, c in zip(v.weights, v.children))
    return total


def hit_probability_exact(tree: DecisionTree, X: Word, positions: Iterable[int]) -> Fraction:
    """Probability that a run on ``X`` queries at least one of ``positions``."""
    _check_word(tree.n, tree.alphabet_size, X)
    positions = frozenset(positions)
    memo = {}

    def hit(v) -> Fraction:
        key = id(v)
        if key in memo:
            return memo[key]
        if isinstance(v, Leaf):
            p = Fraction(0)
        elif isinstance(v, Query):
            p = Fraction(1) if v.position in positions else hit(v.children[X[v.position]])
        else:
            p = sum((w * hit(c) for w, c in zip(v.weights, v.children)), Fraction(0))
        memo[key] = p
        return p

    return hit(tree.root)


# ---- marginals and estimates ------------------------------------------------

class Estimate(NamedTuple):
    estimate: float
    half_width: float
    confidence: float

    @property
    def low(self) -> float:
        return self.estimate - self.half_width

    @property
    def high(self) -> float:
        return self.estimate + self.half_width

    def covers(self, value) -> bool:
        return abs(self.estimate - float(value)) <= self.half_width


@dataclass(frozen=True)
class MarginalMap:
    """Per-position query probabilities; absent positions have probability 0.

    In exact mode ``values`` maps positions to ``Fraction``; in Monte Carlo
    mode to float estimates sharing one ``half_width`` at ``confidence``.
    """

    values: dict
    exact: bool = True
    half_width: float = 0.0
    confidence: float = 1.0

    def __getitem__(self, j):
        return self.values.get(j, Fraction(0) if self.exact else 0.0)

    def estimate(self, j) -> Estimate:
        return Estimate(float(self[j]), self.half_width, self.confidence)

    def total(self, positions=None):
        keys = self.values.keys() if positions is None else positions
        return sum((self[j] for j in keys), Fraction(0) if self.exact else 0.0)

    def restrict(self, positions) -> "MarginalMap":
        return MarginalMap({j: self[j] for j in positions}, self.exact, self.half_width,
                           self.confidence)


def query_marginals_exact(tree: DecisionTree, X: Word) -> MarginalMap:
    _check_word(tree.n, tree.alphabet_size, X)
    memo = {}

    def marg(v) -> Dict[int, Fraction]:
        key = id(v)
        if key in memo:
            return memo[key]
        if isinstance(v, Leaf):
            out = {}
        elif isinstance(v, Query):
            out = dict(marg(v.children[X[v.position]]))
            out[v.position] = Fraction(1)  # repeats are forbidden, so never double counted
        else:
            out = {}
            for w, c in zip(v.weights, v.children):
                for j, p in marg(c).items():
                    out[j] = out.get(j, Fraction(0)) + w * p
        memo[key] = out
        return out

    return MarginalMap(dict(sorted(marg(tree.root).items())), exact=True)


def is_nonadaptive(tree: DecisionTree) -> bool:
    """True iff the query sequence is a function of the coin outcomes alone.

    The i-th chance node met along any path is read as the i-th coin toss.
    Two paths whose coin sequences are prefix-compatible describe the same
    coin stream run on different answers, so they must query the same
    positions in the same order.
    """
    by_coins: Dict[tuple, tuple] = {}
    stack = [(tree.root, (), ())]
    while stack:
        v, coins, queries = stack.pop()
        if isinstance(v, Leaf):
            seen = by_coins.setdefault(coins, queries)
            if seen != queries:
                return False
        elif isinstance(v, Query):
            q2 = queries + (v.position,)
            stack.extend((c, coins, q2) for c in v.children)
        else:
            stack.extend((c, coins + (i,), queries) for i, c in enumerate(v.children))
    for coins, queries in by_coins.items():
        for cut in range(len(coins)):
            other = by_coins.get(coins[:cut])
            if other is not None and other != queries:
                return False
    return True


# ---- stepwise form ---------------------------------------------------------

class SeededCoins:
    """Deterministic coin stream; records every outcome it hands out."""

    def __init__(self, seed: int = 0, rng: Optional[random.Random] = None):
        self._rng = random.Random(seed) if rng is None else rng
        self.outcomes = []

    def randbelow(self, k: int) -> int:
        r = self._rng.randrange(k)
        self.outcomes.append(r)
        return r


@dataclass(frozen=True)
class NextQuery:
    index: int


@dataclass(frozen=True)
class Decide:
    accept: bool


@dataclass(frozen=True, eq=False)
class StepwiseTester:
    n: int
    alphabet_size: int
    budget: int
    program: Callable
    name: str = "tester"
    tree: Optional[DecisionTree] = None

    def __post_init__(self):
        if self.budget < 0:
            raise InvalidArgumentError("query budget must be non-negative")

    @classmethod
    def from_step(cls, n: int, alphabet_size: int, budget: int, step: Callable,
                  name: str = "tester", tree: Optional[DecisionTree] = None) -> "StepwiseTester":
        """Build a tester from ``step(history, coins) -> NextQuery | Decide``.

        ``history`` is the tuple of ``(index, answer)`` pairs seen so far.
        """
        def program(coins):
            history = ()
            while True:
                action = step(history, coins)
                if isinstance(action, Decide):
                    return action.accept
                if not isinstance(action, NextQuery):
                    raise InvalidArgumentError(f"step emitted {action!r}")
                answer = yield action.index
                history += ((action.index, answer),)

        return cls(n, alphabet_size, budget, program, name, tree)

    def with_tree(self, tree: Optional[DecisionTree]) -> "StepwiseTester":
        return StepwiseTester(self.n, self.alphabet_size, self.budget, self.program, self.name, tree)


Tester = Union[StepwiseTester, DecisionTree]


@dataclass(frozen=True)
class Transcript:
    coin_outcomes: tuple
    queries: tuple          # ((position, answer symbol index), ...), first visits only
    real_query_count: int
    accept: bool

    def to_json(self) -> str:
        return json.dumps({
            "coins": list(self.coin_outcomes),
            "queries": [list(q) for q in self.queries],
            "realQueryCount": self.real_query_count,
            "decision": "accept" if self.accept else "reject",
        }, sort_keys=True)


def _drive(program, coins, answer: Callable[[int], int], budget: int, n: int):
    """Run a program to completion; returns (decision, first-visit queries)."""
    gen = program(coins)
    cache = {}
    queries = []
    try:
        j = next(gen)
        while True:
            if isinstance(j, bool) or not isinstance(j, int) or not 0 <= j < n:
                raise InvalidQueryError(f"query index {j!r} outside [0, {n})")
            if j not in cache:
                if len(queries) >= budget:
                    raise BudgetViolationError(f"more than {budget} distinct queries")
                cache[j] = answer(j)
                queries.append((j, cache[j]))
            j = gen.send(cache[j])
    except StopIteration as stop:
        decision = stop.value
    if not isinstance(decision, bool):
        raise InvalidArgumentError(f"program returned {decision!r} instead of a bool")
    return decision, queries


def run(tester: Tester, X: Word, coins=None) -> Transcript:
    """Run ``tester`` on ``X``; ``coins`` is a coin source or an integer seed."""
    tester = as_stepwise(tester)
    _check_word(tester.n, tester.alphabet_size, X)
    if coins is None or isinstance(coins, int):
        coins = SeededCoins(coins or 0)
    decision, queries = _drive(tester.program, coins, X.__getitem__, tester.budget, tester.n)
    return Transcript(tuple(coins.outcomes), tuple(queries), len(queries), decision)


def _weighted_outcome(coins, weights) -> int:
    den = reduce(math.lcm, (w.denominator for w in weights), 1)
    r = coins.randbelow(den)
    acc = 0
    for i, w in enumerate(weights):
        acc += w.numerator * (den // w.denominator)
        if r < acc:
            return i
    raise AssertionError("weights do not sum to 1")


def as_stepwise(tester: Tester) -> StepwiseTester:
    """Stepwise view of a tree (sampling chance nodes from the coin stream)."""
    if isinstance(tester, StepwiseTester):
        return tester
    if not isinstance(tester, DecisionTree):
        raise InvalidArgumentError(f"not a tester: {tester!r}")
    tree = tester

    def program(coins):
        v = tree.root
        while not isinstance(v, Leaf):
            if isinstance(v, Chance):
                v = v.children[_weighted_outcome(coins, v.weights)]
            else:
                answer = yield v.position
                v = v.children[answer]
        return v.accept

    return StepwiseTester(tree.n, tree.alphabet_size, tree.budget, program, tree.name, tree)


def tree_form(tester: Tester) -> Optional[DecisionTree]:
    return tester if isinstance(tester, DecisionTree) else tester.tree


# ---- unrolling -------------------------------------------------------------

class _NeedCoin(Exception):
    def __init__(self, k):
        self.k = k


class _NeedAnswer(Exception):
    def __init__(self, j):
        self.j = j


class _ScriptedCoins:
    def __init__(self, script, max_draws):
        self._script = script
        self._max_draws = max_draws
        self.outcomes = []

    def randbelow(self, k):
        if len(self.outcomes) >= self._max_draws:
            raise CoinCoverageError(f"tester drew more than {self._max_draws} coins")
        r = self._script.next_coin(k)
        self.outcomes.append(r)
        return r


class _Script:
    def __init__(self, choices):
        self.choices = choices
        self.pos = 0

    def _take(self, need):
        if self.pos == len(self.choices):
            raise need
        c = self.choices[self.pos]
        self.pos += 1
        return c

    def next_coin(self, k):
        return self._take(_NeedCoin(k))

    def answer(self, j):
        return self._take(_NeedAnswer(j))


def tree_from_stepwise(tester: StepwiseTester, max_draws: int = 32) -> DecisionTree:
    """Unroll a stepwise tester over every coin outcome and every answer.

    The coin space is all streams of at most ``max_draws`` uniform draws; a
    tester that needs more raises :class:`CoinCoverageError`. Each
    ``randbelow(k)`` becomes a uniform chance node with ``k`` children.
    """
    k_alpha = tester.alphabet_size

    def build(choices: tuple) -> Node:
        script = _Script(choices)
        coins = _ScriptedCoins(script, max_draws)
        try:
            decision, _ = _drive(tester.program, coins, script.answer, tester.budget, tester.n)
        except _NeedCoin as need:
            return uniform_chance(build(choices + (i,)) for i in range(need.k))
        except _NeedAnswer as need:
            return Query(need.j, tuple(build(choices + (a,)) for a in range(k_alpha)))
        return ACCEPT if decision else REJECT

    return DecisionTree(tester.n, k_alpha, build(()), tester.budget, tester.name)


# ---- Monte Carlo -----------------------------------------------------------

def hoeffding_half_width(trials: int, delta: float = DEFAULT_DELTA) -> float:
    return math.sqrt(math.log(2 / delta) / (2 * trials))


def trials_for_half_width(half_width: float = DEFAULT_HALF_WIDTH, delta: float = DEFAULT_DELTA) -> int:
    if not 0 < half_width < 1 or not 0 < delta < 1:
        raise InvalidArgumentError("half-width and delta must lie in (0, 1)")
    return math.ceil(math.log(2 / delta) / (2 * half_width ** 2))


# Trials run in fixed blocks; block b draws from a generator seeded by
# (master seed, b) alone, so blocks can run in any order or in parallel.
TRIAL_BLOCK = 256


def block_seed(seed: int, block: int) -> int:
    if seed < 0:
        raise InvalidArgumentError("seeds are unsigned")
    return (seed << 40) | block


def _mc_runs(tester: Tester, X: Word, trials: int, seed: int):
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        raise InvalidArgumentError(f"trials must be a positive integer, got {trials!r}")
    tester = as_stepwise(tester)
    _check_word(tester.n, tester.alphabet_size, X)
    answer = X.__getitem__
    for start in range(0, trials, TRIAL_BLOCK):
        rng = random.Random(block_seed(seed, start // TRIAL_BLOCK))
        for _ in range(min(TRIAL_BLOCK, trials - start)):
            yield _drive(tester.program, SeededCoins(rng=rng), answer, tester.budget, tester.n)


def acceptance_probability_mc(tester: Tester, X: Word, trials: int, seed: int = 0,
                              delta: float = DEFAULT_DELTA) -> Estimate:
    accepted = sum(decision for decision, _ in _mc_runs(tester, X, trials, seed))
    return Estimate(accepted / trials, hoeffding_half_width(trials, delta), 1 - delta)


def query_marginals_mc(tester: Tester, X: Word, trials: int, seed: int = 0,
                       delta: float = DEFAULT_DELTA) -> MarginalMap:
    return run_statistics_mc(tester, X, trials, seed, delta)[1]


def run_statistics_mc(tester: Tester, X: Word, trials: int, seed: int = 0,
                      delta: float = DEFAULT_DELTA):
    """Acceptance estimate and query marginals from one shared batch of runs."""
    accepted = 0
    counts: Dict[int, int] = {}
    for decision, queries in _mc_runs(tester, X, trials, seed):
        accepted += decision
        for j, _ in queries:
            counts[j] = counts.get(j, 0) + 1
    hw = hoeffding_half_width(trials, delta)
    return (Estimate(accepted / trials, hw, 1 - delta),
            MarginalMap({j: counts[j] / trials for j in sorted(counts)}, exact=False,
                        half_width=hw, confidence=1 - delta))


def hit_probability_mc(tester: Tester, X: Word, positions, trials: int, seed: int = 0,
                       delta: float = DEFAULT_DELTA) -> Estimate:
    positions = frozenset(positions)
    hits = sum(any(j in positions for j, _ in queries)
               for _, queries in _mc_runs(tester, X, trials, seed))
    return Estimate(hits / trials, hoeffding_half_width(trials, delta), 1 - delta)


# ---- serialization ---------------------------------------------------------

TREE_SCHEMA_VERSION = 1


def rational_to_json(x: Fraction) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def rational_from_json(doc) -> Fraction:
    try:
        return Fraction(int(doc["num"]), int(doc["den"]))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidArgumentError(f"malformed rational {doc!r}: {exc}") from None


def _node_to_json(v: Node) -> dict:
    if isinstance(v, Leaf):
        return {"kind": "leaf", "decision": "accept" if v.accept else "reject"}
    if isinstance(v, Query):
        return {"kind": "query", "position": v.position,
                "children": [_node_to_json(c) for c in v.children]}
    return {"kind": "chance", "weights": [rational_to_json(w) for w in v.weights],
            "children": [_node_to_json(c) for c in v.children]}


def _node_from_json(doc) -> Node:
    try:
        kind = doc["kind"]
        if kind == "leaf":
            if doc["decision"] not in ("accept", "reject"):
                raise TreeValidationError(f"bad leaf decision {doc['decision']!r}")
            return ACCEPT if doc["decision"] == "accept" else REJECT
        if kind == "query":
            return Query(int(doc["position"]), tuple(_node_from_json(c) for c in doc["children"]))
        if kind == "chance":
            return Chance(tuple(rational_from_json(w) for w in doc["weights"]),
                          tuple(_node_from_json(c) for c in doc["children"]))
    except (KeyError, TypeError) as exc:
        raise TreeValidationError(f"malformed tree node: {exc}") from None
    raise TreeValidationError(f"unknown node kind {kind!r}")


def tree_to_document(tree: DecisionTree) -> dict:
    return {"schemaVersion": TREE_SCHEMA_VERSION, "name": tree.name, "n": tree.n,
            "alphabetSize": tree.alphabet_size, "budget": tree.budget,
            "root": _node_to_json(tree.root)}


def tree_from_document(doc: dict) -> DecisionTree:
    try:
        return DecisionTree(int(doc["n"]), int(doc["alphabetSize"]), _node_from_json(doc["root"]),
                            doc.get("budget"), doc.get("name", "tree"))
    except (KeyError, TypeError) as exc:
        raise TreeValidationError(f"malformed tree document: {exc}") from None


def dumps_tree(tree: DecisionTree) -> str:
    return json.dumps(tree_to_document(tree), sort_keys=True)


def loads_tree(text: str) -> DecisionTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeValidationError(f"malformed tree JSON: {exc}") from None
    return tree_from_document(doc)
