"""The two without-loss-of-generality reductions for distinguishers.

``restrict_to_D`` confines all real queries to the difference set ``D`` by
answering any other query with ``V``'s symbol (which equals ``U``'s there).
``nonadaptivize`` then simulates the restricted tester against ``V``,
queries the real input at the simulated positions afterwards, and rejects
on any disagreement with ``V``.

Both accept either tester form. A stepwise tester that carries a tree form
has both forms transformed.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Tuple

from .errors import InvalidArgumentError, InvalidQueryError
from .machines import (
    REJECT,
    Chance,
    DecisionTree,
    Leaf,
    Query,
    StepwiseTester,
    Tester,
    acceptance_probability_exact,
    hit_probability_exact,
    is_nonadaptive,
    query_depth,
    tree_form,
)
from .words import AttackInstance, Word


@dataclass(frozen=True)
class TransformReport:
    original_budget: int
    transformed_budget: int
    virtual_answer_count: Optional[int]      # known statically for tree form only
    structural_nonadaptive: Optional[bool]   # None when no tree form is available


def _check_dims(tester: Tester, inst: AttackInstance):
    if tester.n != inst.n or tester.alphabet_size != len(inst.alphabet):
        raise InvalidArgumentError(
            f"tester (n={tester.n}, |alphabet|={tester.alphabet_size}) does not match instance "
            f"(n={inst.n}, |alphabet|={len(inst.alphabet)})")


def _chance(weights, children):
    # all-equal leaf children carry no information; drop the coin
    first = children[0]
    if isinstance(first, Leaf) and all(c is first or c == first for c in children):
        return first
    return Chance(tuple(weights), tuple(children))


# ---- restrict to D ---------------------------------------------------------

def _restrict_tree(tree: DecisionTree, inst: AttackInstance) -> Tuple[DecisionTree, int]:
    D = frozenset(inst.D)
    V = inst.V
    memo = {}
    removed = set()

    def go(v):
        key = id(v)
        if key in memo:
            return memo[key]
        if isinstance(v, Leaf):
            out = v
        elif isinstance(v, Query):
            if v.position in D:
                out = Query(v.position, tuple(go(c) for c in v.children))
            else:
                removed.add(id(v))
                out = go(v.children[V[v.position]])
        else:
            out = _chance(v.weights, [go(c) for c in v.children])
        memo[key] = out
        return out

    root = go(tree.root)
    budget = min(tree.budget, query_depth(root))
    return DecisionTree(tree.n, tree.alphabet_size, root, budget, f"restrict({tree.name})"), len(removed)


def _restrict_program(program, inst: AttackInstance):
    D = frozenset(inst.D)
    V = inst.V
    n = inst.n

    def restricted(coins):
        inner = program(coins)
        try:
            j = next(inner)
            while True:
                if j in D:
                    answer = yield j
                else:
                    if isinstance(j, bool) or not isinstance(j, int) or not 0 <= j < n:
                        raise InvalidQueryError(f"query index {j!r} outside [0, {n})")
                    answer = V[j]
                j = inner.send(answer)
        except StopIteration as stop:
            return stop.value

    return restricted


def restrict_to_D(tester: Tester, inst: AttackInstance):
    """Return ``(A', report)`` where ``A'`` never queries outside ``inst.D``."""
    _check_dims(tester, inst)
    if isinstance(tester, DecisionTree):
        out, removed = _restrict_tree(tester, inst)
        return out, TransformReport(tester.budget, out.budget, removed, is_nonadaptive(out))
    tree, removed = (None, None)
    if tester.tree is not None:
        tree, removed = _restrict_tree(tester.tree, inst)
    budget = min(tester.budget, len(inst.D))
    out = StepwiseTester(tester.n, tester.alphabet_size, budget,
                         _restrict_program(tester.program, inst),
                         f"restrict({tester.name})", tree)
    return out, TransformReport(tester.budget, budget, removed,
                                None if tree is None else is_nonadaptive(tree))


# ---- non-adaptivize --------------------------------------------------------

def _nonadaptive_tree(tree: DecisionTree, inst: AttackInstance) -> DecisionTree:
    V = inst.V
    memo = {}

    def go(v, mismatched: bool):
        key = (id(v), mismatched)
        if key in memo:
            return memo[key]
        if isinstance(v, Leaf):
            out = REJECT if mismatched else v
        elif isinstance(v, Query):
            follow = v.children[V[v.position]]
            out = Query(v.position, tuple(
                go(follow, mismatched or s != V[v.position]) for s in range(tree.alphabet_size)))
        else:
            out = _chance(v.weights, [go(c, mismatched) for c in v.children])
        memo[key] = out
        return out

    root = go(tree.root, False)
    return DecisionTree(tree.n, tree.alphabet_size, root, tree.budget, f"nonadaptive({tree.name})")


def _nonadaptive_program(program, inst: AttackInstance):
    V = inst.V

    def nonadaptive(coins):
        # one coin stream serves the simulation and the simulated decision
        inner = program(coins)
        positions = []
        try:
            j = next(inner)
            while True:
                if j not in positions:
                    positions.append(j)
                j = inner.send(V[j])
        except StopIteration as stop:
            decision = stop.value
        mismatch = False
        for j in positions:
            answer = yield j
            mismatch = mismatch or answer != V[j]
        return decision and not mismatch

    return nonadaptive


def nonadaptivize(tester: Tester, inst: AttackInstance):
    """Return ``(A'', report)``: restrict to ``D``, then replace adaptivity by simulation on ``V``."""
    restricted, first = restrict_to_D(tester, inst)
    if isinstance(restricted, DecisionTree):
        out = _nonadaptive_tree(restricted, inst)
        return out, TransformReport(tester.budget, out.budget, first.virtual_answer_count,
                                    is_nonadaptive(out))
    tree = None if restricted.tree is None else _nonadaptive_tree(restricted.tree, inst)
    out = StepwiseTester(restricted.n, restricted.alphabet_size, restricted.budget,
                         _nonadaptive_program(restricted.program, inst),
                         f"nonadaptive({tester.name})", tree)
    return out, TransformReport(tester.budget, out.budget, first.virtual_answer_count,
                                None if tree is None else is_nonadaptive(tree))


# ---- equivalence -----------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceRow:
    word: Word
    kind: str                   # "V", "hybrid" or "other"
    accept_original: Fraction
    accept_transformed: Fraction
    mismatch_probability: Fraction
    ok: bool


@dataclass(frozen=True)
class EquivalenceReport:
    rows: tuple

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.rows)

    def __len__(self):
        return len(self.rows)


def _is_hybrid(X: Word, inst: AttackInstance) -> bool:
    D = set(inst.D)
    return all(X[j] == inst.V[j] if j not in D else X[j] in (inst.U[j], inst.V[j])
               for j in range(inst.n))


def transform_equivalence_check(original: Tester, transformed: Tester, inst: AttackInstance,
                                inputs: Iterable[Word]) -> EquivalenceReport:
    """Check the distinguisher contract between a tester and its transform.

    On ``V`` acceptance must be identical and the mismatch check must never
    fire. On hybrids ``U_A`` the transform may only reject more often.
    Other inputs are reported but unconstrained.
    """
    t_orig, t_new = tree_form(original), tree_form(transformed)
    if t_orig is None or t_new is None:
        raise InvalidArgumentError("exact tree forms are required for the equivalence check")
    rows = []
    for X in inputs:
        a0 = acceptance_probability_exact(t_orig, X)
        a1 = acceptance_probability_exact(t_new, X)
        differing = [j for j in range(inst.n) if X[j] != inst.V[j]]
        mismatch = hit_probability_exact(t_new, X, differing)
        if X == inst.V:
            kind, ok = "V", a0 == a1 and mismatch == 0
        elif _is_hybrid(X, inst):
            kind, ok = "hybrid", a1 <= a0 and a1 <= a0 + mismatch
        else:
            kind, ok = "other", True
        rows.append(EquivalenceRow(X, kind, a0, a1, mismatch, ok))
    return EquivalenceReport(tuple(rows))
