"""Reference properties, attack instances and testers.

Everything here is constructible from its parameters alone; the registry
``CATALOG`` maps names to constructors for the command line.
"""
from __future__ import annotations

import inspect
import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable

from .errors import InvalidArgumentError, ParameterRangeError
from .machines import (
    ACCEPT,
    REJECT,
    Chance,
    DecisionTree,
    Query,
    StepwiseTester,
    tree_from_stepwise,
)
from .words import BINARY, Alphabet, AttackInstance, Property, Word, build_attack_instance

# tree forms are built only while the number of chance branches stays below this
MAX_TREE_BRANCHES = 1 << 13


def zero_property(n: int, alphabet: Alphabet = BINARY) -> Property:
    if n < 1:
        raise ParameterRangeError(f"n must be positive, got {n}")
    return Property(alphabet, n, (Word.constant(n, 0, alphabet),))


def two_member_property(n: int) -> Property:
    """``{0^n, 1^(n/2) 0^(n/2)}`` over the binary alphabet."""
    if n < 4 or n % 2:
        raise ParameterRangeError(f"two_member_property needs an even n >= 4, got {n}")
    half = n // 2
    return Property(BINARY, n, (Word.constant(n, 0), Word(BINARY, (1,) * half + (0,) * half)))


def zero_instance(n: int = 8) -> AttackInstance:
    return build_attack_instance(Word.constant(n, 1), zero_property(n))


def two_member_instance(n: int = 8) -> AttackInstance:
    return build_attack_instance(Word.constant(n, 1), two_member_property(n))


# ---- testers ---------------------------------------------------------------

class _ConstantProgram:
    def __init__(self, accept):
        self.accept = accept

    def __call__(self, coins):
        return self.accept
        yield  # pragma: no cover - makes this a generator


def constant_tester(n: int, accept: bool = True, alphabet_size: int = 2) -> StepwiseTester:
    tree = DecisionTree(n, alphabet_size, ACCEPT if accept else REJECT, 0,
                        "constant_accept" if accept else "constant_reject")
    return StepwiseTester(n, alphabet_size, 0, _ConstantProgram(accept), tree.name, tree)


class _SamplerProgram:
    def __init__(self, n, q, with_replacement):
        self.n, self.q, self.with_replacement = n, q, with_replacement

    def __call__(self, coins):
        ok = True
        remaining = list(range(self.n))
        for _ in range(self.q):
            if self.with_replacement:
                j = coins.randbelow(self.n)
            else:
                j = remaining.pop(coins.randbelow(len(remaining)))
            answer = yield j
            ok = ok and answer == 0
        return ok


def _surjections(q: int, m: int) -> int:
    """Number of maps from q draws onto exactly m given positions."""
    return sum((-1) ** i * comb(m, i) * (m - i) ** q for i in range(m + 1))


def _all_zero_chain(positions, alphabet_size, memo):
    """Query ``positions`` in order; accept iff every symbol read is 0."""
    def go(i, ok):
        key = (i, ok)
        if key not in memo:
            if i == len(positions):
                memo[key] = ACCEPT if ok else REJECT
            else:
                memo[key] = Query(positions[i], tuple(
                    go(i + 1, ok and s == 0) for s in range(alphabet_size)))
        return memo[key]
    return go(0, True)


def _sampler_tree(n, q, with_replacement, alphabet_size, name):
    # chance over the set of distinct positions read, then read them in order
    if with_replacement:
        sizes = range(1, min(q, n) + 1)
        weight = lambda m: Fraction(_surjections(q, m), n ** q)
    else:
        sizes = (q,)
        weight = lambda m: Fraction(1, comb(n, m))
    if sum(comb(n, m) for m in sizes) > MAX_TREE_BRANCHES:
        return None
    weights, children = [], []
    for m in sizes:
        w = weight(m)
        for S in itertools.combinations(range(n), m):
            weights.append(w)
            children.append(_all_zero_chain(S, alphabet_size, {}))
    root = children[0] if len(children) == 1 else Chance(tuple(weights), tuple(children))
    return DecisionTree(n, alphabet_size, root, q, name)


def uniform_sampler_tester(n: int, q: int, with_replacement: bool = False,
                           alphabet_size: int = 2) -> StepwiseTester:
    """Read ``q`` uniformly random positions; accept iff every symbol read is 0.

    Without replacement ``q`` may not exceed ``n``. With replacement any
    ``q >= 1`` is allowed and repeated positions cost nothing. Rejects
    ``U_A`` (``V = 0^n``) with probability ``1 - ((n-|A|)/n)**q`` when
    sampling with replacement.
    """
    if q < 1 or (not with_replacement and q > n):
        raise ParameterRangeError(
            f"sampler needs 1 <= q{' <= n' if not with_replacement else ''}, got q={q}, n={n}")
    name = f"uniform_sampler(q={q},{'with' if with_replacement else 'without'}_replacement)"
    tree = _sampler_tree(n, q, with_replacement, alphabet_size, name)
    return StepwiseTester(n, alphabet_size, q, _SamplerProgram(n, q, with_replacement), name, tree)


class _ProbeProgram:
    def __init__(self, D, V, q, randomize_start):
        self.D, self.V, self.q, self.randomize_start = D, V, q, randomize_start

    def __call__(self, coins):
        r = coins.randbelow(len(self.D)) if self.randomize_start else 0
        remaining = list(self.D[r:] + self.D[:r])
        j = remaining.pop(0)
        answer = yield j
        ok = answer == self.V[j]
        for _ in range(self.q - 1):
            # agreement with V continues in order, disagreement skips one position
            pick = 0 if answer == self.V[j] else min(1, len(remaining) - 1)
            j = remaining.pop(pick)
            answer = yield j
            ok = ok and answer == self.V[j]
        return ok


def adaptive_probe_tester(inst: AttackInstance, q: int, randomize_start: bool = True,
                          max_tree_size: int = 16) -> StepwiseTester:
    """An adaptive tester whose next position depends on the previous answer.

    Starting from a (random) rotation ``d0, d1, ...`` of ``D`` it reads
    ``d0``; if that agrees with ``V`` it reads ``d1`` next, otherwise ``d2``.
    Accepts iff every symbol read agrees with ``V``.
    """
    if not 1 <= q <= len(inst.D):
        raise ParameterRangeError(f"probe needs 1 <= q <= |D| = {len(inst.D)}, got {q}")
    name = f"adaptive_probe(q={q})"
    tester = StepwiseTester(inst.n, len(inst.alphabet), q,
                            _ProbeProgram(tuple(inst.D), inst.V, q, randomize_start), name)
    if q <= 3 and inst.n <= max_tree_size:
        tester = tester.with_tree(tree_from_stepwise(tester, max_draws=1))
    return tester


def reference_testers(inst: AttackInstance, max_q: int = 3):
    """Every catalog tester with at most ``max_q`` queries for ``inst``."""
    n = inst.n
    testers = [constant_tester(n, True), constant_tester(n, False)]
    for q in range(1, max_q + 1):
        if q <= n:
            testers.append(uniform_sampler_tester(n, q, with_replacement=False))
        testers.append(uniform_sampler_tester(n, q, with_replacement=True))
        if q <= len(inst.D):
            testers.append(adaptive_probe_tester(inst, q))
    return testers


# ---- registry --------------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    kind: str            # "property", "instance" or "tester"
    constructor: Callable
    doc: str

    def parameters(self):
        return list(inspect.signature(self.constructor).parameters)

    def build(self, **params):
        try:
            inspect.signature(self.constructor).bind(**params)
        except TypeError as exc:
            raise InvalidArgumentError(f"bad parameters for {self.name}: {exc}") from None
        return self.constructor(**params)


CATALOG = {e.name: e for e in [
    CatalogEntry("zero_property", "property", zero_property,
                 "{0^n}; the all-ones word is at distance 1."),
    CatalogEntry("two_member_property", "property", two_member_property,
                 "{0^n, 1^(n/2)0^(n/2)}; nearest member of 1^n is not 0^n."),
    CatalogEntry("zero_instance", "instance", zero_instance,
                 "U = 1^n against zero_property(n); D is every position."),
    CatalogEntry("two_member_instance", "instance", two_member_instance,
                 "U = 1^n against two_member_property(n); D is the second half."),
    CatalogEntry("constant_tester", "tester", constant_tester,
                 "Zero queries, fixed decision."),
    CatalogEntry("uniform_sampler_tester", "tester", uniform_sampler_tester,
                 "q uniform reads, accept iff all are 0; the matching upper bound."),
    CatalogEntry("adaptive_probe_tester", "tester", adaptive_probe_tester,
                 "Answer-dependent probe of D; exercises non-adaptivization."),
]}


def build(name: str, **params):
    try:
        entry = CATALOG[name]
    except KeyError:
        raise InvalidArgumentError(f"no catalog entry named {name!r}") from None
    return entry.build(**params)
