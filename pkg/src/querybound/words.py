"""Words over a finite alphabet, explicit properties, and hybrid inputs.

Positions are 0-based throughout. All distances are exact ``Fraction``
values so that equalities such as ``d(U_A, P) == |A|/n`` can be checked
without tolerance.
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .errors import (
    DegenerateInstanceError,
    EmptyPropertyError,
    EnumerationBoundError,
    InvalidArgumentError,
)

DEFAULT_ENUMERATION_BOUND = 2 ** 20


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if len(symbols) < 2:
            raise InvalidArgumentError("an alphabet needs at least two symbols")
        if len(set(symbols)) != len(symbols):
            raise InvalidArgumentError(f"alphabet symbols are not distinct: {symbols!r}")
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def parse(cls, text: str) -> "Alphabet":
        """``Alphabet.parse("01")`` gives the binary alphabet, symbol order as written."""
        return cls(tuple(text))

    def __len__(self):
        return len(self.symbols)

    def index(self, symbol) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise InvalidArgumentError(f"symbol {symbol!r} not in alphabet {self}") from None

    def __str__(self):
        return "".join(str(s) for s in self.symbols)


BINARY = Alphabet(("0", "1"))


@dataclass(frozen=True)
class Word:
    alphabet: Alphabet
    values: tuple

    def __post_init__(self):
        values = tuple(self.values)
        if not values:
            raise InvalidArgumentError("words have length n >= 1")
        k = len(self.alphabet)
        for v in values:
            if not isinstance(v, int) or not 0 <= v < k:
                raise InvalidArgumentError(f"symbol index {v!r} outside alphabet of size {k}")
        object.__setattr__(self, "values", values)

    @classmethod
    def parse(cls, text: str, alphabet: Alphabet = BINARY) -> "Word":
        return cls(alphabet, tuple(alphabet.index(c) for c in text))

    @classmethod
    def constant(cls, n: int, symbol: int = 0, alphabet: Alphabet = BINARY) -> "Word":
        return cls(alphabet, (symbol,) * n)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, j):
        return self.values[j]

    def __iter__(self):
        return iter(self.values)

    def __str__(self):
        return "".join(str(self.alphabet.symbols[v]) for v in self.values)

    def replace(self, updates: dict) -> "Word":
        values = list(self.values)
        for j, v in updates.items():
            values[j] = v
        return Word(self.alphabet, tuple(values))


def all_words(alphabet: Alphabet, n: int, bound: int = DEFAULT_ENUMERATION_BOUND) -> Iterator[Word]:
    """Every word of length ``n`` in lexicographic order; refuses when ``|alphabet|**n > bound``."""
    total = len(alphabet) ** n
    if total > bound:
        raise EnumerationBoundError(
            f"{total} words of length {n} exceed the enumeration bound {bound}")
    for values in itertools.product(range(len(alphabet)), repeat=n):
        yield Word(alphabet, values)


@dataclass(frozen=True)
class Property:
    """An explicit finite set of words of one length, kept in lexicographic order."""

    alphabet: Alphabet
    n: int
    members: tuple = field(default=())

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise InvalidArgumentError(f"property length must be a positive integer, got {self.n!r}")
        seen = set()
        for w in self.members:
            if w.alphabet != self.alphabet or len(w) != self.n:
                raise InvalidArgumentError(f"member {w} does not match alphabet/length of property")
            if w.values in seen:
                raise InvalidArgumentError(f"duplicate member {w}")
            seen.add(w.values)
        object.__setattr__(self, "members", tuple(sorted(self.members, key=lambda w: w.values)))
        object.__setattr__(self, "_index", frozenset(seen))

    @classmethod
    def from_strings(cls, alphabet, n: int, strings: Iterable[str]) -> "Property":
        if isinstance(alphabet, str):
            alphabet = Alphabet.parse(alphabet)
        return cls(alphabet, n, tuple(Word.parse(s, alphabet) for s in strings))

    @classmethod
    def from_predicate(cls, alphabet: Alphabet, n: int, predicate: Callable[[Word], bool],
                       bound: int = DEFAULT_ENUMERATION_BOUND) -> "Property":
        """Materialize ``{X : predicate(X)}`` by enumerating all ``|alphabet|**n`` words."""
        return cls(alphabet, n, tuple(w for w in all_words(alphabet, n, bound) if predicate(w)))

    def __contains__(self, word) -> bool:
        return word.alphabet == self.alphabet and word.values in self._index

    def __len__(self):
        return len(self.members)

    def require_nonempty(self):
        if not self.members:
            raise EmptyPropertyError("the property has no members of this length")


def _check_compatible(X: Word, Y: Word):
    if X.alphabet != Y.alphabet:
        raise InvalidArgumentError("words are over different alphabets")
    if len(X) != len(Y):
        raise InvalidArgumentError(f"length mismatch: {len(X)} vs {len(Y)}")


def hamming_distance(X: Word, Y: Word) -> Fraction:
    _check_compatible(X, Y)
    return Fraction(sum(a != b for a, b in zip(X, Y)), len(X))


def distance_to_property(X: Word, P: Property) -> Fraction:
    P.require_nonempty()
    if X.alphabet != P.alphabet or len(X) != P.n:
        raise InvalidArgumentError("word is not compatible with the property")
    return min(hamming_distance(X, Y) for Y in P.members)


def nearest_satisfying(U: Word, P: Property) -> Word:
    """Closest member of ``P``; ties go to the lexicographically smallest member."""
    P.require_nonempty()
    if U.alphabet != P.alphabet or len(U) != P.n:
        raise InvalidArgumentError("word is not compatible with the property")
    # members are sorted, and min() keeps the first of equal keys
    return min(P.members, key=lambda Y: hamming_distance(U, Y))


@dataclass(frozen=True)
class AttackInstance:
    property: Property
    U: Word
    V: Word
    D: tuple
    k_prime: int

    @property
    def n(self) -> int:
        return self.property.n

    @property
    def alphabet(self) -> Alphabet:
        return self.property.alphabet

    def hybrids(self, size: int) -> Iterator[Word]:
        """All ``U_A`` with ``|A| == size``, with ``A`` in lexicographic order."""
        for A in itertools.combinations(self.D, size):
            yield hybrid(self, A)


def build_attack_instance(U: Word, P: Property) -> AttackInstance:
    P.require_nonempty()
    if U in P:
        raise DegenerateInstanceError(f"{U} satisfies the property; the difference set would be empty")
    V = nearest_satisfying(U, P)
    D = tuple(j for j in range(P.n) if U[j] != V[j])
    k_prime = len(D)
    if Fraction(k_prime, P.n) != distance_to_property(U, P):
        raise AssertionError("nearest member does not realize the distance to the property")
    return AttackInstance(P, U, V, D, k_prime)


def hybrid(inst: AttackInstance, A: Iterable[int]) -> Word:
    """``U`` on the positions in ``A``, ``V`` everywhere else."""
    A = set(A)
    if not A <= set(inst.D):
        raise InvalidArgumentError(f"positions {sorted(A - set(inst.D))} are not in D")
    return inst.V.replace({j: inst.U[j] for j in A})


@dataclass(frozen=True)
class GradedReport:
    passed: bool
    exhaustive: bool
    checked: int
    total_subsets: int
    counterexample: Optional[tuple] = None   # (A, observed distance, expected distance)


def _graded_subsets(D: Sequence[int], rng: random.Random, samples_per_size: int):
    m = len(D)
    yield ()
    yield tuple(D)
    for j in D:
        yield (j,)
    for j in D:
        yield tuple(x for x in D if x != j)
    for size in range(2, m - 1):
        count = min(samples_per_size, comb(m, size))
        drawn = set()
        while len(drawn) < count:
            drawn.add(tuple(sorted(rng.sample(D, size))))
        yield from sorted(drawn)


def verify_graded_distances(inst: AttackInstance, max_exhaustive: int = 2 ** 16,
                            seed: int = 0, samples_per_size: int = 32) -> GradedReport:
    """Check ``d(U_A, P) == |A|/n`` by brute-force distance computation.

    Every ``A ⊆ D`` is tried when ``2**|D| <= max_exhaustive``; otherwise the
    empty set, ``D``, all singletons, all co-singletons and a seeded sample of
    each intermediate size.
    """
    m = len(inst.D)
    total = 2 ** m
    exhaustive = total <= max_exhaustive
    if exhaustive:
        subsets = itertools.chain.from_iterable(
            itertools.combinations(inst.D, size) for size in range(m + 1))
    else:
        subsets = _graded_subsets(list(inst.D), random.Random(seed), samples_per_size)
    checked = 0
    seen = set()
    for A in subsets:
        if A in seen:
            continue
        seen.add(A)
        checked += 1
        expected = Fraction(len(A), inst.n)
        observed = distance_to_property(hybrid(inst, A), inst.property)
        if observed != expected:
            return GradedReport(False, exhaustive, checked, total, (A, observed, expected))
    return GradedReport(True, exhaustive, checked, total)


# ---- property files --------------------------------------------------------

def property_from_document(doc: dict) -> Property:
    try:
        alphabet = Alphabet.parse(str(doc["alphabet"]))
        members = list(doc["members"])
        n = int(doc["n"]) if "n" in doc else (len(members[0]) if members else None)
    except (KeyError, TypeError, IndexError) as exc:
        raise InvalidArgumentError(f"malformed property document: {exc}") from None
    if n is None:
        raise InvalidArgumentError("property document needs 'n' when it has no members")
    for s in members:
        if len(s) != n:
            raise InvalidArgumentError(f"member {s!r} does not have length {n}")
    return Property.from_strings(alphabet, n, members)


def parse_property(text: str) -> Property:
    """Parse a property document.

    Two layouts are accepted. JSON::

        {"alphabet": "01", "n": 8, "members": ["00000000", "11110000"]}

    or plain text with ``alphabet:`` and ``n:`` header lines followed by one
    member per line (``#`` starts a comment)::

        alphabet: 01
        n: 8
        00000000
        11110000
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"malformed property JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise InvalidArgumentError("property JSON must be an object")
        return property_from_document(doc)
    doc = {"members": []}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if sep and key.strip() in ("alphabet", "n"):
            doc[key.strip()] = value.strip()
        else:
            doc["members"].append(line)
    if "alphabet" not in doc:
        raise InvalidArgumentError("property file is missing an 'alphabet:' line")
    return property_from_document(doc)


def load_property(path) -> Property:
    return parse_property(Path(path).read_text())


def property_to_document(P: Property) -> dict:
    return {"alphabet": str(P.alphabet), "n": P.n, "members": [str(w) for w in P.members]}
