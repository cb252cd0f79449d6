"""The hybrid-input attack, the query floor, and tester validity checks.

Given a tester with ``q`` queries and an attack instance ``(U, V, D)``, the
attack non-adaptivizes the tester, measures how often each position of
``D`` is queried on ``V``, flips the ``l`` least-queried positions to build
``U_{D'}``, and compares acceptance on ``V`` with acceptance on ``U_{D'}``.
The two differ by at most ``q*l/|D|``, so below ``|D|/(3l)`` queries the
tester cannot separate them by the ``1/3`` its thresholds demand.
"""
from __future__ import annotations

import enum
import itertools
import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .errors import (
    InvalidArgumentError,
    InvariantViolation,
    ModeUnavailableError,
    ParameterRangeError,
)
from .machines import (
    DEFAULT_DELTA,
    DEFAULT_HALF_WIDTH,
    DecisionTree,
    Estimate,
    MarginalMap,
    Tester,
    acceptance_probability_exact,
    acceptance_probability_mc,
    as_stepwise,
    hit_probability_exact,
    hit_probability_mc,
    query_marginals_exact,
    query_marginals_mc,
    rational_to_json,
    tree_form,
    trials_for_half_width,
)
from .transforms import nonadaptivize
from .words import (
    DEFAULT_ENUMERATION_BOUND,
    AttackInstance,
    Property,
    Word,
    all_words,
    distance_to_property,
    hybrid,
)

CERTIFICATE_SCHEMA_VERSION = 1

Probability = Union[Fraction, Estimate]


class Mode(str, enum.Enum):
    EXACT = "exact"
    MC = "mc"


class Verdict(str, enum.Enum):
    REFUTED_BY_GAP = "RefutedByGap"
    NOT_APPLICABLE = "NotApplicable"
    SURVIVES = "Survives"
    INCONCLUSIVE = "Inconclusive"


class Outcome(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Thresholds:
    accept_completeness: Fraction = Fraction(2, 3)
    reject_soundness: Fraction = Fraction(2, 3)

    def __post_init__(self):
        for name in ("accept_completeness", "reject_soundness"):
            value = Fraction(getattr(self, name))
            if not Fraction(1, 2) < value <= 1:
                raise ParameterRangeError(f"{name} must lie in (1/2, 1], got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def parse(cls, text: str) -> "Thresholds":
        """``"2/3,3/4"`` -> completeness 2/3, soundness 3/4."""
        try:
            a, b = text.split(",")
            return cls(Fraction(a.strip()), Fraction(b.strip()))
        except ValueError as exc:
            raise InvalidArgumentError(f"thresholds must look like 'a/b,c/d': {exc}") from None

    @property
    def required_gap(self) -> Fraction:
        """Smallest ``acc(V) - acc(U_A)`` a valid distinguisher can have."""
        return self.accept_completeness + self.reject_soundness - 1


def _mode(mode) -> Mode:
    try:
        return Mode(mode)
    except ValueError:
        raise InvalidArgumentError(f"unknown mode {mode!r}; expected 'exact' or 'mc'") from None


def _require_tree(tester: Tester) -> DecisionTree:
    tree = tree_form(tester)
    if tree is None:
        raise ModeUnavailableError(f"{tester.name} has no tree form; use Monte Carlo mode")
    return tree


def theoretical_floor(d_size: int, l: int) -> Fraction:
    if not 1 <= l <= d_size:
        raise ParameterRangeError(f"need 1 <= l <= |D|, got l={l}, |D|={d_size}")
    return Fraction(d_size, 3 * l)


def corollary_params(alpha, epsilon, n: int):
    """``(ceil(alpha*n), ceil(epsilon*n))`` for a length at which the lower bound applies."""
    alpha, epsilon = Fraction(alpha), Fraction(epsilon)
    if not epsilon > 0:
        raise ParameterRangeError(f"violated 0 < epsilon (epsilon={epsilon})")
    if not epsilon < alpha:
        raise ParameterRangeError(f"violated epsilon < alpha (epsilon={epsilon}, alpha={alpha})")
    if not alpha <= 1:
        raise ParameterRangeError(f"violated alpha <= 1 (alpha={alpha})")
    if not n > 1 / epsilon:
        raise ParameterRangeError(f"violated n > 1/epsilon (n={n}, 1/epsilon={1 / epsilon})")
    if not n > 1 / (alpha - epsilon):
        raise ParameterRangeError(
            f"violated n > 1/(alpha - epsilon) (n={n}, 1/(alpha-epsilon)={1 / (alpha - epsilon)})")
    k, l = math.ceil(alpha * n), math.ceil(epsilon * n)
    if not 1 <= l < k:
        raise InvariantViolation(f"derived l={l}, k={k} violate 1 <= l < k")
    return k, l


def select_low_marginal_set(marginals: MarginalMap, l: int, D=None, q=None) -> tuple:
    """The ``l`` positions of ``D`` with the smallest marginals, lowest index first on ties.

    With exact marginals and ``q`` given, also asserts that the chosen
    positions carry at most ``q*l/|D|`` of the query mass.
    """
    D = tuple(sorted(marginals.values) if D is None else D)
    if not 1 <= l <= len(D):
        raise ParameterRangeError(f"need 1 <= l <= |D|, got l={l}, |D|={len(D)}")
    chosen = sorted(sorted(D, key=lambda j: (marginals[j], j))[:l])
    if marginals.exact and q is not None:
        mass = marginals.total(chosen)
        if mass > Fraction(q * l, len(D)):
            raise InvariantViolation(f"low-marginal set carries {mass} > q*l/|D|")
    return tuple(chosen)


# ---- certificates ----------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    tester: str
    mode: Mode
    n: int
    d_size: int
    l: int
    q: int
    k: int
    marginals: MarginalMap
    d_prime: tuple
    attack_word: Word
    marginal_sum: Probability          # over all of D
    marginal_sum_d_prime: Probability
    hit_probability: Probability       # Pr[some position of D' is queried]
    accept_on_v: Probability           # non-adaptivized tester
    accept_on_attack: Probability
    gap: Probability                   # |accept_on_v - accept_on_attack|
    original_accept_on_v: Probability
    original_accept_on_attack: Probability
    original_gap: Probability          # signed, acc(V) - acc(U_D')
    union_bound: Fraction
    floor: Fraction                    # |D| / 3l, from k' = |D|
    floor_k: Fraction                  # k / 3l
    required_gap: Fraction
    verdict: Verdict
    seed: Optional[int] = None
    trials: Optional[int] = None

    @property
    def below_floor(self) -> bool:
        return self.q < self.floor

    def to_document(self) -> dict:
        def enc(x):
            if isinstance(x, Estimate):
                return {"estimate": x.estimate, "halfWidth": x.half_width,
                        "confidence": x.confidence}
            return rational_to_json(x)

        marginals = {str(j): (rational_to_json(p) if self.marginals.exact else
                              enc(self.marginals.estimate(j)))
                     for j, p in sorted(self.marginals.values.items())}
        return {
            "schemaVersion": CERTIFICATE_SCHEMA_VERSION,
            "tester": self.tester,
            "mode": self.mode.value,
            "seed": self.seed,
            "trials": self.trials,
            "instance": {"n": self.n, "dSize": self.d_size, "l": self.l, "q": self.q, "k": self.k},
            "marginals": marginals,
            "dPrime": list(self.d_prime),
            "attackWord": str(self.attack_word),
            "marginalSum": enc(self.marginal_sum),
            "marginalSumDPrime": enc(self.marginal_sum_d_prime),
            "hitProbability": enc(self.hit_probability),
            "acceptOnV": enc(self.accept_on_v),
            "acceptOnAttack": enc(self.accept_on_attack),
            "gap": enc(self.gap),
            "originalAcceptOnV": enc(self.original_accept_on_v),
            "originalAcceptOnAttack": enc(self.original_accept_on_attack),
            "originalGap": enc(self.original_gap),
            "unionBound": enc(self.union_bound),
            "floor": enc(self.floor),
            "floorK": enc(self.floor_k),
            "belowFloor": self.below_floor,
            "requiredGap": enc(self.required_gap),
            "verdict": self.verdict.value,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, indent=2)


def _check_chain(cert_parts: dict, q: int, l: int, d_size: int):
    """Every inequality of the gap-bound chain, as exact rationals."""
    union_bound = Fraction(q * l, d_size)
    checks = [
        ("sum_D p_j <= q", cert_parts["marginal_sum"] <= q),
        ("sum_D' p_j <= q*l/|D|", cert_parts["marginal_sum_d_prime"] <= union_bound),
        ("Pr[E_D'] <= sum_D' p_j", cert_parts["hit_probability"] <= cert_parts["marginal_sum_d_prime"]),
        ("gap <= Pr[E_D']", cert_parts["gap"] <= cert_parts["hit_probability"]),
        ("|original gap| <= Pr[E_D']", abs(cert_parts["original_gap"]) <= cert_parts["hit_probability"]),
    ]
    for label, ok in checks:
        if not ok:
            raise InvariantViolation(f"gap-bound chain broken: {label} ({cert_parts})")


def _seed(seed: int, stream: int) -> int:
    return seed * 16 + stream


def attack(tester: Tester, inst: AttackInstance, l: int, mode="exact", *, k: Optional[int] = None,
           thresholds: Thresholds = Thresholds(), seed: int = 0, trials: Optional[int] = None,
           half_width: float = DEFAULT_HALF_WIDTH, delta: float = DEFAULT_DELTA) -> Certificate:
    """Run the hybrid attack and return a :class:`Certificate`.

    In exact mode every inequality of the bound chain is verified and a
    violation raises :class:`InvariantViolation`. In Monte Carlo mode the
    verdict is three-valued and becomes ``Inconclusive`` whenever the
    confidence interval of the gap straddles the required gap.
    """
    mode = _mode(mode)
    d_size = len(inst.D)
    if not 1 <= l <= d_size:
        raise ParameterRangeError(f"need 1 <= l <= |D|, got l={l}, |D|={d_size}")
    k = d_size if k is None else k
    if not 1 <= k <= d_size:
        raise ParameterRangeError(f"k must satisfy 1 <= k <= |D| = {d_size}, got {k}")
    q = tester.budget
    transformed, _ = nonadaptivize(tester, inst)
    V = inst.V
    union_bound = Fraction(q * l, d_size)

    if mode is Mode.EXACT:
        tree = _require_tree(tester)
        t_tree = _require_tree(transformed)
        marginals = query_marginals_exact(t_tree, V).restrict(inst.D)
        d_prime = select_low_marginal_set(marginals, l, inst.D, q)
        U_att = hybrid(inst, d_prime)
        parts = {
            "marginal_sum": marginals.total(),
            "marginal_sum_d_prime": marginals.total(d_prime),
            "hit_probability": hit_probability_exact(t_tree, V, d_prime),
            "accept_on_v": acceptance_probability_exact(t_tree, V),
            "accept_on_attack": acceptance_probability_exact(t_tree, U_att),
            "original_accept_on_v": acceptance_probability_exact(tree, V),
            "original_accept_on_attack": acceptance_probability_exact(tree, U_att),
        }
        parts["gap"] = abs(parts["accept_on_v"] - parts["accept_on_attack"])
        parts["original_gap"] = parts["original_accept_on_v"] - parts["original_accept_on_attack"]
        _check_chain(parts, q, l, d_size)
        if l == d_size:
            verdict = Verdict.NOT_APPLICABLE
        elif parts["original_gap"] < thresholds.required_gap:
            verdict = Verdict.REFUTED_BY_GAP
        else:
            verdict = Verdict.SURVIVES
        if union_bound < thresholds.required_gap and verdict is Verdict.SURVIVES:
            raise InvariantViolation("tester below the floor survived the attack")
        trials_used = None
    else:
        trials_used = trials or trials_for_half_width(half_width, delta)
        marginals = query_marginals_mc(transformed, V, trials_used, _seed(seed, 0), delta)
        marginals = marginals.restrict(inst.D)
        d_prime = select_low_marginal_set(marginals, l, inst.D)
        U_att = hybrid(inst, d_prime)
        est = lambda t, X, s: acceptance_probability_mc(t, X, trials_used, _seed(seed, s), delta)
        hw = marginals.half_width
        parts = {
            "marginal_sum": Estimate(marginals.total(), hw * d_size, 1 - delta),
            "marginal_sum_d_prime": Estimate(marginals.total(d_prime), hw * l, 1 - delta),
            "hit_probability": hit_probability_mc(transformed, V, d_prime, trials_used,
                                                  _seed(seed, 0), delta),
            "accept_on_v": est(transformed, V, 1),
            "accept_on_attack": est(transformed, U_att, 2),
            "original_accept_on_v": est(tester, V, 3),
            "original_accept_on_attack": est(tester, U_att, 4),
        }
        a, b = parts["accept_on_v"], parts["accept_on_attack"]
        parts["gap"] = Estimate(abs(a.estimate - b.estimate), a.half_width + b.half_width,
                                1 - 2 * delta)
        a, b = parts["original_accept_on_v"], parts["original_accept_on_attack"]
        g = Estimate(a.estimate - b.estimate, a.half_width + b.half_width, 1 - 2 * delta)
        parts["original_gap"] = g
        required = float(thresholds.required_gap)
        if l == d_size:
            verdict = Verdict.NOT_APPLICABLE
        elif g.high < required:
            verdict = Verdict.REFUTED_BY_GAP
        elif g.low >= required:
            verdict = Verdict.SURVIVES
        else:
            verdict = Verdict.INCONCLUSIVE

    return Certificate(
        tester=tester.name, mode=mode, n=inst.n, d_size=d_size, l=l, q=q, k=k,
        marginals=marginals, d_prime=d_prime, attack_word=U_att,
        union_bound=union_bound, floor=theoretical_floor(d_size, l),
        floor_k=Fraction(k, 3 * l), required_gap=thresholds.required_gap,
        verdict=verdict, seed=seed if mode is Mode.MC else None, trials=trials_used, **parts)


# ---- validity checks -------------------------------------------------------

def _judge(p: Probability, threshold: Fraction) -> Outcome:
    """Is ``p >= threshold``?"""
    if isinstance(p, Estimate):
        if p.low >= threshold:
            return Outcome.PASS
        if p.high < threshold:
            return Outcome.FAIL
        return Outcome.INCONCLUSIVE
    return Outcome.PASS if p >= threshold else Outcome.FAIL


def _combine(outcomes) -> Outcome:
    outcomes = list(outcomes)
    if Outcome.FAIL in outcomes:
        return Outcome.FAIL
    if Outcome.INCONCLUSIVE in outcomes:
        return Outcome.INCONCLUSIVE
    return Outcome.PASS


def _complement(p: Probability) -> Probability:
    if isinstance(p, Estimate):
        return Estimate(1 - p.estimate, p.half_width, p.confidence)
    return 1 - p


class _Evaluator:
    def __init__(self, tester, mode, seed, trials, half_width, delta):
        self.mode = _mode(mode)
        self.tester = tester
        if self.mode is Mode.EXACT:
            self.tree = _require_tree(tester)
            self.trials = None
        else:
            self.stepwise = as_stepwise(tester)
            self.trials = trials or trials_for_half_width(half_width, delta)
        self.seed, self.delta = seed, delta
        self._stream = 0

    def accept(self, X: Word) -> Probability:
        if self.mode is Mode.EXACT:
            return acceptance_probability_exact(self.tree, X)
        self._stream += 1
        return acceptance_probability_mc(self.stepwise, X, self.trials,
                                         _seed(self.seed, self._stream), self.delta)


@dataclass(frozen=True)
class DistinguisherReport:
    outcome: Outcome
    accept_on_v: Probability
    worst_set: Optional[tuple]         # A with the lowest rejection probability
    worst_rejection: Optional[Probability]
    checked: int
    failures: int
    exhaustive: bool

    @property
    def passed(self) -> bool:
        return self.outcome is Outcome.PASS


def verify_distinguisher(tester: Tester, inst: AttackInstance, l: int,
                         thresholds: Thresholds = Thresholds(), mode="exact", coverage: int = 10_000,
                         *, seed: int = 0, trials: Optional[int] = None,
                         half_width: float = DEFAULT_HALF_WIDTH,
                         delta: float = DEFAULT_DELTA) -> DistinguisherReport:
    """Does ``tester`` accept ``V`` and reject every ``U_A`` with ``|A| = l``?

    All ``C(|D|, l)`` sets are tried when that count is at most ``coverage``;
    otherwise a seeded sample of ``coverage`` sets plus the attack's ``D'``.
    """
    d_size = len(inst.D)
    if not 1 <= l <= d_size:
        raise InvalidArgumentError(f"need 1 <= l <= |D|, got l={l}, |D|={d_size}")
    ev = _Evaluator(tester, mode, seed, trials, half_width, delta)
    acc_v = ev.accept(inst.V)
    outcomes = [_judge(acc_v, thresholds.accept_completeness)]

    exhaustive = math.comb(d_size, l) <= coverage
    if exhaustive:
        sets = list(itertools.combinations(inst.D, l))
    else:
        rng = random.Random(seed)
        drawn = {tuple(sorted(rng.sample(inst.D, l))) for _ in range(coverage)}
        drawn.add(attack(tester, inst, l, ev.mode, seed=seed, trials=trials,
                         half_width=half_width, delta=delta).d_prime)
        sets = sorted(drawn)

    worst_set = worst = None
    failures = 0
    for A in sets:
        rej = _complement(ev.accept(hybrid(inst, A)))
        verdict = _judge(rej, thresholds.reject_soundness)
        outcomes.append(verdict)
        failures += verdict is Outcome.FAIL
        value = rej.estimate if isinstance(rej, Estimate) else rej
        if worst is None or value < (worst.estimate if isinstance(worst, Estimate) else worst):
            worst_set, worst = A, rej
    failures += outcomes[0] is Outcome.FAIL
    return DistinguisherReport(_combine(outcomes), acc_v, worst_set, worst, len(sets), failures,
                               exhaustive)


@dataclass(frozen=True)
class EpsilonTestReport:
    outcome: Outcome
    members_checked: int
    far_checked: int
    worst_member: Optional[tuple]      # (word, acceptance probability)
    worst_far: Optional[tuple]         # (word, rejection probability)
    failures: int

    @property
    def passed(self) -> bool:
        return self.outcome is Outcome.PASS


def verify_epsilon_test(tester: Tester, P: Property, epsilon, thresholds: Thresholds = Thresholds(),
                        mode="exact", bound: int = DEFAULT_ENUMERATION_BOUND, *, seed: int = 0,
                        trials: Optional[int] = None, half_width: float = DEFAULT_HALF_WIDTH,
                        delta: float = DEFAULT_DELTA) -> EpsilonTestReport:
    """Sweep every word of length ``n`` against the epsilon-test guarantees.

    Members must be accepted, words at distance ``>= epsilon`` rejected, and
    words in between are unconstrained. Refuses (rather than samples) when
    ``|alphabet|**n`` exceeds ``bound``.
    """
    P.require_nonempty()
    epsilon = Fraction(epsilon)
    if not 0 < epsilon <= 1:
        raise ParameterRangeError(f"epsilon must lie in (0, 1], got {epsilon}")
    if tester.n != P.n or tester.alphabet_size != len(P.alphabet):
        raise InvalidArgumentError("tester dimensions do not match the property")
    words = list(all_words(P.alphabet, P.n, bound))
    ev = _Evaluator(tester, mode, seed, trials, half_width, delta)
    outcomes = []
    worst_member = worst_far = None
    members = far = failures = 0

    def key(p):
        return p.estimate if isinstance(p, Estimate) else p

    for X in words:
        if X in P:
            members += 1
            acc = ev.accept(X)
            verdict = _judge(acc, thresholds.accept_completeness)
            if worst_member is None or key(acc) < key(worst_member[1]):
                worst_member = (X, acc)
        elif distance_to_property(X, P) >= epsilon:
            far += 1
            rej = _complement(ev.accept(X))
            verdict = _judge(rej, thresholds.reject_soundness)
            if worst_far is None or key(rej) < key(worst_far[1]):
                worst_far = (X, rej)
        else:
            continue
        outcomes.append(verdict)
        failures += verdict is Outcome.FAIL
    return EpsilonTestReport(_combine(outcomes), members, far, worst_member, worst_far, failures)
