"""Executable query lower bounds for property testing.

Build an attack instance from a property and a far word, hand any
randomized tester to :func:`attack`, and get back an exact certificate
showing how close its acceptance probabilities on ``V`` and on the
hybrid ``U_{D'}`` must be.
"""
from .adversary import (
    Certificate,
    Mode,
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
from .errors import *  # noqa: F401,F403
from .machines import (
    ACCEPT,
    REJECT,
    Chance,
    DecisionTree,
    Decide,
    Estimate,
    Leaf,
    MarginalMap,
    NextQuery,
    Query,
    SeededCoins,
    StepwiseTester,
    Transcript,
    acceptance_probability_exact,
    acceptance_probability_mc,
    is_nonadaptive,
    query_marginals_exact,
    query_marginals_mc,
    run,
    tree_from_stepwise,
)
from .transforms import nonadaptivize, restrict_to_D, transform_equivalence_check
from .words import (
    Alphabet,
    AttackInstance,
    Property,
    Word,
    build_attack_instance,
    distance_to_property,
    hamming_distance,
    hybrid,
    nearest_satisfying,
    verify_graded_distances,
)

__version__ = "0.1.0"
