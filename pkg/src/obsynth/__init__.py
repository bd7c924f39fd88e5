"""Observation-based controller synthesis for symbolic safety games.

Build a model (or parse one from the s-expression format), then call
abstract_and_refine for a controller or sensor_reconfigure for a feasibility
report.  The submodules expose the full pipeline: exact linear-rational
reasoning (engine), predicate abstraction with knowledge tracking
(abstraction), finite game solving (games), counterexample analysis
(refinement), and closed-loop execution (simulate).
"""

from .abstraction import (
    AbstractGame,
    AbstractState,
    Predicate,
    PredicateSet,
    alpha,
    build_abstract_game,
    initial_predicates,
)
from .engine import (
    check_sat,
    eliminate_exists,
    entails,
    equivalent,
    interpolate,
    is_valid,
)
from .formulas import (
    BOOLEAN,
    FALSE,
    RATIONAL,
    TRUE,
    Formula,
    Variable,
    bool_var,
    conj,
    disj,
    enum_eq,
    evaluate,
    iff,
    implies,
    linear_atom,
    neg,
    prime,
    var_eq,
)
from .games import (
    ConcretizationFailure,
    FiniteGame,
    PositionalStrategy,
    StrategyTracker,
    attractor,
    solve_safety,
)
from .model import (
    Observation,
    State,
    SystemModel,
    initial_state,
    observe,
    sample_successor,
    validate_model,
)
from .refinement import (
    Budget,
    CounterexampleTree,
    Genuine,
    RefinementOutcome,
    Spurious,
    abstract_and_refine,
    build_act,
    check_genuine,
    sensor_reconfigure,
)
from .simulate import RunRecord, run_many, run_strategy
from .specfile import SpecDocument, SpecError, parse_model

__version__ = "0.1.0"

__all__ = [
    "AbstractGame",
    "AbstractState",
    "BOOLEAN",
    "Budget",
    "ConcretizationFailure",
    "CounterexampleTree",
    "FALSE",
    "FiniteGame",
    "Formula",
    "Genuine",
    "Observation",
    "PositionalStrategy",
    "Predicate",
    "PredicateSet",
    "RATIONAL",
    "RefinementOutcome",
    "RunRecord",
    "SpecDocument",
    "SpecError",
    "Spurious",
    "State",
    "StrategyTracker",
    "SystemModel",
    "TRUE",
    "Variable",
    "abstract_and_refine",
    "alpha",
    "attractor",
    "bool_var",
    "build_abstract_game",
    "build_act",
    "check_genuine",
    "check_sat",
    "conj",
    "disj",
    "eliminate_exists",
    "entails",
    "enum_eq",
    "equivalent",
    "evaluate",
    "iff",
    "implies",
    "initial_predicates",
    "initial_state",
    "interpolate",
    "is_valid",
    "linear_atom",
    "neg",
    "observe",
    "parse_model",
    "prime",
    "run_many",
    "run_strategy",
    "sample_successor",
    "sensor_reconfigure",
    "solve_safety",
    "validate_model",
    "var_eq",
]
