"""Equilibrium analysis and simulation for quorum-based block endorsement games.

The package has four parts: generic exhaustive equilibrium checkers over
finite symmetric games (``equilibria``), the analytic endorsement-game model
(``endorsement``), full-simplex scans with CSV/JSON/SVG output (``scan``), and
a seeded Monte Carlo simulator of the consensus rounds (``simulate``).  The
``barne-kit`` command line fronts all of it.
"""

from .endorsement import (
    Acceptance,
    Amendment,
    BeliefMatrix,
    BlockOutcome,
    PointVerdict,
    ProtocolParams,
    SpecialArea,
    Strategy,
    Validity,
    acceptance_class,
    as_generic_game,
    belief_matrix,
    classify_point,
    deviation_payoffs,
    expected_payoffs,
    inequality_report,
    special_areas,
    stage_payoff,
    validate_params,
)
from .equilibria import (
    MixedStrategy,
    Violation,
    bar_strong,
    barne_at_counts,
    barne_at_sets,
    check_inclusion_chain,
    delta_stable,
    find_symmetric_mixed_barne,
    globally_stable,
)
from .errors import (
    BudgetExceededError,
    InvalidAssignmentError,
    InvalidConfigError,
    MismatchedConfigError,
    MismatchedPointsError,
    NoConvergenceError,
    SymmetryRequiredError,
)
from .games import (
    GenericGame,
    TypeAssignment,
    congestion_candidate,
    congestion_game,
    game_from_json,
    prisoners_dilemma,
)
from .scan import SimplexMap, compare_maps, render_svg, simplex_scan
from .simplex import INFINITY, TWO_STAR, SimplexPoint, norm_distance
from .simulate import (
    RoundRecord,
    SimConfig,
    SimResult,
    accusation_check,
    empirical_vs_analytic,
    run_simulation,
)

__version__ = "0.1.0"

__all__ = [
    "Acceptance", "Amendment", "BeliefMatrix", "BlockOutcome", "BudgetExceededError",
    "GenericGame", "INFINITY", "InvalidAssignmentError", "InvalidConfigError",
    "MismatchedConfigError", "MismatchedPointsError", "MixedStrategy",
    "NoConvergenceError", "PointVerdict", "ProtocolParams", "RoundRecord",
    "SimConfig", "SimResult", "SimplexMap", "SimplexPoint", "SpecialArea",
    "Strategy", "SymmetryRequiredError", "TWO_STAR", "TypeAssignment", "Validity",
    "Violation", "acceptance_class", "accusation_check", "as_generic_game",
    "bar_strong", "barne_at_counts", "barne_at_sets", "belief_matrix",
    "check_inclusion_chain", "classify_point", "compare_maps",
    "congestion_candidate", "congestion_game", "delta_stable",
    "deviation_payoffs", "empirical_vs_analytic", "expected_payoffs",
    "find_symmetric_mixed_barne", "game_from_json", "globally_stable",
    "inequality_report", "norm_distance", "prisoners_dilemma", "render_svg",
    "run_simulation", "simplex_scan", "special_areas", "stage_payoff",
    "validate_params",
]
