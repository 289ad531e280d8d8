"""Solver toolkit for veto-constrained mechanism design with informational
punishment: default-game outside options under arbitrary information
structures, min-max punishment signal synthesis, full-participation
mechanism construction, and opportunism immunity checks."""

from .belief import (
    PosteriorLottery,
    SignalingDevice,
    check_bayes_plausible,
    condition_on_type,
    device_to_lottery,
    lottery_to_device,
    product_device,
    update_on_signal,
)
from .config import DEFAULT_CONFIG, RunConfig, load_config
from .defaultgame import (
    BNEProfile,
    ReducedFormGame,
    SelectionPolicy,
    StrategicBayesianGame,
    best_response_slack,
    evaluate_reduced_form,
    induced_decision_rule,
    outside_option_value,
    solve_bne,
)
from .mechanism import (
    MechanismLP,
    MechanismSolution,
    PooledMechanism,
    PoolProposal,
    VetoEquilibrium,
    VetoEvent,
    check_ic,
    check_intuitive_criterion,
    check_veq_consistency,
    construct_full_participation,
    pool_informed_principal,
    solve_optimal_mechanism,
    verify_no_veto,
)
from .model import (
    DecisionRule,
    InformationStructure,
    OutcomeSpace,
    TypeSpace,
    UtilityTable,
    expected_utility,
    mix_decision_rules,
    validate_information_structure,
)
from .opportunism import (
    DesignerTypeSpace,
    Immunity,
    check_aligned,
    check_immunity,
    check_unraveling_pressure,
    check_weak_immunity,
    designer_space_from_reduced_form,
)
from .punishment import (
    PunishmentProblem,
    PunishmentSolution,
    convexify,
    optimize_offpath_belief,
    punished_participation_bound,
    simplex_grid,
)
from .simharness import (
    GrandGameInstance,
    enumerate_opportunism_devices,
    enumerate_veto_equilibria,
    replicate_check,
)

__version__ = "0.1.0"
