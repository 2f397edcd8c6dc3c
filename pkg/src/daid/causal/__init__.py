from .adjustment import (AceReport, Stratum, ace, backdoor_adjust, binarize_fairness, bootstrap_p_value,
                         do_outcome, stratified_bootstrap)
from .dag import BackdoorVerdict, Dag, backdoor_criterion, d_separated, fairness_dag, parse_dag
from .experiment import (CAPACITY_PRESETS, InterventionResult, estimate_ace, run_intervention_experiment,
                         strata_from_test)

__all__ = [
    "AceReport", "Stratum", "ace", "backdoor_adjust", "binarize_fairness", "bootstrap_p_value",
    "do_outcome", "stratified_bootstrap", "BackdoorVerdict", "Dag", "backdoor_criterion",
    "d_separated", "fairness_dag", "parse_dag", "CAPACITY_PRESETS", "InterventionResult",
    "estimate_ace", "run_intervention_experiment", "strata_from_test",
]
