"""Continuous-time stochastic block model for transactional event networks.

Ingest timestamped pass/event logs, cluster the actors by fitting the model
with an EM-plus-local-search algorithm, simulate synthetic logs, and report
rate functions, transition probabilities and confidence bands.
"""

__version__ = "0.1.0"

from .events import (INITIAL_ACTIONS, OUTCOMES, Event, InconsistentPlayError,
                     ParseError, ParseOptions, Play, SufficientStats,
                     TransactionLog, derive_stats, eligible_count, load_log,
                     parse_transactions, save_log, write_csv)
from .generator import (NoEligibleReceiverError, SimSpec, load_spec,
                        save_spec, simulate_log, simulate_play)
from .inference import (ExpectationSet, FitConfig, FitInfeasibleError,
                        FitResult, exact_estep, fit_csbm, gibbs_estep,
                        mstep_probs, mstep_rates, run_em, run_plus)
from .likelihood import (MODE_GENERAL, MODE_SIMPLIFIED, ClusterParams,
                         LabelState, ModelArrays, estep_objective,
                         grad_rate_coeffs, loglik_complete, loglik_initial,
                         loglik_outcomes, loglik_passes)
from .splines import (PLAY_SECONDS, SplineBasis, rate_eval, rate_gradient,
                      rate_integral)
from .uncertainty import (BandTable, InfoMatrix, NonStationaryWarning,
                          bands_csv, observed_info, prob_standard_errors,
                          rate_bands)

__all__ = [
    "__version__",
    "INITIAL_ACTIONS", "OUTCOMES", "PLAY_SECONDS",
    "Event", "Play", "TransactionLog", "SufficientStats",
    "ParseError", "ParseOptions", "InconsistentPlayError",
    "parse_transactions", "write_csv", "load_log", "save_log",
    "derive_stats", "eligible_count",
    "SplineBasis", "rate_eval", "rate_integral", "rate_gradient",
    "MODE_SIMPLIFIED", "MODE_GENERAL",
    "ClusterParams", "LabelState", "ModelArrays",
    "loglik_initial", "loglik_passes", "loglik_outcomes", "loglik_complete",
    "estep_objective", "grad_rate_coeffs",
    "ExpectationSet", "FitConfig", "FitResult", "FitInfeasibleError",
    "gibbs_estep", "exact_estep", "mstep_probs", "mstep_rates",
    "run_em", "run_plus", "fit_csbm",
    "SimSpec", "simulate_play", "simulate_log", "save_spec", "load_spec",
    "NoEligibleReceiverError",
    "InfoMatrix", "BandTable", "NonStationaryWarning",
    "observed_info", "rate_bands", "bands_csv", "prob_standard_errors",
]
