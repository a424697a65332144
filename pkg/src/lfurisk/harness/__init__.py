from .bootstrap import BootstrapSet, bootstrap_metric, confidence_interval, resample_indices
from .cd import CDResult, friedman_cd, friedman_statistic, holm
from .cohorts import CohortReport, cohort_eval, global_threshold, local_thresholds
from .search import BOOST_SPACE, SPACES, SearchResult, narrow, random_search, sample_params
from .selection import SelectionOutcome, guard, select_encoder_then_model, tune

__all__ = [
    "BOOST_SPACE", "BootstrapSet", "CDResult", "CohortReport", "SPACES", "SearchResult", "SelectionOutcome",
    "bootstrap_metric", "cohort_eval", "confidence_interval", "friedman_cd", "friedman_statistic", "global_threshold",
    "guard", "holm", "local_thresholds", "narrow", "random_search", "resample_indices", "sample_params",
    "select_encoder_then_model", "tune",
]
