"""Experiment configs, trial records, campaigns and the command line."""

from .campaigns import (
    CampaignResult,
    Summary,
    resolve_workers,
    run_campaign,
    run_critical_profile_campaign,
    run_face_bound_check,
    run_halfspace_probe,
    run_supercritical_limit_scan,
    run_vanishing_scan,
    summarize,
)
from .config import ConfigError, ExperimentConfig, load_experiment_config
from .records import TrialRecord, dump_records, load_records, parse_records
