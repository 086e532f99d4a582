"""Monte Carlo campaign harness: configuration, trials, output and CLI."""

from .campaign import CSV_HEADER, CampaignResult, run_campaign, summarize, write_csv, write_summary
from .config import CampaignConfig, Scenario, Solvers, Sweep, load_config, parse_config
from .trial import TrialRow, mmimo_baseline, run_trial

__all__ = [
    "CSV_HEADER", "CampaignResult", "run_campaign", "summarize", "write_csv", "write_summary",
    "CampaignConfig", "Scenario", "Solvers", "Sweep", "load_config", "parse_config",
    "TrialRow", "mmimo_baseline", "run_trial",
]
