"""Campaign driver: trials x sweep points, CSV rows and a JSON summary."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import CampaignConfig
from .trial import NONE, TrialRow, run_trial

log = logging.getLogger(__name__)

__all__ = ["CSV_HEADER", "CampaignResult", "run_campaign", "summarize", "write_csv", "write_summary", "expected_groups", "read_csv"]

CSV_HEADER = (
    "trial", "scheme", "variant", "arrangement", "sweep_name", "sweep_value",
    "sum_rate_bps_hz", "fit_residual", "iterations", "wall_ms", "seed",
)


@dataclass
class CampaignResult:
    rows: list
    summary: dict
    failures: list = field(default_factory=list)


def _job(args):
    config, value, trial = args
    try:
        return value, trial, run_trial(config.point(value), trial, value), None
    except Exception as exc:  # one bad realisation must not end the campaign
        return value, trial, [], f"{type(exc).__name__}: {exc}"


def run_campaign(config: CampaignConfig, executor=None) -> CampaignResult:
    """Run every trial at every sweep point.

    Rows come back sorted by (sweep position, trial) whatever the
    execution order.  A trial that raises is logged and recorded in
    ``failures``.  Without ``executor`` a process pool is used when
    ``config.workers > 1``.
    """
    jobs = [(config, value, trial) for value in config.sweep.values for trial in range(config.trials)]
    if executor is None and config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            outcomes = list(pool.map(_job, jobs))
    elif executor is not None:
        outcomes = list(executor.map(_job, jobs))
    else:
        outcomes = [_job(j) for j in jobs]

    position = {repr(v): i for i, v in enumerate(config.sweep.values)}
    outcomes.sort(key=lambda o: (position[repr(o[0])], o[1]))
    rows, failures = [], []
    for value, trial, trial_rows, error in outcomes:
        if error is not None:
            log.error("trial %d at %s=%r skipped: %s", trial, config.sweep.name, value, error)
            failures.append({"trial": trial, "sweep_value": value, "error": error})
        rows.extend(trial_rows)
    return CampaignResult(rows=rows, summary=summarize(rows, config, failures), failures=failures)


def expected_groups(config: CampaignConfig):
    """Every (scheme, variant, arrangement, sweep value) the config asks for."""
    out = []
    for value in config.sweep.values:
        for scheme in config.schemes:
            if scheme.startswith("mmimo"):
                out.append((scheme, NONE, NONE, value))
                continue
            for arrangement in config.arrangements:
                variants = ("cnt-phase",) if arrangement == "pc-only" else config.variants
                out.extend((scheme, v, arrangement, value) for v in variants)
    return out


def _stats(values):
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, None
    var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    return mean, math.sqrt(var / n)


def summarize(rows, config: CampaignConfig, failures=()) -> dict:
    """Mean and standard error of the sum rate per group.

    Groups with no rows are listed with ``"empty": true`` and null
    statistics.  The standard error is null for a single trial.
    """
    buckets = {}
    for r in sorted(rows, key=lambda r: r.trial):
        buckets.setdefault((r.scheme, r.variant, r.arrangement, repr(r.sweep_value)), []).append(r)
    groups = []
    for scheme, variant, arrangement, value in expected_groups(config):
        members = buckets.get((scheme, variant, arrangement, repr(value)), [])
        entry = {
            "scheme": scheme, "variant": variant, "arrangement": arrangement,
            "sweep_name": config.sweep.name, "sweep_value": value, "n": len(members),
        }
        if members:
            mean, stderr = _stats([m.sum_rate_bps_hz for m in members])
            residuals = [m.fit_residual for m in members if not math.isnan(m.fit_residual)]
            entry.update(
                mean_sum_rate=mean,
                stderr_sum_rate=stderr,
                mean_fit_residual=_stats(residuals)[0] if residuals else None,
                mean_iterations=_stats([m.iterations for m in members])[0],
                empty=False,
            )
        else:
            entry.update(mean_sum_rate=None, stderr_sum_rate=None, mean_fit_residual=None, mean_iterations=None, empty=True)
        groups.append(entry)
    return {"trials": config.trials, "seed": config.seed, "groups": groups, "failures": list(failures)}


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([_cell(getattr(r, name)) for name in CSV_HEADER])
    Path(path).write_text(buf.getvalue())


def write_summary(summary: dict, path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, allow_nan=True) + "\n")


def read_csv(path) -> list[TrialRow]:
    """Rows of a campaign CSV back as :class:`TrialRow` (sweep values kept as text)."""
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append(TrialRow(
                trial=int(rec["trial"]), scheme=rec["scheme"], variant=rec["variant"],
                arrangement=rec["arrangement"], sweep_name=rec["sweep_name"], sweep_value=rec["sweep_value"] or None,
                sum_rate_bps_hz=float(rec["sum_rate_bps_hz"]), fit_residual=float(rec["fit_residual"]),
                iterations=int(rec["iterations"]), wall_ms=float(rec["wall_ms"]), seed=int(rec["seed"]),
            ))
    return out
