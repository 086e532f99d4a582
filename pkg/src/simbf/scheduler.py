"""Exhaustive user-subset selection."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from simbf.channel import reduce
from simbf.errors import DomainError, SimbfError
from simbf.rate import BeamformingSolution

log = logging.getLogger(__name__)

__all__ = ["ScheduleResult", "enumerate_subsets", "select_best", "subset_rng"]


@dataclass
class ScheduleResult:
    """Winning subset, its solution and the rate of every subset tried.

    ``rates`` maps each subset (tuple of user indices) to its sum rate;
    subsets whose solver failed are absent.  ``n_explored`` counts every
    enumerated subset, failed ones included.
    """

    subset: tuple
    solution: BeamformingSolution
    rates: dict = field(default_factory=dict)
    n_explored: int = 0

    @property
    def rate(self) -> float:
        return self.solution.rate


def enumerate_subsets(n_users: int, group: int):
    """All ``C(K, N)`` groups of user indices in lexicographic order."""
    if group < 1 or n_users < 1:
        raise DomainError(f"need K >= 1 and N >= 1, got K={n_users}, N={group}")
    if group > n_users:
        raise DomainError(f"cannot schedule {group} of {n_users} users")
    return itertools.combinations(range(n_users), group)


def subset_rng(seed, rank: int) -> np.random.Generator:
    """Generator for the subset at lexicographic position ``rank``.

    Depends only on ``(seed, rank)`` so subsets can be solved in any order.
    """
    entropy = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return np.random.default_rng(entropy + [rank])


def _solve(args):
    solver, H, rho, noise_var, total_power, subset, seed, rank = args
    Hs, rs = reduce(H, rho, subset)
    try:
        return solver(Hs, rs, noise_var, total_power, subset_rng(seed, rank))
    except (SimbfError, np.linalg.LinAlgError, ArithmeticError) as exc:
        return exc


def select_best(H, rho, noise_var: float, total_power: float, solver, group: int, seed=0, executor=None) -> ScheduleResult:
    """Solve every group of ``group`` users and keep the highest sum rate.

    ``solver(H_sub, rho_sub, noise_var, total_power, rng)`` must return a
    :class:`BeamformingSolution` with ``rate`` set.  Failing subsets are
    logged and skipped; ties keep the lexicographically first subset.
    ``executor`` (anything with ``map``) evaluates subsets concurrently.
    """
    H = np.asarray(H)
    subsets = list(enumerate_subsets(H.shape[0], group))
    jobs = [(solver, H, rho, noise_var, total_power, s, seed, r) for r, s in enumerate(subsets)]
    results = list(executor.map(_solve, jobs)) if executor is not None else [_solve(j) for j in jobs]

    rates = {}
    best = None
    for subset, res in zip(subsets, results):
        if isinstance(res, Exception):
            log.warning("subset %s skipped: %s", subset, res)
            continue
        rate = float(res.rate)
        if math.isnan(rate):
            log.warning("subset %s skipped: rate is nan", subset)
            continue
        rates[subset] = rate
        if best is None or rate > best[1].rate:
            best = (subset, res)
    if best is None:
        raise DomainError(f"all {len(subsets)} subsets failed")
    return ScheduleResult(subset=best[0], solution=best[1], rates=rates, n_explored=len(subsets))
