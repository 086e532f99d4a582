"""One Monte Carlo realisation of the full pipeline.

Stages: user drop and channels, per-subset beamforming with exhaustive
scheduling, then (SIM schemes) a least-squares fit of the layer stack to
the winning beamformer.  SIM rates are realised rates: the fitted stack's
cascade is pushed back through the SINR formula.
"""

from __future__ import annotations

import functools
import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from simbf.beamforming import OptimizerOptions, optimize_beamforming
from simbf.channel import path_loss, sample_user_channels
from simbf.geometry import build_layout, place_users, wavelength
from simbf.propagation import LayerStack, arrange_layers, cascade, transfer_matrices
from simbf.rate import sinr, sum_rate
from simbf.scheduler import select_best
from simbf.synthesis import FitOptions, pgd_fit
from simbf.zeroforcing import zf_solution

from .config import CampaignConfig, Scenario

log = logging.getLogger(__name__)

__all__ = ["TrialRow", "trial_streams", "mmimo_baseline", "run_trial", "build_geometry"]

NONE = "none"


@dataclass(frozen=True)
class TrialRow:
    """One CSV row.  ``target_rate`` (the pre-fit rate) stays in memory only."""

    trial: int
    scheme: str
    variant: str
    arrangement: str
    sweep_name: str
    sweep_value: object
    sum_rate_bps_hz: float
    fit_residual: float
    iterations: int
    wall_ms: float
    seed: int
    target_rate: float = math.nan


def trial_streams(seed: int, trial: int):
    """Independent generators for users, channels, fit starts and AC phases.

    Users and channels come from separate streams so that a smaller user
    pool is a prefix of a larger one for the same trial.
    """
    children = np.random.SeedSequence([int(seed), int(trial)]).spawn(4)
    return {name: child for name, child in zip(("users", "channels", "fit", "hardware"), children)}


@functools.lru_cache(maxsize=32)
def _geometry(frequency, n_antennas, n_layers, qx, qy, pitch_wl, depth_wl, sigma_ratio, meta_wl2, bs_wl2, height):
    lam = wavelength(frequency)
    spacing = depth_wl * lam / n_layers
    geo = build_layout(
        frequency, n_antennas, n_layers, qx, qy,
        pitch=pitch_wl * lam, spacing=spacing, sigma=sigma_ratio * spacing,
        meta_area=meta_wl2 * lam**2, bs_area=bs_wl2 * lam**2, bs_height=height,
    )
    return geo, transfer_matrices(geo)


def build_geometry(sc: Scenario, n_layers: int):
    """Geometry and diffraction matrices for ``n_layers`` layers (cached)."""
    return _geometry(
        sc.frequency, sc.n_antennas, n_layers, sc.qx, sc.qy, sc.pitch_wavelengths, sc.depth_wavelengths,
        sc.sigma_over_spacing, sc.meta_area_wavelengths2, sc.bs_area_wavelengths2, sc.bs_height,
    )


def _opt_solver(options, H, rho, noise_var, total_power, rng):
    return optimize_beamforming(H, rho, noise_var, total_power, options, rng=rng)


def _zf_solver(cond_cap, H, rho, noise_var, total_power, rng):
    return zf_solution(H, rho, noise_var, total_power, cond_cap)


def mmimo_baseline(H, rho, noise_var: float, total_power: float, mode: str, options=None, rng=None, cond_cap: float = 1e12):
    """Directly optimised ``Q x N`` precoder (no cascade constraint)."""
    if mode == "opt":
        return optimize_beamforming(H, rho, noise_var, total_power, options, rng=rng)
    if mode == "zf":
        return zf_solution(H, rho, noise_var, total_power, cond_cap)
    raise ValueError(f"unknown beamforming mode {mode!r}")


def _solver(config: CampaignConfig, mode: str):
    sv = config.solvers
    if mode == "opt":
        options = OptimizerOptions(
            max_iter=sv.beamforming_iterations, tol=sv.beamforming_tol, stop_on=sv.stop_on,
            damping=sv.damping, init=sv.beamforming_init,
        )
        return functools.partial(_opt_solver, options)
    return functools.partial(_zf_solver, sv.zf_condition_cap)


def _layer_counts(sc: Scenario, arrangement: str):
    return (sc.n_pc, 0) if arrangement == "pc-only" else (sc.n_pc, sc.n_ac)


def run_trial(config: CampaignConfig, trial: int, sweep_value=None) -> list[TrialRow]:
    """All rows of one trial at one sweep point (``config`` already at that point)."""
    sc = config.scenario
    streams = trial_streams(config.seed, trial)
    geo, _ = build_geometry(sc, sc.n_pc + sc.n_ac)
    users = place_users(np.random.default_rng(streams["users"]), sc.n_users, sc.radius, sc.bs_height, geo.reference_point)
    rho = path_loss(users.distances, geo.wavelength, sc.ref_distance, sc.path_loss_exponent)
    H = sample_user_channels(np.random.default_rng(streams["channels"]), sc.n_users, sc.n_atoms)
    ac_phase_rng = np.random.default_rng(streams["hardware"])
    ac_phases = ac_phase_rng.uniform(0, 2 * math.pi, sc.n_atoms) if sc.ac_phases == "random" else None

    sweep = config.sweep.name
    base = dict(trial=trial, sweep_name=sweep, sweep_value=sweep_value, seed=config.seed)
    rows = []
    for mode in ("opt", "zf"):
        wanted = [s for s in config.schemes if s.endswith("-" + mode)]
        if not wanted:
            continue
        clock = time.perf_counter()
        schedule = select_best(H, rho, sc.noise_var, sc.total_power, _solver(config, mode), sc.n_antennas,
                               seed=[config.seed, trial])
        sched_ms = (time.perf_counter() - clock) * 1e3
        sol = schedule.solution
        Hs, rs = H[list(schedule.subset)], rho[list(schedule.subset)]
        if f"mmimo-{mode}" in wanted:
            rows.append(TrialRow(
                scheme=f"mmimo-{mode}", variant=NONE, arrangement=NONE, sum_rate_bps_hz=float(sol.rate),
                fit_residual=math.nan, iterations=int(sol.iterations), wall_ms=_ms(config, sched_ms),
                target_rate=float(sol.rate), **base,
            ))
        if f"sim-{mode}" in wanted:
            for arrangement in config.arrangements:
                rows.extend(_sim_rows(config, f"sim-{mode}", arrangement, sol, Hs, rs, streams, ac_phases, base))
    return rows


def _ms(config, value):
    return float(value) if config.timing else 0.0


def _sim_rows(config, scheme, arrangement, sol, Hs, rs, streams, ac_phases, base):
    sc, sv = config.scenario, config.solvers
    n_pc, n_ac = _layer_counts(sc, arrangement)
    _, Ws = build_geometry(sc, n_pc + n_ac)
    kinds = arrange_layers(arrangement, n_pc, n_ac)
    variants = ("cnt-phase",) if arrangement == "pc-only" else config.variants
    target = sol.beams
    params = dict(pc_amplitude=sc.pc_amplitude, amp_min=sc.amp_min, amp_max=sc.amp_max, bits=sc.bits)

    def start():
        # every fit of a trial starts from the same draw
        return LayerStack.initial(kinds, sc.n_atoms, np.random.default_rng(streams["fit"]), ac_phases=ac_phases, **params)

    def realised(stack):
        return sum_rate(sinr(Hs, rs, cascade(Ws, stack), sol.powers, sc.noise_var))

    def row(variant, rate, residual, iterations, ms):
        return TrialRow(scheme=scheme, variant=variant, arrangement=arrangement, sum_rate_bps_hz=float(rate),
                        fit_residual=float(residual), iterations=int(iterations), wall_ms=_ms(config, ms),
                        target_rate=float(sol.rate), **base)

    opts = dict(max_iter=sv.fit_iterations, tol=sv.fit_tol, bits=sc.bits, amplitude_gradient=sv.amplitude_gradient)
    rows = []
    if {"cnt-phase", "qnt-phase"} & set(variants):
        clock = time.perf_counter()
        fit = pgd_fit(Ws, target, start(), FitOptions(quantization="post", **opts))
        ms = (time.perf_counter() - clock) * 1e3
        if "cnt-phase" in variants:
            cont_obj = fit.trace[-1]
            rows.append(row("cnt-phase", realised(fit.continuous), cont_obj, fit.iterations, ms))
        if "qnt-phase" in variants:
            rows.append(row("qnt-phase", realised(fit.stack), fit.objective, fit.iterations, ms))
    if "step-by-step-qnt" in variants:
        clock = time.perf_counter()
        fit = pgd_fit(Ws, target, start(), FitOptions(quantization="step", **opts))
        ms = (time.perf_counter() - clock) * 1e3
        rows.append(row("step-by-step-qnt", realised(fit.stack), fit.objective, fit.iterations, ms))
    return rows
