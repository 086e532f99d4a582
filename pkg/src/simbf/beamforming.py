"""Sum-rate maximising beamforming for a fixed group of users.

Block-coordinate ascent alternating between

* a projected gradient ascent (PGA) step on the beamforming matrix, whose
  columns are constrained to the unit sphere, and
* a sum-power iterative water-filling update of the per-stream powers.

Gradients are conjugate Wirtinger derivatives of the natural-log sum rate,
``d f / d g*``; the real gradient with respect to ``(Re g, Im g)`` of the
log2 objective is ``2 / ln 2`` times that.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from simbf.errors import ConfigurationError, StructuralError
from simbf.power import waterfill
from simbf.rate import BeamformingSolution, sinr, sum_rate

log = logging.getLogger(__name__)

__all__ = [
    "OptimizerOptions",
    "objective",
    "grad_beams",
    "grad_beam",
    "pga_step",
    "waterfill_interference",
    "initial_beams",
    "optimize_beamforming",
]


@dataclass(frozen=True)
class OptimizerOptions:
    """Knobs of :func:`optimize_beamforming`.

    ``stop_on`` selects the convergence metric: relative change of the sum
    rate (``"objective"``) or of the iterates (``"parameters"``).
    ``damping`` is the weight kept on the previous powers in each
    water-filling update (0 gives the plain rule).
    """

    max_iter: int = 1000
    tol: float = 1e-6
    stop_on: str = "objective"
    step_init: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    max_halvings: int = 30
    wf_tol: float = 1e-12
    damping: float = 0.0
    init: str = "matched"

    def __post_init__(self):
        if not 0 < self.shrink < 1:
            raise ConfigurationError(f"shrink must lie in (0, 1), got {self.shrink}")
        if not (self.tol > 0 and self.wf_tol > 0 and self.step_init > 0):
            raise ConfigurationError("tolerances and initial step must be positive")
        if self.max_iter < 0 or self.max_halvings < 0:
            raise ConfigurationError("iteration limits must be non-negative")
        if not 0 <= self.damping < 1:
            raise ConfigurationError(f"damping must lie in [0, 1), got {self.damping}")
        if self.stop_on not in ("objective", "parameters"):
            raise ConfigurationError(f"unknown stopping metric {self.stop_on!r}")
        if self.init not in ("random", "matched"):
            raise ConfigurationError(f"unknown initialisation {self.init!r}")


def objective(G, powers, H, rho, noise_var) -> float:
    """Sum rate (bit/s/Hz) of beams ``G`` with ``powers``."""
    return sum_rate(sinr(H, rho, G, powers, noise_var))


def grad_beams(G, powers, H, rho, noise_var) -> np.ndarray:
    """Gradient of the sum rate with respect to every beam (column ``i``).

    For beam ``i`` this is the matched-filter term of user ``i`` minus the
    leakage of beam ``i`` into every other user ``k``::

        rho_i P_i h_i h_i^H g_i / T_i
          - sum_{k != i} rho_k^2 P_i P_k |h_k^H g_k|^2 h_k h_k^H g_i / (T_k I_k)

    with ``T_k`` the total received power plus noise at user ``k`` and
    ``I_k`` its interference plus noise.
    """
    H = np.asarray(H)
    rho = np.asarray(rho, dtype=float)
    powers = np.asarray(powers, dtype=float)
    C = H @ G
    recv = rho[:, None] * np.abs(C) ** 2 * powers[None, :]
    signal = np.diag(recv).copy()
    np.fill_diagonal(recv, 0.0)
    interf = recv.sum(axis=1) + noise_var
    total = interf + signal
    coef = -(rho * signal / (total * interf))[:, None] * powers[None, :] * C
    np.fill_diagonal(coef, rho * powers * np.diag(C) / total)
    return H.conj().T @ coef


def grad_beam(G, powers, H, rho, noise_var, i: int) -> np.ndarray:
    """Gradient with respect to beam ``i`` alone; see :func:`grad_beams`."""
    return grad_beams(G, powers, H, rho, noise_var)[:, i]


def _normalize_columns(G):
    norms = np.linalg.norm(G, axis=0)
    return G / np.where(norms > 0, norms, 1.0), norms


def pga_step(
    G,
    powers,
    H,
    rho,
    noise_var,
    options: OptimizerOptions | None = None,
    f0: float | None = None,
    step: float | None = None,
):
    """One projected gradient ascent step on all beams.

    Every column moves along its unit-normalised gradient by a common step
    ``eta``, found by backtracking from ``step`` (``options.step_init`` by
    default), and is projected back onto the unit sphere.  A column whose
    candidate vanishes keeps its previous value.

    Returns
    -------
    G_new : np.ndarray
    f_new : float
        Objective at ``G_new``; never below the objective at ``G``.
    eta : float
        Accepted step, 0 when no ascent was possible.
    """
    options = options or OptimizerOptions()
    G = np.asarray(G, dtype=complex)
    if f0 is None:
        f0 = objective(G, powers, H, rho, noise_var)
    grads = grad_beams(G, powers, H, rho, noise_var)
    gnorm = np.linalg.norm(grads, axis=0)
    safe = np.where(gnorm > 0, gnorm, 1.0)
    direction = grads / safe
    # first-order gain (log2 units) per unit step along the sphere
    radial = np.real(np.sum(G.conj() * grads, axis=0))
    tangent = grads - radial * G
    slope = float(np.sum(2 * np.sum(np.abs(tangent) ** 2, axis=0) / safe)) / math.log(2)
    if slope <= 1e-14 * max(1.0, abs(f0)):
        return G, f0, 0.0
    eta = options.step_init if step is None else step
    for _ in range(options.max_halvings + 1):
        cand = G + eta * direction
        cand, cnorm = _normalize_columns(cand)
        dead = cnorm == 0
        if dead.any():
            cand[:, dead] = G[:, dead]
        f1 = objective(cand, powers, H, rho, noise_var)
        if f1 >= f0 + options.armijo * eta * slope:
            return cand, f1, eta
        eta *= options.shrink
    return G, f0, 0.0


def waterfill_interference(G, powers, H, rho, noise_var, total_power: float, damping: float = 0.0, tol: float = 1e-12):
    """Simultaneous iterative water-filling update of all stream powers.

    Each stream sees its current interference-plus-noise over its own gain
    as a noise floor; all floors are filled to a common level so that the
    powers add up to ``total_power``.

    Returns ``(powers, level)``; ``level`` is ``nan`` and the powers are
    zero when no stream has a usable gain.
    """
    H = np.asarray(H)
    rho = np.asarray(rho, dtype=float)
    powers = np.asarray(powers, dtype=float)
    recv = rho[:, None] * np.abs(H @ G) ** 2
    gain = np.diag(recv).copy()
    np.fill_diagonal(recv, 0.0)
    interf = recv @ powers + noise_var
    with np.errstate(divide="ignore"):
        floors = np.where(gain > 0, interf / np.where(gain > 0, gain, 1.0), np.inf)
    new, level = waterfill(floors, total_power, tol=tol)
    if np.isnan(level):
        log.warning("no stream has a usable gain; all powers set to zero")
        return new, level
    if damping:
        new = (1 - damping) * new + damping * powers
    return new, level


def initial_beams(H, rng: np.random.Generator | None = None, how: str = "random") -> np.ndarray:
    """Unit-norm starting beams: random directions or matched filters."""
    H = np.asarray(H)
    n, q = H.shape
    if how == "matched":
        G = H.conj().T.copy()
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        G = rng.standard_normal((q, n)) + 1j * rng.standard_normal((q, n))
    return _normalize_columns(G)[0]


def optimize_beamforming(
    H,
    rho,
    noise_var: float,
    total_power: float,
    options: OptimizerOptions | None = None,
    rng: np.random.Generator | None = None,
    init=None,
) -> BeamformingSolution:
    """Maximise the sum rate of the users in ``H`` (one row per user).

    Beams start from the matched filters (or random directions, see
    ``options.init``); a stream whose power is water-filled to zero gets a
    zero gradient, so random starts tend to stall with streams switched
    off.  Powers start from the uniform split.  Iterations stop when the chosen
    convergence metric drops below ``options.tol`` or after
    ``options.max_iter`` rounds; the best iterate seen is returned.
    ``solution.trace`` holds the sum rate after every round and
    ``solution.info["pga_trace"]`` the (before, after) objective of every PGA step.
    """
    options = options or OptimizerOptions()
    H = np.asarray(H, dtype=complex)
    n, q = H.shape
    if n > q:
        raise StructuralError(f"cannot serve {n} users with {q} beamforming dimensions")
    G = initial_beams(H, rng, options.init) if init is None else _normalize_columns(np.array(init, dtype=complex))[0]
    P = np.full(n, total_power / n)
    f = objective(G, P, H, rho, noise_var)
    best = (f, G, P)
    trace = [f]
    pga_trace = []
    step = options.step_init
    it = 0
    for it in range(1, options.max_iter + 1):
        G_new, f_mid, eta = pga_step(G, P, H, rho, noise_var, options, f0=f, step=step)
        pga_trace.append((f, f_mid))
        if eta > 0:
            # warm start: the next search begins one expansion above the last accepted step
            step = min(options.step_init, eta / options.shrink)
        P_new, level = waterfill_interference(G_new, P, H, rho, noise_var, total_power, options.damping, options.wf_tol)
        if np.isnan(level):
            P_new = P
        f_new = objective(G_new, P_new, H, rho, noise_var)
        trace.append(f_new)
        if options.stop_on == "objective":
            change = abs(f_new - f) / max(abs(f), 1e-300)
        else:
            change = np.linalg.norm(G_new - G) + np.linalg.norm(P_new - P) / total_power
        G, P, f = G_new, P_new, f_new
        if f > best[0]:
            best = (f, G, P)
        if change < options.tol:
            break
    return BeamformingSolution(
        beams=best[1],
        powers=best[2],
        total_power=total_power,
        rate=best[0],
        iterations=it,
        trace=trace,
        info={"pga_trace": pga_trace},
    )
