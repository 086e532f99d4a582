"""SINR and sum-rate evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from simbf.errors import DomainError, StructuralError

__all__ = ["BeamformingSolution", "gain_matrix", "sinr", "sum_rate", "zf_sum_rate"]


@dataclass
class BeamformingSolution:
    """Beamforming matrix with unit-norm columns and per-stream powers."""

    beams: np.ndarray
    powers: np.ndarray
    total_power: float
    rate: float = float("nan")
    iterations: int = 0
    trace: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def is_feasible(self, tol: float = 1e-9) -> bool:
        norms = np.linalg.norm(self.beams, axis=0)
        return bool(
            np.all(np.abs(norms - 1) <= tol)
            and np.all(self.powers >= 0)
            and self.powers.sum() <= self.total_power * (1 + tol)
        )


def gain_matrix(H, G) -> np.ndarray:
    """``|h_i^H g_j|^2`` for every user i and beam j."""
    return np.abs(np.asarray(H) @ np.asarray(G)) ** 2


def sinr(H, rho, G, powers, noise_var: float) -> np.ndarray:
    """Per-user SINR; user ``i`` is served by beam ``i``."""
    if not noise_var > 0:
        raise DomainError(f"noise variance must be positive, got {noise_var}")
    H = np.asarray(H)
    G = np.asarray(G)
    if H.shape[0] != G.shape[1] or H.shape[1] != G.shape[0]:
        raise StructuralError(f"channel {H.shape} and beams {G.shape} do not match")
    rho = np.asarray(rho, dtype=float)
    powers = np.asarray(powers, dtype=float)
    received = rho[:, None] * gain_matrix(H, G) * powers[None, :]
    signal = np.diag(received).copy()
    np.fill_diagonal(received, 0.0)
    interference = received.sum(axis=1)
    return signal / (interference + noise_var)


def sum_rate(sinrs) -> float:
    """``sum_i log2(1 + SINR_i)`` in bit/s/Hz."""
    sinrs = np.asarray(sinrs, dtype=float)
    if np.any(sinrs < 0):
        raise DomainError("SINR values must be non-negative")
    return float(np.sum(np.log2(1 + sinrs)))


def zf_sum_rate(d, powers, rho, noise_var: float) -> float:
    """Sum rate of an interference-free beamformer with ``h_i^H g_i = d_i``."""
    d = np.asarray(d, dtype=float)
    return float(np.sum(np.log2(1 + np.asarray(rho) * np.asarray(powers) * d**2 / noise_var)))
