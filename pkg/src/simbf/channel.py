"""User channels, path loss and noise."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from simbf.errors import ConfigurationError, DomainError, StructuralError

log = logging.getLogger(__name__)

__all__ = [
    "ChannelSet",
    "sample_user_channels",
    "path_loss",
    "noise_variance",
    "db_to_linear",
    "dbm_to_watts",
    "reduce",
]


@dataclass(frozen=True)
class ChannelSet:
    """Channels from the last SIM layer to the K users.

    Row ``k`` of ``H`` is ``h_k^H``, so the received amplitude of beam
    ``g`` at user ``k`` is ``H[k] @ g``.
    """

    H: np.ndarray
    path_loss: np.ndarray
    noise_var: float
    d0: float = 1.0
    eta: float = 3.5

    @property
    def n_users(self) -> int:
        return self.H.shape[0]


def db_to_linear(db: float, amplitude: bool = False) -> float:
    """dB to linear scale; ``amplitude=True`` uses 20 log10."""
    return 10 ** (db / (20 if amplitude else 10))


def dbm_to_watts(dbm: float) -> float:
    return 10 ** ((dbm - 30) / 10)


def sample_user_channels(rng: np.random.Generator, n_users: int, n_atoms: int) -> np.ndarray:
    """i.i.d. CN(0, 1) channel matrix of shape ``(n_users, n_atoms)``.

    Real and imaginary parts are N(0, 1/2).  Rows are filled in order, so a
    smaller user pool drawn from the same generator state is a prefix of a
    larger one.
    """
    if n_users < 1 or n_atoms < 1:
        raise ConfigurationError(f"channel dimensions must be positive, got {n_users}x{n_atoms}")
    z = rng.standard_normal((n_users, n_atoms, 2)) / math.sqrt(2)
    return z[..., 0] + 1j * z[..., 1]


def path_loss(distance, wavelength: float, d0: float = 1.0, eta: float = 3.5):
    """Large-scale gain ``lambda^2 / (4 pi d0)^2 * (d0 / d)^eta``."""
    if not d0 > 0:
        raise DomainError(f"reference distance must be positive, got {d0}")
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise DomainError("link distances must be positive")
    if np.any(d < d0):
        log.warning("link distance below the far-field reference d0=%g m", d0)
    out = wavelength**2 / (4 * math.pi * d0) ** 2 * (d0 / d) ** eta
    return float(out) if np.ndim(out) == 0 else out


def noise_variance(psd_dbm_per_hz: float, bandwidth_hz: float) -> float:
    """Noise power in watts over the given bandwidth."""
    if not bandwidth_hz > 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth_hz}")
    return dbm_to_watts(psd_dbm_per_hz) * bandwidth_hz


def reduce(H, rho, subset):
    """Rows of ``H`` and entries of ``rho`` for the scheduled users, in order."""
    H = np.asarray(H)
    rho = np.asarray(rho, dtype=float)
    idx = [int(k) for k in subset]
    if len(set(idx)) != len(idx):
        raise StructuralError(f"duplicate user index in subset {idx}")
    if any(k < 0 or k >= H.shape[0] for k in idx):
        raise StructuralError(f"subset {idx} out of range for {H.shape[0]} users")
    return H[idx].copy(), rho[idx].copy()
