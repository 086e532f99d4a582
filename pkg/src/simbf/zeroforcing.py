"""Zero-forcing beamforming with unit-norm beams and water-filled powers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

from simbf.errors import SingularChannelError, StructuralError
from simbf.power import waterfill
from simbf.rate import BeamformingSolution, zf_sum_rate

__all__ = ["ZfSolution", "zf_beamformer", "zf_waterfill", "zf_solution"]


@dataclass
class ZfSolution:
    beams: np.ndarray
    d: np.ndarray
    powers: np.ndarray
    mu: float


def zf_beamformer(H, cond_cap: float = 1e12):
    """Minimum-norm solution of ``H G = diag(d)`` with unit-norm columns.

    ``G = H^H (H H^H)^{-1} diag(d)`` and ``d_i = 1 / sqrt([(H H^H)^{-1}]_ii)``.
    The Gram matrix is Cholesky-factorised; a failing pivot, or a condition
    number above ``cond_cap``, raises :class:`SingularChannelError`.
    """
    H = np.asarray(H, dtype=complex)
    n, q = H.shape
    if n > q:
        raise StructuralError(f"zero-forcing {n} users needs at least {n} beam dimensions, got {q}")
    gram = H @ H.conj().T
    chol, info = lapack.zpotrf(gram, lower=1, clean=1)
    if info > 0:
        raise SingularChannelError(info - 1)
    diag = np.abs(np.diag(chol)) ** 2
    if diag.max() > cond_cap * diag.min():
        raise SingularChannelError(int(np.argmin(diag)), "channel Gram matrix is ill-conditioned beyond the cap")
    # (H H^H)^{-1} = L^{-H} L^{-1}
    linv = solve_triangular(chol, np.eye(n), lower=True)
    gram_inv = linv.conj().T @ linv
    d = 1.0 / np.sqrt(np.real(np.diag(gram_inv)))
    G = H.conj().T @ (gram_inv * d[None, :])
    return G, d


def zf_waterfill(d, rho, noise_var: float, total_power: float):
    """Water-filling over the interference-free streams.

    Returns ``(powers, mu)`` with ``P_i = (1/mu - noise / (rho_i d_i^2))^+``.
    """
    floors = noise_var / (np.asarray(rho, dtype=float) * np.asarray(d, dtype=float) ** 2)
    powers, level = waterfill(floors, total_power)
    return powers, (1.0 / level if level > 0 else float("nan"))


def zf_solution(H, rho, noise_var: float, total_power: float, cond_cap: float = 1e12) -> BeamformingSolution:
    """ZF beams and powers packaged as a :class:`BeamformingSolution`."""
    G, d = zf_beamformer(H, cond_cap)
    powers, mu = zf_waterfill(d, rho, noise_var, total_power)
    return BeamformingSolution(
        beams=G,
        powers=powers,
        total_power=total_power,
        rate=zf_sum_rate(d, powers, rho, noise_var),
        info={"d": d, "mu": mu},
    )
