"""Rayleigh-Sommerfeld propagation through the metasurface stack.

Layer indices are zero-based: layer 0 is illuminated directly by the BS
array through ``Ws[0]`` (Q x N) and layer ``l > 0`` by layer ``l - 1``
through ``Ws[l]`` (Q x Q).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from simbf.errors import ConfigurationError, DomainError, StructuralError
from simbf.geometry import SimGeometry, pairwise_distances

TWO_PI = 2 * math.pi

__all__ = [
    "LayerKind",
    "LayerStack",
    "arrange_layers",
    "wrap_phase",
    "diffraction_matrix",
    "transfer_matrices",
    "cascade",
    "partial_products",
    "suffix_products",
    "radiated_power",
    "spectral_norm_sq",
    "radiated_power_bound",
]


class LayerKind(str, enum.Enum):
    PC = "pc"
    AC = "ac"


def wrap_phase(phases) -> np.ndarray:
    """Map phases into ``[0, 2 pi)``; tiny negatives that round to 2 pi become 0."""
    out = np.mod(np.asarray(phases, dtype=float), TWO_PI)
    out[out >= TWO_PI] = 0.0
    return out


def arrange_layers(arrangement: str, n_pc: int, n_ac: int) -> tuple[LayerKind, ...]:
    """Order PC and AC layers from the RF side outwards.

    ``rf-ac-pc`` puts all AC layers first, ``rf-pc-ac`` all PC layers
    first, ``interlaced`` spreads the AC layers evenly starting at the
    first layer, and ``pc-only`` ignores ``n_ac``.
    """
    if n_pc < 0 or n_ac < 0 or n_pc + n_ac < 1:
        raise ConfigurationError(f"invalid layer counts n_pc={n_pc}, n_ac={n_ac}")
    pc, ac = LayerKind.PC, LayerKind.AC
    if arrangement == "rf-ac-pc":
        return (ac,) * n_ac + (pc,) * n_pc
    if arrangement == "rf-pc-ac":
        return (pc,) * n_pc + (ac,) * n_ac
    if arrangement == "pc-only":
        if n_pc < 1:
            raise ConfigurationError("pc-only arrangement needs at least one PC layer")
        return (pc,) * n_pc
    if arrangement == "interlaced":
        n = n_pc + n_ac
        ac_at = {(k * n) // n_ac for k in range(n_ac)} if n_ac else set()
        return tuple(ac if ell in ac_at else pc for ell in range(n))
    raise ConfigurationError(f"unknown layer arrangement {arrangement!r}")


@dataclass
class LayerStack:
    """Transmission coefficients ``gamma[l, q] = amplitudes * exp(j phases)``.

    PC layers have their amplitude pinned to ``pc_amplitude`` and a free
    phase in ``[0, 2 pi)``; AC layers have a fixed phase and an amplitude in
    ``[amp_min, amp_max]``.  Use :meth:`set_phases` and
    :meth:`set_amplitudes` to update, which enforce those constraints.
    """

    kinds: tuple
    phases: np.ndarray
    amplitudes: np.ndarray
    pc_amplitude: float = 0.9
    amp_min: float = 10 ** (-22 / 20)
    amp_max: float = 10 ** (13 / 20)
    bits: int = 3
    _cache: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.kinds = tuple(LayerKind(k) for k in self.kinds)
        self.phases = np.array(self.phases, dtype=float)
        self.amplitudes = np.array(self.amplitudes, dtype=float)
        if self.phases.ndim != 2 or self.phases.shape != self.amplitudes.shape:
            raise StructuralError("phases and amplitudes must be matching (L, Q) arrays")
        if self.phases.shape[0] != len(self.kinds):
            raise StructuralError(f"{len(self.kinds)} layer kinds for {self.phases.shape[0]} layers")
        if not 0 < self.amp_min <= self.amp_max:
            raise ConfigurationError(f"invalid amplitude box [{self.amp_min}, {self.amp_max}]")
        self.phases[self.pc_layers] = wrap_phase(self.phases[self.pc_layers])
        self.amplitudes[self.pc_layers] = self.pc_amplitude
        self.amplitudes[self.ac_layers] = np.clip(self.amplitudes[self.ac_layers], self.amp_min, self.amp_max)

    @classmethod
    def initial(
        cls,
        kinds,
        n_atoms: int,
        rng: np.random.Generator | None = None,
        ac_phases=None,
        **params,
    ) -> "LayerStack":
        """Starting point for a fit.

        PC phases are uniform on ``[0, 2 pi)`` (zero without ``rng``), AC
        amplitudes start at 1 clamped into the box and AC phases default
        to 0.
        """
        kinds = tuple(LayerKind(k) for k in kinds)
        n_layers = len(kinds)
        phases = np.zeros((n_layers, n_atoms))
        if rng is not None:
            phases[:] = rng.uniform(0.0, TWO_PI, size=(n_layers, n_atoms))
        ac = [ell for ell, k in enumerate(kinds) if k is LayerKind.AC]
        if ac_phases is not None:
            phases[ac] = np.broadcast_to(ac_phases, (len(ac), n_atoms))
        else:
            phases[ac] = 0.0
        return cls(kinds, phases, np.ones((n_layers, n_atoms)), **params)

    @property
    def n_layers(self) -> int:
        return len(self.kinds)

    @property
    def n_atoms(self) -> int:
        return self.phases.shape[1]

    @property
    def pc_layers(self) -> list[int]:
        return [ell for ell, k in enumerate(self.kinds) if k is LayerKind.PC]

    @property
    def ac_layers(self) -> list[int]:
        return [ell for ell, k in enumerate(self.kinds) if k is LayerKind.AC]

    @property
    def coefficients(self) -> np.ndarray:
        if self._cache is None:
            self._cache = self.amplitudes * np.exp(1j * self.phases)
        return self._cache

    def layer(self, ell: int) -> np.ndarray:
        return self.coefficients[ell]

    def set_phases(self, ell: int, phases) -> None:
        if self.kinds[ell] is not LayerKind.PC:
            raise StructuralError(f"layer {ell} is amplitude-controlled; its phases are fixed")
        self.phases[ell] = wrap_phase(phases)
        self._cache = None

    def set_amplitudes(self, ell: int, amplitudes) -> None:
        """Set AC amplitudes, projecting onto ``[amp_min, amp_max]``."""
        if self.kinds[ell] is not LayerKind.AC:
            raise StructuralError(f"layer {ell} is phase-controlled; its amplitude is fixed")
        self.amplitudes[ell] = np.clip(amplitudes, self.amp_min, self.amp_max)
        self._cache = None

    def copy(self) -> "LayerStack":
        return LayerStack(
            self.kinds,
            self.phases.copy(),
            self.amplitudes.copy(),
            pc_amplitude=self.pc_amplitude,
            amp_min=self.amp_min,
            amp_max=self.amp_max,
            bits=self.bits,
        )


def _coefficients(stack) -> np.ndarray:
    if isinstance(stack, LayerStack):
        return stack.coefficients
    return np.atleast_2d(np.asarray(stack, dtype=complex))


def diffraction_matrix(src, dst, gap: float, element_area: float, wavelength: float) -> np.ndarray:
    """Discretised Rayleigh-Sommerfeld kernel between two parallel planes.

    Entry ``(q, n)`` is the coefficient from source point ``n`` to
    destination point ``q``::

        A cos(theta) / d * (1 / (2 pi d) - j / lambda) * exp(j 2 pi d / lambda)

    with ``A`` the area of the source element.
    """
    if not gap > 0:
        raise DomainError(f"plane separation must be positive, got {gap}")
    if not wavelength > 0 or not element_area > 0:
        raise DomainError("wavelength and element area must be positive")
    d, cos = pairwise_distances(src, dst, gap)
    return element_area * cos / d * (1 / (TWO_PI * d) - 1j / wavelength) * np.exp(1j * TWO_PI * d / wavelength)


def transfer_matrices(geometry: SimGeometry) -> list[np.ndarray]:
    """``[W_1, ..., W_L]`` for a geometry (array-to-first-layer first)."""
    lam = geometry.wavelength
    Ws = [diffraction_matrix(geometry.antenna_positions, geometry.layer_positions[0], geometry.sigma, geometry.bs_area, lam)]
    # all layer pairs share the same transverse grid, hence the same matrix
    if geometry.n_layers > 1:
        W = diffraction_matrix(geometry.layer_positions[0], geometry.layer_positions[1], geometry.spacing, geometry.meta_area, lam)
        Ws.extend(W for _ in range(geometry.n_layers - 1))
    return Ws


def _check_chain(Ws, coeffs):
    if len(Ws) != coeffs.shape[0]:
        raise StructuralError(f"{len(Ws)} transfer matrices for {coeffs.shape[0]} layers")
    q = coeffs.shape[1]
    if Ws[0].shape[0] != q:
        raise StructuralError(f"first transfer matrix has {Ws[0].shape[0]} rows, layers have {q} atoms")
    for ell, W in enumerate(Ws[1:], start=1):
        if W.shape != (q, q):
            raise StructuralError(f"transfer matrix {ell} has shape {W.shape}, expected {(q, q)}")


def cascade(Ws, stack) -> np.ndarray:
    """End-to-end ``G = Gamma_L W_L ... Gamma_1 W_1`` (Q x N)."""
    coeffs = _coefficients(stack)
    _check_chain(Ws, coeffs)
    G = coeffs[0][:, None] * Ws[0]
    for W, gamma in zip(Ws[1:], coeffs[1:]):
        G = gamma[:, None] * (W @ G)
    return G


def suffix_products(Ws, stack) -> list[np.ndarray]:
    """``E_l = Gamma_L W_L ... Gamma_{l+1} W_{l+1}`` for every layer ``l``."""
    coeffs = _coefficients(stack)
    n_layers, q = coeffs.shape
    E = [None] * n_layers
    E[-1] = np.eye(q, dtype=complex)
    for ell in range(n_layers - 2, -1, -1):
        E[ell] = E[ell + 1] @ (coeffs[ell + 1][:, None] * Ws[ell + 1])
    return E


def partial_products(Ws, stack, ell: int):
    """Split the cascade around layer ``ell`` (zero-based).

    Returns ``(E, B)`` with ``E`` the product of everything after layer
    ``ell`` (identity for the last layer) and ``B = W_ell Gamma_{ell-1} ...
    W_1`` (``W_1`` itself for the first layer), so that
    ``E @ diag(gamma_ell) @ B == cascade(Ws, stack)``.
    """
    coeffs = _coefficients(stack)
    _check_chain(Ws, coeffs)
    n_layers, q = coeffs.shape
    if not 0 <= ell < n_layers:
        raise StructuralError(f"layer index {ell} out of range for {n_layers} layers")
    B = Ws[0]
    for k in range(1, ell + 1):
        B = Ws[k] @ (coeffs[k - 1][:, None] * B)
    E = np.eye(q, dtype=complex)
    for k in range(n_layers - 1, ell, -1):
        E = E @ (coeffs[k][:, None] * Ws[k])
    return E, B


def radiated_power(G, powers) -> float:
    """Total radiated power ``sum_i P_i ||g_i||^2``."""
    G = np.asarray(G)
    powers = np.asarray(powers, dtype=float)
    return float(np.sum(powers * np.sum(np.abs(G) ** 2, axis=0)))


def spectral_norm_sq(W, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest eigenvalue of ``W^H W`` by power iteration."""
    W = np.asarray(W)
    x = np.random.default_rng(0).standard_normal(W.shape[1]) + 0j
    x /= np.linalg.norm(x)
    beta = 0.0
    for _ in range(max_iter):
        y = W.conj().T @ (W @ x)
        beta_new = float(np.real(np.vdot(x, y)))
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
        if abs(beta_new - beta) <= tol * abs(beta_new):
            return beta_new
        beta = beta_new
    return beta


def radiated_power_bound(Ws, stack: LayerStack, powers) -> float:
    """Upper bound on the radiated power of any stack with these constraints.

    ``amp_max^(2 L_ac) * prod_l beta_max(W_l^H W_l) * sum_i P_i``; PC layers
    contribute a factor of one.
    """
    n_ac = len(stack.ac_layers)
    gains = 1.0
    cache: dict[int, float] = {}
    for W in Ws:
        key = id(W)
        if key not in cache:
            cache[key] = spectral_norm_sq(W)
        gains *= cache[key]
    return stack.amp_max ** (2 * n_ac) * gains * float(np.sum(powers))
