"""Spatial layout of the base-station array, the metasurface stack and the users.

Coordinates are in metres.  The BS array lies in the horizontal plane
``z = bs_height`` and the metasurface layers are stacked below it, parallel
and coaxial, towards the users who live on the ``z = 0`` plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from simbf.errors import ConfigurationError, DomainError

SPEED_OF_LIGHT = 3e8

__all__ = [
    "SPEED_OF_LIGHT",
    "SimGeometry",
    "UserLayout",
    "wavelength",
    "grid_positions",
    "build_layout",
    "pairwise_distances",
    "place_users",
]


def wavelength(frequency: float) -> float:
    """Free-space wavelength ``c / f0`` in metres."""
    if frequency <= 0:
        raise ConfigurationError(f"carrier frequency must be positive, got {frequency}")
    return SPEED_OF_LIGHT / frequency


@dataclass(frozen=True)
class SimGeometry:
    """Positions of every radiating element of the BS + SIM transmitter.

    Attributes
    ----------
    wavelength : float
        Carrier wavelength in metres.
    antenna_positions : np.ndarray
        ``(N, 3)`` BS antenna centres.
    layer_positions : np.ndarray
        ``(L, Q, 3)`` meta-atom centres, layer 0 being the one closest to
        the array.  Atom ``q = qx * Qy + qy``.
    sigma : float
        Gap between the array plane and the first layer.
    spacing : float
        Gap between adjacent layers.
    meta_area, bs_area : float
        Meta-atom physical area and antenna effective area (m^2).
    qx, qy : int
        Grid dimensions of a layer.
    pitch : float
        Meta-atom spacing within a layer.
    """

    wavelength: float
    antenna_positions: np.ndarray
    layer_positions: np.ndarray
    sigma: float
    spacing: float
    meta_area: float
    bs_area: float
    qx: int
    qy: int
    pitch: float

    @property
    def n_antennas(self) -> int:
        return self.antenna_positions.shape[0]

    @property
    def n_layers(self) -> int:
        return self.layer_positions.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.qx * self.qy

    @property
    def frequency(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength

    def layer_offset(self, layer: int) -> float:
        """Axial distance of ``layer`` (zero-based) from the array plane."""
        return self.sigma + layer * self.spacing

    @property
    def reference_point(self) -> np.ndarray:
        """Centre of the last (radiating) layer, used for user distances."""
        return self.layer_positions[-1].mean(axis=0)


@dataclass(frozen=True)
class UserLayout:
    """Single-antenna users on the ground plane.

    ``distances[k]`` is the distance from the SIM reference point to user k.
    """

    positions: np.ndarray
    bs_height: float
    radius: float
    distances: np.ndarray

    @property
    def n_users(self) -> int:
        return self.positions.shape[0]


def grid_positions(qx: int, qy: int, pitch: float) -> np.ndarray:
    """Centred ``qx`` x ``qy`` rectangular grid, flattened row by row.

    Returns a ``(qx*qy, 2)`` array whose row ``qx_i * qy + qy_i`` holds the
    (x, y) coordinates of grid point ``(qx_i, qy_i)``.
    """
    xs = (np.arange(qx) - (qx - 1) / 2) * pitch
    ys = (np.arange(qy) - (qy - 1) / 2) * pitch
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def build_layout(
    frequency: float,
    n_antennas: int,
    n_layers: int,
    qx: int,
    qy: int,
    pitch: float | None = None,
    spacing: float | None = None,
    sigma: float | None = None,
    meta_area: float | None = None,
    bs_area: float | None = None,
    bs_height: float = 10.0,
    antenna_spacing: float | None = None,
) -> SimGeometry:
    """Build the transmitter geometry.

    Unset lengths fall back to the defaults of the reference setup:
    pitch ``lambda/2``, layer spacing ``5 lambda / L``, ``sigma = spacing``,
    meta-atom and antenna areas ``lambda^2 / 4`` and a half-wavelength ULA
    along x.
    """
    for name, value in (("n_antennas", n_antennas), ("n_layers", n_layers), ("qx", qx), ("qy", qy)):
        if int(value) != value or value < 1:
            raise ConfigurationError(f"{name} must be a positive integer, got {value}")
    lam = wavelength(frequency)
    pitch = lam / 2 if pitch is None else pitch
    spacing = 5 * lam / n_layers if spacing is None else spacing
    sigma = spacing if sigma is None else sigma
    meta_area = lam**2 / 4 if meta_area is None else meta_area
    bs_area = lam**2 / 4 if bs_area is None else bs_area
    antenna_spacing = lam / 2 if antenna_spacing is None else antenna_spacing
    for name, value in (
        ("pitch", pitch),
        ("spacing", spacing),
        ("sigma", sigma),
        ("meta_area", meta_area),
        ("bs_area", bs_area),
        ("antenna_spacing", antenna_spacing),
    ):
        if not value > 0:
            raise ConfigurationError(f"{name} must be positive, got {value}")

    ant_x = (np.arange(n_antennas) - (n_antennas - 1) / 2) * antenna_spacing
    antennas = np.column_stack([ant_x, np.zeros(n_antennas), np.full(n_antennas, bs_height)])

    xy = grid_positions(qx, qy, pitch)
    layers = np.empty((n_layers, qx * qy, 3))
    for ell in range(n_layers):
        layers[ell, :, :2] = xy
        layers[ell, :, 2] = bs_height - (sigma + ell * spacing)

    return SimGeometry(
        wavelength=lam,
        antenna_positions=antennas,
        layer_positions=layers,
        sigma=float(sigma),
        spacing=float(spacing),
        meta_area=float(meta_area),
        bs_area=float(bs_area),
        qx=int(qx),
        qy=int(qy),
        pitch=float(pitch),
    )


def pairwise_distances(src, dst, gap: float):
    """Distances and obliquity cosines between two parallel point sets.

    Only the transverse (x, y) coordinates of ``src`` and ``dst`` are used;
    the planes are separated by ``gap``.

    Returns
    -------
    dist, cos : np.ndarray
        ``(len(dst), len(src))`` arrays with
        ``dist = sqrt(dx^2 + dy^2 + gap^2)`` and ``cos = gap / dist``.
    """
    if not gap > 0:
        raise DomainError(f"plane separation must be positive, got {gap}")
    src = np.asarray(src, dtype=float)[:, :2]
    dst = np.asarray(dst, dtype=float)[:, :2]
    delta = dst[:, None, :] - src[None, :, :]
    dist = np.sqrt(np.sum(delta**2, axis=-1) + gap**2)
    return dist, gap / dist


def place_users(rng: np.random.Generator, n_users: int, radius: float, bs_height: float, sim_position=None) -> UserLayout:
    """Drop ``n_users`` uniformly (by area) on a disk of given radius.

    The disk is centred at the origin of the ``z = 0`` plane.  Distances are
    measured to ``sim_position``, which defaults to ``(0, 0, bs_height)``.
    The draws are laid out so that the first ``k`` users of a larger pool
    coincide with a pool of size ``k`` drawn from the same generator state.
    """
    if n_users < 1:
        raise ConfigurationError(f"need at least one user, got {n_users}")
    if radius < 0:
        raise ConfigurationError(f"disk radius must be non-negative, got {radius}")
    u = rng.random((n_users, 2))
    rho = radius * np.sqrt(u[:, 0])
    theta = 2 * math.pi * u[:, 1]
    positions = np.column_stack([rho * np.cos(theta), rho * np.sin(theta), np.zeros(n_users)])
    ref = np.array([0.0, 0.0, bs_height]) if sim_position is None else np.asarray(sim_position, dtype=float)
    distances = np.linalg.norm(positions - ref, axis=1)
    return UserLayout(positions=positions, bs_height=float(bs_height), radius=float(radius), distances=distances)
