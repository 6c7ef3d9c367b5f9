"""Network drops: AP/UE placement, wrap-around distances, cells and pilots."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Raised when a configuration violates one of its invariants."""


@dataclass(frozen=True)
class LayoutConfig:
    area_side_m: float = 1000.0
    num_aps: int = 400
    antennas_per_ap: int = 1
    num_ues: int = 40
    num_pilots: int = 10
    ap_placement: str = "square_grid"
    ap_height_m: float = 10.0
    ue_height_m: float = 0.0
    cellular_cells: int = 4
    cellular_antennas: int = 100
    seed: int = 0

    def __post_init__(self):
        self.validate()

    @property
    def height_delta_m(self) -> float:
        return abs(self.ap_height_m - self.ue_height_m)

    def validate(self) -> None:
        if self.area_side_m <= 0:
            raise ConfigurationError("layout.area_side_m must be positive")
        for name in ("num_aps", "antennas_per_ap", "num_ues", "num_pilots", "cellular_antennas"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"layout.{name} must be a positive integer")
        if self.cellular_cells < 0:
            raise ConfigurationError("layout.cellular_cells must be non-negative")
        if self.ap_placement not in ("square_grid", "uniform_random"):
            raise ConfigurationError(
                f"layout.ap_placement must be 'square_grid' or 'uniform_random', got {self.ap_placement!r}"
            )
        if self.ap_placement == "square_grid" and math.isqrt(self.num_aps) ** 2 != self.num_aps:
            raise ConfigurationError("layout.num_aps must be a perfect square for square_grid placement")
        if self.cellular_cells:
            if math.isqrt(self.cellular_cells) ** 2 != self.cellular_cells:
                raise ConfigurationError("layout.cellular_cells must be a perfect square (square cells)")
            if self.num_ues % self.cellular_cells:
                raise ConfigurationError("layout.num_ues must be divisible by layout.cellular_cells")
            if self.num_ues // self.cellular_cells > self.num_pilots:
                raise ConfigurationError(
                    "layout.num_pilots must be at least the number of UEs per cell for in-cell unique pilots"
                )
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("layout.seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class NetworkRealization:
    """One drop. Pilot indices are 0-based (``0..tau_p-1``)."""

    ap_positions: np.ndarray  # (L, 2)
    ue_positions: np.ndarray  # (K, 2)
    pilot_of_ue: np.ndarray  # (K,)
    num_pilots: int
    area_side_m: float
    bs_positions: np.ndarray | None = None  # (L_c, 2)
    drop_cell_of_ue: np.ndarray | None = None  # square the UE was dropped in
    cell_of_ue: np.ndarray | None = None  # serving BS after assign_cells
    copilot_sets: tuple = field(init=False)

    def __post_init__(self):
        for arr in (self.ap_positions, self.ue_positions, self.pilot_of_ue):
            arr.setflags(write=False)
        pilots = self.pilot_of_ue
        sets = tuple(tuple(np.flatnonzero(pilots == pilots[k]).tolist()) for k in range(len(pilots)))
        object.__setattr__(self, "copilot_sets", sets)

    @property
    def num_aps(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def num_ues(self) -> int:
        return self.ue_positions.shape[0]

    def pilot_matrix(self) -> np.ndarray:
        """One-hot ``(tau_p, K)`` pilot-usage matrix."""
        m = np.zeros((self.num_pilots, self.num_ues))
        m[self.pilot_of_ue, np.arange(self.num_ues)] = 1.0
        return m


def grid_positions(count: int, side: float) -> np.ndarray:
    """Centers of ``count`` equal sub-squares of a ``side`` x ``side`` area."""
    per_dim = math.isqrt(count)
    centers = (np.arange(per_dim) + 0.5) * side / per_dim
    x, y = np.meshgrid(centers, centers, indexing="ij")
    return np.column_stack([x.ravel(), y.ravel()])


def balanced_pilots(num_ues: int, num_pilots: int, rng: np.random.Generator) -> np.ndarray:
    """Random pilot groups of size floor/ceil(K / tau_p); distinct pilots if K <= tau_p."""
    if num_ues <= num_pilots:
        return rng.permutation(num_pilots)[:num_ues]
    return rng.permutation(np.arange(num_ues) % num_pilots)


def place_network(config: LayoutConfig, rng_seed=None) -> NetworkRealization:
    """Draw AP and UE positions and the pilot assignment for one drop.

    With ``config.cellular_cells > 0`` the UEs are dropped ``K / L_c`` per
    square cell with pilots unique inside each cell, and the same positions
    and pilots serve the cell-free network as well.
    """
    rng = np.random.default_rng(config.seed if rng_seed is None else rng_seed)
    side = float(config.area_side_m)
    if config.ap_placement == "square_grid":
        aps = grid_positions(config.num_aps, side)
    else:
        aps = rng.uniform(0.0, side, size=(config.num_aps, 2))

    K, tau_p = config.num_ues, config.num_pilots
    if config.cellular_cells:
        cells = config.cellular_cells
        per_cell = K // cells
        per_dim = math.isqrt(cells)
        cell_side = side / per_dim
        bs = grid_positions(cells, side)
        drop_cell = np.repeat(np.arange(cells), per_cell)
        corner = np.column_stack([drop_cell // per_dim, drop_cell % per_dim]) * cell_side
        ues = corner + rng.uniform(0.0, cell_side, size=(K, 2))
        # consecutive cells use rotating pilot blocks so the global load stays balanced
        relabel = rng.permutation(tau_p)
        pilots = np.empty(K, dtype=int)
        for c in range(cells):
            block = (c * per_cell + np.arange(per_cell)) % tau_p
            pilots[drop_cell == c] = relabel[rng.permutation(block)]
        return NetworkRealization(aps, ues, pilots, tau_p, side, bs_positions=bs, drop_cell_of_ue=drop_cell)

    ues = rng.uniform(0.0, side, size=(K, 2))
    pilots = balanced_pilots(K, tau_p, rng)
    return NetworkRealization(aps, ues, pilots, tau_p, side)


def wraparound_displacement(a, b, area_side: float) -> np.ndarray:
    """Shortest planar displacement ``b - a`` over the 9 torus copies of ``b``.

    Broadcasts over leading dimensions of ``a`` and ``b`` (last axis = 2).
    """
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    shifts = np.array([-area_side, 0.0, area_side])
    best = np.empty(d.shape)
    for axis in (0, 1):
        cand = d[..., axis, None] + shifts
        best[..., axis] = np.take_along_axis(cand, np.argmin(np.abs(cand), axis=-1)[..., None], -1)[..., 0]
    return best


def wraparound_distance(a, b, area_side: float, height_delta: float = 0.0) -> np.ndarray:
    """3D distance between ``a`` and the nearest wrapped copy of ``b``."""
    d = wraparound_displacement(a, b, area_side)
    return np.sqrt(np.sum(d**2, axis=-1) + height_delta**2)


def link_geometry(realization: NetworkRealization, height_delta: float, transmitters=None):
    """Wrapped 3D distances, horizontal distances and AP->UE azimuths, all ``(K, L)``."""
    tx = realization.ap_positions if transmitters is None else transmitters
    disp = wraparound_displacement(tx[None, :, :], realization.ue_positions[:, None, :], realization.area_side_m)
    horizontal = np.sqrt(np.sum(disp**2, axis=-1))
    distance = np.sqrt(horizontal**2 + height_delta**2)
    angle = np.arctan2(disp[..., 1], disp[..., 0])
    return distance, horizontal, angle


def assign_cells(realization: NetworkRealization, beta_cellular: np.ndarray) -> NetworkRealization:
    """Attach each UE to the BS with the largest large-scale coefficient.

    ``beta_cellular`` is ``(K, L_c)``; ties go to the lowest BS index.
    """
    cells = np.argmax(np.asarray(beta_cellular), axis=1)
    return NetworkRealization(
        realization.ap_positions,
        realization.ue_positions,
        realization.pilot_of_ue,
        realization.num_pilots,
        realization.area_side_m,
        bs_positions=realization.bs_positions,
        drop_cell_of_ue=realization.drop_cell_of_ue,
        cell_of_ue=cells,
    )
