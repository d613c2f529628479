"""Highway geometry, RSU/vehicle deployment, mobility and cell association.

The road is modelled as a torus of length ``num_rsus * rsu_spacing`` so that
edge cells see the same interference as interior ones.  Six 4 m lanes span the
road cross-section; lanes 1-3 drive in +x, lanes 4-6 in -x.  RSUs sit on the
lane-1 side of the road, ``rsu_offset`` metres from the nearest lane edge.
"""

from dataclasses import dataclass, field, replace

import numpy as np

KMH_TO_MS = 1.0 / 3.6


class ConfigurationError(ValueError):
    """Raised for invalid scenario parameters."""


@dataclass(frozen=True)
class HighwayConfig:
    num_lanes: int = 6
    lane_width: float = 4.0           # m
    rsu_spacing: float = 1732.0       # m
    rsu_offset: float = 35.0          # m from nearest road edge
    num_rsus: int = 7
    speed: float = 140.0 * KMH_TO_MS  # m/s, shared by all vehicles
    min_gap: float = 200.0            # m
    max_gap: float = 300.0            # m
    num_tx_antennas: int = 1
    num_rx_antennas: int = 2
    tx_power_dbm: float = 46.0

    def __post_init__(self):
        if self.min_gap <= 0:
            raise ConfigurationError("min_gap must be positive")
        if self.min_gap > self.max_gap:
            raise ConfigurationError("min_gap must not exceed max_gap")
        if self.num_rsus < 1 or self.num_lanes < 1:
            raise ConfigurationError("need at least one RSU and one lane")

    @property
    def road_length(self) -> float:
        return self.num_rsus * self.rsu_spacing

    @property
    def road_half_width(self) -> float:
        return 0.5 * self.num_lanes * self.lane_width

    def lane_center_y(self, lane):
        """y coordinate of a 1-based lane index (vectorised)."""
        return -self.road_half_width + (np.asarray(lane) - 0.5) * self.lane_width

    def lane_direction(self, lane):
        """+1 for lanes 1..n/2, -1 for the rest."""
        return np.where(np.asarray(lane) <= self.num_lanes // 2, 1, -1)

    @property
    def rsu_y(self) -> float:
        return -self.road_half_width - self.rsu_offset

    def rsu_positions(self) -> np.ndarray:
        """(num_rsus, 2) array of RSU coordinates, equally spaced along x."""
        x = (np.arange(self.num_rsus) + 0.5) * self.rsu_spacing
        y = np.full(self.num_rsus, self.rsu_y)
        return np.stack([x, y], axis=1)


@dataclass(frozen=True)
class Rsu:
    id: int
    position: tuple
    num_tx_antennas: int
    tx_power_dbm: float


@dataclass(frozen=True)
class Vehicle:
    id: int
    lane: int
    position: float
    direction: int
    serving_rsu: int
    num_rx_antennas: int


@dataclass(frozen=True)
class ScenarioState:
    """Immutable snapshot of the network: RSU grid plus vehicle arrays.

    Vehicle attributes are stored as parallel numpy arrays (``ids``, ``lanes``,
    ``positions``, ``directions``, ``serving``) for vectorised geometry work.
    """

    config: HighwayConfig
    ids: np.ndarray          # int, global unique vehicle ids
    lanes: np.ndarray        # int, 1-based
    positions: np.ndarray    # float, metres along the road (mod road_length)
    directions: np.ndarray   # +1 / -1
    serving: np.ndarray      # RSU index per vehicle
    rsu_xy: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.rsu_xy is None:
            object.__setattr__(self, "rsu_xy", self.config.rsu_positions())

    @property
    def num_vehicles(self) -> int:
        return len(self.ids)

    @property
    def rsus(self):
        return [
            Rsu(i, tuple(self.rsu_xy[i]), self.config.num_tx_antennas,
                self.config.tx_power_dbm)
            for i in range(self.config.num_rsus)
        ]

    @property
    def vehicles(self):
        return [
            Vehicle(int(self.ids[k]), int(self.lanes[k]), float(self.positions[k]),
                    int(self.directions[k]), int(self.serving[k]),
                    self.config.num_rx_antennas)
            for k in range(self.num_vehicles)
        ]

    def distances_m(self) -> np.ndarray:
        """(num_rsus, num_vehicles) RSU-to-vehicle distances on the torus."""
        cfg = self.config
        dx = np.abs(self.positions[None, :] - self.rsu_xy[:, 0][:, None])
        dx = np.minimum(dx, cfg.road_length - dx)
        dy = cfg.lane_center_y(self.lanes)[None, :] - self.rsu_xy[:, 1][:, None]
        return np.hypot(dx, dy)

    def vehicles_per_rsu(self) -> np.ndarray:
        return np.bincount(self.serving, minlength=self.config.num_rsus)


def deploy(config: HighwayConfig, rng_seed: int) -> ScenarioState:
    """Drop vehicles on each lane with i.i.d. uniform gaps in [min_gap, max_gap].

    Each lane starts at an independent uniform offset in [0, max_gap) so lanes
    are not aligned.  The initial serving cell is the minimum-path-loss RSU
    ignoring shadowing (equivalently the nearest RSU); `associate` refines it
    once shadowing is available.
    """
    rng = np.random.default_rng(rng_seed)
    lanes, positions = [], []
    for lane in range(1, config.num_lanes + 1):
        x = rng.uniform(0.0, config.max_gap)
        # draw more gaps than can possibly fit, then cut at the road end
        n_max = int(config.road_length / config.min_gap) + 2
        gaps = rng.uniform(config.min_gap, config.max_gap, size=n_max)
        pos = x + np.concatenate([[0.0], np.cumsum(gaps)])
        pos = pos[pos < config.road_length]
        positions.append(pos)
        lanes.append(np.full(len(pos), lane, dtype=int))
    lanes = np.concatenate(lanes)
    positions = np.concatenate(positions)
    ids = np.arange(len(lanes))
    state = ScenarioState(
        config=config,
        ids=ids,
        lanes=lanes,
        positions=positions,
        directions=config.lane_direction(lanes),
        serving=np.zeros(len(lanes), dtype=int),
    )
    nearest = np.argmin(state.distances_m(), axis=0)
    return replace(state, serving=nearest)


def advance_mobility(state: ScenarioState, dt: float) -> ScenarioState:
    """Shift every vehicle by direction * speed * dt, wrapping on the torus."""
    if dt < 0:
        raise ConfigurationError("dt must be non-negative")
    if dt == 0:
        return state
    new_pos = np.mod(
        state.positions + state.directions * state.config.speed * dt,
        state.config.road_length,
    )
    return replace(state, positions=new_pos)


def associate(state: ScenarioState, gain_db: np.ndarray) -> ScenarioState:
    """Re-associate every vehicle to its best large-scale-gain RSU.

    ``gain_db`` has shape (num_rsus, num_vehicles) and already contains
    -(path loss + shadowing); ties break to the lowest RSU id (argmax picks
    the first maximum).
    """
    if gain_db.shape != (state.config.num_rsus, state.num_vehicles):
        raise ValueError("gain_db shape mismatch")
    return replace(state, serving=np.argmax(gain_db, axis=0))
