"""Large-scale and small-scale channel models.

Large scale: macro-to-relay path loss plus log-normal shadowing that is
spatially correlated along the road (exponential decorrelation, one
independent field per RSU).  Small scale: a tapped-delay-line with Rayleigh
taps, exponential power-delay profile and classical (Jakes) Doppler, realised
as a sum of random cisoids so that the coefficient at any (link, time, PRB)
is a pure function of the seed.
"""

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
PRB_BANDWIDTH_HZ = 180_000.0
NUM_PRBS = 50


def path_loss_db(d_km):
    """Macro-to-relay path loss, distance in kilometres."""
    d_km = np.asarray(d_km, dtype=float)
    if np.any(d_km <= 0):
        raise ValueError("distance must be positive")
    return 100.7 + 23.5 * np.log10(d_km)


@dataclass(frozen=True)
class NoiseModel:
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 9.0
    prb_bandwidth_hz: float = PRB_BANDWIDTH_HZ

    def noise_power_dbm(self) -> float:
        """Per-PRB noise power in dBm."""
        return (self.noise_density_dbm_hz
                + 10.0 * np.log10(self.prb_bandwidth_hz)
                + self.noise_figure_db)

    def noise_power_watts(self) -> float:
        return 10.0 ** ((self.noise_power_dbm() - 30.0) / 10.0)


def noise_power_dbm(model: NoiseModel) -> float:
    return model.noise_power_dbm()


@dataclass(frozen=True)
class LargeScaleMap:
    gain_db: np.ndarray      # (num_rsus, num_vehicles), -(PL + shadowing)
    last_update_ms: float


class ShadowingField:
    """Static per-RSU log-normal shadowing field along the (circular) road.

    Sampled once per drop by circulant embedding so the field is stationary on
    the torus with autocorrelation sigma^2 * exp(-d / decorr).  A vehicle
    moving through the field picks up the matching temporal correlation.
    """

    def __init__(self, sigma_db, decorr_m, road_length, num_rsus, rng,
                 grid_step=2.0):
        self.sigma_db = float(sigma_db)
        self.decorr_m = float(decorr_m)
        self.road_length = float(road_length)
        self.grid_step = float(grid_step)
        n = max(int(round(road_length / grid_step)), 4)
        self.n = n
        if self.sigma_db == 0.0:
            self.values = np.zeros((num_rsus, n))
            return
        dist = np.arange(n) * grid_step
        dist = np.minimum(dist, road_length - dist)
        cov = self.sigma_db ** 2 * np.exp(-dist / self.decorr_m)
        lam = np.clip(np.fft.fft(cov).real, 0.0, None)
        # two independent real fields per complex draw; keep the real one
        noise = rng.standard_normal((num_rsus, n)) + 1j * rng.standard_normal((num_rsus, n))
        self.values = np.fft.fft(np.sqrt(lam / n) * noise, axis=1).real

    def sample(self, x_positions) -> np.ndarray:
        """Shadowing in dB at road coordinates x, shape (num_rsus, len(x))."""
        x = np.mod(np.asarray(x_positions, dtype=float), self.road_length)
        idx = x / self.grid_step
        i0 = np.floor(idx).astype(int) % self.n
        i1 = (i0 + 1) % self.n
        frac = idx - np.floor(idx)
        return self.values[:, i0] * (1.0 - frac) + self.values[:, i1] * frac


def large_scale_gain_db(distances_m, shadowing_db=None) -> np.ndarray:
    """-(path loss + shadowing) for a (num_rsus, num_vehicles) distance grid."""
    gain = -path_loss_db(distances_m / 1000.0)
    if shadowing_db is not None:
        gain = gain - shadowing_db
    return gain


@dataclass(frozen=True)
class TdlConfig:
    """Reduced tapped-delay-line surrogate for the fast fading process."""
    num_taps: int = 6
    delay_spread_us: float = 2.5
    tap_decay_db: float = 3.0
    carrier_ghz: float = 2.0
    speed_ms: float = 140.0 / 3.6
    num_sinusoids: int = 16
    num_prbs: int = NUM_PRBS
    prb_bandwidth_hz: float = PRB_BANDWIDTH_HZ
    tx_corr: float = 0.0  # transmit-antenna correlation, 2-Tx links only

    @property
    def doppler_hz(self) -> float:
        return self.speed_ms * self.carrier_ghz * 1e9 / SPEED_OF_LIGHT

    def tap_delays_s(self) -> np.ndarray:
        if self.num_taps == 1:
            return np.zeros(1)
        return np.linspace(0.0, self.delay_spread_us * 1e-6, self.num_taps)

    def tap_powers(self) -> np.ndarray:
        p = 10.0 ** (-self.tap_decay_db * np.arange(self.num_taps) / 10.0)
        return p / p.sum()

    def steering(self) -> np.ndarray:
        """(num_taps, num_prbs) tap-to-PRB transform including tap powers."""
        f = (np.arange(self.num_prbs) - (self.num_prbs - 1) / 2.0) * self.prb_bandwidth_hz
        phase = np.exp(-2j * np.pi * np.outer(self.tap_delays_s(), f))
        return np.sqrt(self.tap_powers())[:, None] * phase


class TdlFading:
    """Sum-of-cisoids Rayleigh fading, i.i.d. across links, antennas and taps.

    Every tap process is sum_m amp_m * exp(j * w_m * t) with M random phases
    and Doppler shifts w_m = 2*pi*f_d*cos(alpha_m), alpha_m uniform.  All
    randomness is derived from SeedSequence(seed, spawn_key=(rsu, vehicle)),
    so coefficients depend only on (seed, link, t) and not on evaluation
    order.
    """

    def __init__(self, config: TdlConfig, seed: int, num_rx=2, num_tx=1):
        self.config = config
        self.seed = int(seed)
        self.num_rx = num_rx
        self.num_tx = num_tx
        self._params = {}
        self._steering = config.steering()

    def link_params(self, rsu: int, vehicle: int):
        """(omega, amp) arrays of shape (num_rx, num_tx, taps, M)."""
        key = (rsu, vehicle)
        if key not in self._params:
            ss = np.random.SeedSequence(self.seed, spawn_key=key)
            rng = np.random.default_rng(ss)
            # always draw two Tx branches and slice, so the first branch is
            # the same realization whether the link runs 1 or 2 Tx antennas
            # (single-antenna and precoded runs then share their channels)
            shape = (self.num_rx, max(self.num_tx, 2), self.config.num_taps,
                     self.config.num_sinusoids)
            alpha = rng.uniform(-np.pi, np.pi, size=shape)
            phi = rng.uniform(-np.pi, np.pi, size=shape)
            omega = 2.0 * np.pi * self.config.doppler_hz * np.cos(alpha)
            amp = np.exp(1j * phi) / np.sqrt(self.config.num_sinusoids)
            self._params[key] = (omega[:, :self.num_tx],
                                 amp[:, :self.num_tx])
        return self._params[key]

    def taps_at(self, rsu, vehicle, t_s) -> np.ndarray:
        """Unit-mean-power tap gains at time t, shape (num_rx, num_tx, taps)."""
        omega, amp = self.link_params(rsu, vehicle)
        taps = (amp * np.exp(1j * omega * t_s)).sum(axis=-1)
        return apply_tx_correlation(taps, self.config.tx_corr, tx_axis=1)

    def response(self, rsu, vehicle, t_s, gain_linear=1.0) -> np.ndarray:
        """Per-PRB channel matrix at time t, shape (num_rx, num_tx, num_prbs).

        Mean squared magnitude of each entry equals ``gain_linear``.
        """
        taps = self.taps_at(rsu, vehicle, t_s)
        return np.sqrt(gain_linear) * (taps @ self._steering)


def apply_tx_correlation(taps, rho, tx_axis):
    """Mix the two transmit branches to correlation ``rho`` (Cholesky form).

    Per-entry power is preserved; a zero ``rho`` or a single Tx antenna is a
    no-op, keeping entries i.i.d. as in the SIMO configuration.
    """
    if rho == 0.0 or taps.shape[tx_axis] != 2:
        return taps
    t0 = np.take(taps, 0, axis=tx_axis)
    t1 = np.take(taps, 1, axis=tx_axis)
    mixed = rho * t0 + np.sqrt(1.0 - rho ** 2) * t1
    return np.stack([t0, mixed], axis=tx_axis)


class FadingBank:
    """Vectorised fading evaluation for a fixed set of links.

    Holds the cisoid parameters of ``links`` (a list of (rsu, vehicle) pairs)
    stacked into one array and evaluates all taps at a common time.  The
    recursive ``step`` advances time by a fixed increment using unit-modulus
    rotators (equal to direct evaluation up to float rounding).
    """

    def __init__(self, fading: TdlFading, links, t0_s, step_s):
        self.fading = fading
        self.links = list(links)
        omega = np.stack([fading.link_params(r, v)[0] for r, v in self.links])
        amp = np.stack([fading.link_params(r, v)[1] for r, v in self.links])
        self._omega = omega
        self._amp = amp
        self._rot = np.exp(1j * omega * step_s)
        self._state = amp * np.exp(1j * omega * t0_s)
        self.t_s = t0_s
        self.step_s = step_s
        self._steering = fading._steering

    def step(self):
        self._state *= self._rot
        self.t_s += self.step_s

    def taps(self) -> np.ndarray:
        """(n_links, num_rx, num_tx, num_taps) tap gains at the current time."""
        taps = self._state.sum(axis=-1)
        return apply_tx_correlation(taps, self.fading.config.tx_corr, tx_axis=2)

    def response(self) -> np.ndarray:
        """(n_links, num_rx, num_tx, num_prbs) unit-power PRB responses."""
        return self.taps() @ self._steering
