"""TTI loop over drops: wires scenario -> channel -> phy -> l2s -> mac and
collects statistics from the middle RSU's vehicles.

Interfering RSUs are always-on across all PRBs (full-buffer interference), so
only the measured RSU runs a scheduler and only its vehicles need fast-fading
realisations; every other cell enters through the interference covariance.
"""

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import l2s, mac, phy
from .channel import (FadingBank, NoiseModel, ShadowingField, TdlConfig,
                      TdlFading, large_scale_gain_db)
from .scenario import HighwayConfig, advance_mobility, associate, deploy

# spawn keys for the independent per-drop RNG streams
_SHADOW_KEY = (999_001,)
_MAC_KEY = (999_002,)
_INTERFERER_KEY = (999_003,)


@dataclass(frozen=True)
class SimConfig:
    scenario: HighwayConfig = field(default_factory=HighwayConfig)
    tdl: TdlConfig = field(default_factory=TdlConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    shadowing_sigma_db: float = 8.0
    decorr_m: float = 50.0
    receiver: str = "lmmse"          # mrc | lmmse
    precoding: bool = False
    tx_corr: float = 0.25            # Tx correlation used on 2-Tx links
    pf_horizon_tti: int = 100
    harq_max_tx: int = 4
    harq_rtt_ms: int = 8
    num_harq_processes: int = 8
    cqi_period_ms: int = 6
    cqi_delay_ms: int = 2
    target_rate_kbps: float = 128.0
    target_fer: float = 0.1
    mcs_fer_csv: str | None = None
    num_drops: int = 10
    ttis_per_drop: int = 2000
    master_seed: int = 1
    assoc_interval_ms: int = 100
    min_measure_ms: float = 500.0
    target_fraction: float = 0.95
    outage_kbps: float = 1.0

    def validate(self):
        if self.receiver not in ("mrc", "lmmse"):
            raise ValueError(f"unknown receiver: {self.receiver!r}")
        if self.precoding and self.receiver != "lmmse":
            raise ValueError("precoding requires the lmmse receiver")
        if self.precoding and self.scenario.num_tx_antennas != 2:
            raise ValueError("precoding requires 2 Tx antennas")
        if not self.precoding and self.scenario.num_tx_antennas != 1:
            raise ValueError("without precoding use 1 Tx antenna")
        if self.ttis_per_drop < 1 or self.num_drops < 1:
            raise ValueError("need at least one TTI and one drop")
        if self.cqi_delay_ms < 0 or self.cqi_period_ms < 1:
            raise ValueError("invalid CQI feedback timing")
        return self

    def tables(self):
        if self.mcs_fer_csv:
            return l2s.load_tables_csv(self.mcs_fer_csv)
        table = l2s.McsTable.default()
        return table, l2s.FerModel.default(table)

    @property
    def middle_rsu(self) -> int:
        return self.scenario.num_rsus // 2


@dataclass
class DropResult:
    """Statistics of one drop, restricted to the measured (middle) RSU."""
    drop_index: int
    rsu: int
    vids: np.ndarray
    thr_kbps: np.ndarray
    outage: np.ndarray
    achieved: np.ndarray
    sinr_vid: np.ndarray
    sinr_tti: np.ndarray
    sinr_db: np.ndarray
    mean_vehicles_per_rsu: float


@dataclass(frozen=True)
class ResultsRow:
    config_label: str
    receiver: str
    target_prob: float
    cell_edge_kbps: float
    outage_frac: float
    mean_vehicles_per_rsu: float


def run_drop(config: SimConfig, drop_index: int) -> DropResult:
    """Simulate one drop; deterministic for a given (master_seed, drop_index)."""
    config.validate()
    seed = config.master_seed + drop_index
    scen = deploy(config.scenario, seed)
    n_rsus = config.scenario.num_rsus
    nr = config.scenario.num_rx_antennas
    nt = config.scenario.num_tx_antennas
    middle = config.middle_rsu

    shadow = ShadowingField(
        config.shadowing_sigma_db, config.decorr_m,
        config.scenario.road_length, n_rsus,
        np.random.default_rng(np.random.SeedSequence(seed, spawn_key=_SHADOW_KEY)))
    mac_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=_MAC_KEY))
    intf_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=_INTERFERER_KEY))

    tdl = replace(config.tdl, speed_ms=config.scenario.speed,
                  tx_corr=config.tx_corr if nt == 2 else 0.0)
    fading = TdlFading(tdl, seed, num_rx=nr, num_tx=nt)
    table, fer_model = config.tables()
    sched = mac.RsuScheduler(
        num_prbs=tdl.num_prbs, mcs_table=table, fer_model=fer_model,
        pf_horizon_tti=config.pf_horizon_tti, harq_max_tx=config.harq_max_tx,
        harq_rtt_ms=config.harq_rtt_ms,
        num_harq_processes=config.num_harq_processes,
        target_rate_kbps=config.target_rate_kbps, target_fer=config.target_fer)

    n0 = config.noise.noise_power_watts()
    p_prb = 10.0 ** ((config.scenario.tx_power_dbm - 30.0) / 10.0) / tdl.num_prbs
    others = [r for r in range(n_rsus) if r != middle]
    eye = np.eye(2)
    # interfering RSUs keep one random codeword per PRB for the whole drop,
    # so interference varies on the fading timescale in both antenna setups
    # and delayed CQI remains informative about it
    if nt == 2:
        intf_pick = intf_rng.integers(0, len(phy.CODEBOOK),
                                      size=(len(others), config.tdl.num_prbs))
        intf_cw = phy.CODEBOOK[intf_pick]                     # (nI, P, 2)

    delivered = {}
    elapsed = {}
    sinr_rows = []          # (vid, tti, sinr_db)
    middle_counts = []

    measured_idx = None
    vids = None
    lin_amp = None
    bank = None

    for tti in range(config.ttis_per_drop):
        if tti % config.assoc_interval_ms == 0:
            gains = large_scale_gain_db(scen.distances_m(),
                                        shadow.sample(scen.positions))
            scen = associate(scen, gains)
            measured_idx = np.nonzero(scen.serving == middle)[0]
            vids = scen.ids[measured_idx]
            middle_counts.append(len(vids))
            current = set(int(v) for v in vids)
            for v in sorted(set(sched.vehicles) - current):
                sched.remove_vehicle(v)
            for v in sorted(current - set(sched.vehicles)):
                sched.add_vehicle(v)
            lin_amp = np.sqrt(10.0 ** (gains[:, measured_idx] / 10.0))
            links = [(r, int(v)) for r in range(n_rsus) for v in vids]
            bank = FadingBank(fading, links, t0_s=tti * 1e-3, step_s=1e-3)
        else:
            bank.step()
        scen = advance_mobility(scen, 1e-3)
        sched.arrive_traffic(1.0)

        n_meas = len(vids)
        if n_meas == 0:
            continue
        h_all = bank.response().reshape(n_rsus, n_meas, nr, nt, tdl.num_prbs)
        h_all = h_all * lin_amp[:, :, None, None, None]

        # interference: every other RSU transmits on every PRB
        if nt == 2:
            g = np.einsum("ivrtp,ipt->ivrp", h_all[others], intf_cw)
        else:
            g = h_all[others, :, :, 0, :]                     # (nI, V, 2, P)
        gm = np.moveaxis(g, 2, -1)                            # (nI, V, P, 2)
        r_in = (p_prb * np.einsum("ivpr,ivps->vprs", gm, np.conj(gm))
                + n0 * eye)

        # feedback reports due this TTI become visible to the RSU
        while pending_due(sched, tti):
            pass

        if config.precoding:
            pmi = np.array([
                sched.vehicles[int(v)].report.precoder_index
                if sched.vehicles[int(v)].report is not None else 0
                for v in vids])
            h_des = np.einsum("vrtp,vt->vpr", h_all[middle], phy.CODEBOOK[pmi])
        else:
            h_des = np.moveaxis(h_all[middle, :, :, 0, :], 1, -1)  # (V, P, 2)
        true_sinr = phy.combine_sinr(h_des, r_in, config.receiver, p_prb)

        if tti % config.cqi_period_ms == 0:
            if config.precoding:
                cand = np.empty((len(phy.CODEBOOK), n_meas, tdl.num_prbs))
                for k, c in enumerate(phy.CODEBOOK):
                    h_k = np.einsum("vrtp,t->vpr", h_all[middle], c)
                    cand[k] = phy.lmmse_sinr_batch(h_k, r_in, p_prb)
                best = np.argmax(cand.mean(axis=2), axis=0)
                # CQI is conditioned on the recommended codeword so that the
                # report matches the precoder in force once it is applied;
                # outer-loop adaptation absorbs the selection bias
                report_sinr = cand[best, np.arange(n_meas)]
            else:
                best = np.zeros(n_meas, dtype=int)
                report_sinr = true_sinr
            for k, v in enumerate(vids):
                rep = l2s.compute_cqi(report_sinr[k], tti, fer_model,
                                      config.target_fer, int(best[k]))
                _report_queue(sched).append((tti + config.cqi_delay_ms, int(v), rep))
            # SINR statistics reflect what transmissions experience: the
            # wideband post-combining SINR under the precoder in use
            wideband = 10.0 * np.log10(np.maximum(true_sinr.mean(axis=1), 1e-30))
            sinr_rows.extend(zip(vids.tolist(), [tti] * n_meas, wideband.tolist()))

        decision = sched.schedule_tti(tti)
        if decision.grants:
            col = {int(v): k for k, v in enumerate(vids)}
            sinr_map = {g_.vehicle: true_sinr[col[g_.vehicle]]
                        for g_ in decision.grants}
            for vid, ack, bits in sched.transmit_and_ack(decision, sinr_map,
                                                         tti, mac_rng):
                if ack:
                    delivered[vid] = delivered.get(vid, 0) + bits
        for v in vids:
            elapsed[int(v)] = elapsed.get(int(v), 0) + 1

    keep = sorted(v for v, ms in elapsed.items() if ms >= config.min_measure_ms)
    keep_set = set(keep)
    thr = np.array([delivered.get(v, 0) / elapsed[v] for v in keep])
    sinr_rows = [row for row in sinr_rows if row[0] in keep_set]
    return DropResult(
        drop_index=drop_index,
        rsu=middle,
        vids=np.array(keep, dtype=int),
        thr_kbps=thr,
        outage=thr < config.outage_kbps,
        achieved=thr >= config.target_fraction * config.target_rate_kbps,
        sinr_vid=np.array([r[0] for r in sinr_rows], dtype=int),
        sinr_tti=np.array([r[1] for r in sinr_rows], dtype=int),
        sinr_db=np.array([r[2] for r in sinr_rows]),
        mean_vehicles_per_rsu=float(np.mean(middle_counts)),
    )


# The report queue lives on the scheduler object so run_drop stays a single
# pass; it is engine-owned plumbing, not MAC state.

def _report_queue(sched) -> list:
    if not hasattr(sched, "_pending_reports"):
        sched._pending_reports = []
    return sched._pending_reports


def pending_due(sched, tti) -> bool:
    queue = _report_queue(sched)
    for i, (due, vid, rep) in enumerate(queue):
        if due <= tti:
            sched.deliver_report(vid, rep)
            queue.pop(i)
            return True
    return False


def aggregate(drops, config: SimConfig, config_label="", receiver_label="") -> ResultsRow:
    """Pool per-vehicle throughput over drops into one results-table row."""
    if not drops:
        raise ValueError("aggregate needs at least one drop")
    thr = np.concatenate([d.thr_kbps for d in drops])
    if thr.size == 0:
        raise ValueError("no measured vehicles")
    return ResultsRow(
        config_label=config_label,
        receiver=receiver_label,
        target_prob=float(np.mean(thr >= config.target_fraction
                                  * config.target_rate_kbps)),
        cell_edge_kbps=float(np.percentile(thr, 5)),
        outage_frac=float(np.mean(thr < config.outage_kbps)),
        mean_vehicles_per_rsu=float(np.mean([d.mean_vehicles_per_rsu
                                             for d in drops])),
    )


def empirical_cdf(values):
    """Sorted sample values and their nondecreasing CDF levels."""
    x = np.sort(np.asarray(values, dtype=float))
    y = np.arange(1, len(x) + 1) / len(x)
    return x, y


def _fmt(x) -> str:
    return format(float(x), ".6g")


def write_sinr_csv(path, drops):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["drop", "rsu", "vehicle", "tti", "sinr_db"])
        for d in drops:
            for vid, tti, s in zip(d.sinr_vid, d.sinr_tti, d.sinr_db):
                w.writerow([d.drop_index, d.rsu, vid, tti, _fmt(s)])


def write_vehicle_summary_csv(path, drops):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["drop", "vehicle", "rsu", "mean_thr_kbps", "outage",
                    "achieved_target"])
        for d in drops:
            for vid, thr, out, ach in zip(d.vids, d.thr_kbps, d.outage,
                                          d.achieved):
                w.writerow([d.drop_index, vid, d.rsu, _fmt(thr), int(out),
                            int(ach)])


def write_results_table_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config_label", "receiver", "target_prob",
                    "cell_edge_kbps", "outage_frac", "mean_vehicles_per_rsu"])
        for r in rows:
            w.writerow([r.config_label, r.receiver, _fmt(r.target_prob),
                        _fmt(r.cell_edge_kbps), _fmt(r.outage_frac),
                        _fmt(r.mean_vehicles_per_rsu)])
