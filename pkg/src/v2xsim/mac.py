"""Per-TTI RSU operation: traffic, buffer-gated proportional-fair scheduling,
MCS selection from delayed CQI, and HARQ with chase combining.

The constant-rate traffic model (128 kb/s per vehicle) feeds per-vehicle
buffers; a vehicle at or above its target rate has an empty buffer and yields
resources, which is how the rate-capped PF policy is realised.  Chase
combining is modelled as linear per-PRB SINR accumulation across
retransmissions of the same transport block.
"""

from dataclasses import dataclass, field

import numpy as np

from . import l2s

IDLE = -1


@dataclass
class HarqProcess:
    process_id: int
    state: str = "idle"              # idle | pending_retx
    tb_bits: int = 0
    mcs: int = 0
    num_prbs: int = 0
    tx_count: int = 0
    accumulated_sinr: np.ndarray | None = None
    ready_tti: int = 0


@dataclass
class Grant:
    vehicle: int
    prbs: np.ndarray
    mcs: int
    tb_bits: int
    harq_pid: int
    precoder_index: int
    is_retx: bool


@dataclass
class ScheduleDecision:
    prb_owner: np.ndarray            # (num_prbs,) vehicle id or IDLE
    grants: list


@dataclass
class VehicleLink:
    """Per-vehicle MAC state owned by one RSU scheduler."""
    vid: int
    buffer_bits: float = 0.0
    avg_rate: float = 1e-3           # bits/ms, floored to avoid blow-up
    report: l2s.CqiReport | None = None
    olla_db: float = 0.0             # outer-loop link adaptation offset
    processes: list = field(default_factory=list)
    arrived_bits: float = 0.0
    delivered_bits: float = 0.0
    dropped_tbs: int = 0

    def idle_process(self):
        for p in self.processes:
            if p.state == "idle":
                return p
        return None

    def in_flight_bits(self) -> float:
        return float(sum(p.tb_bits for p in self.processes if p.state != "idle"))


class RsuScheduler:
    """Downlink scheduler for one RSU (OFDMA, one TB per vehicle per TTI)."""

    def __init__(self, num_prbs=50, mcs_table=None, fer_model=None,
                 pf_horizon_tti=100, harq_max_tx=4, harq_rtt_ms=8,
                 num_harq_processes=8, target_rate_kbps=128.0, target_fer=0.1,
                 avg_rate_floor=1e-3, olla_step_db=0.5, olla_max_db=12.0):
        self.num_prbs = num_prbs
        self.mcs_table = mcs_table or l2s.McsTable.default()
        self.fer_model = fer_model or l2s.FerModel.default(self.mcs_table)
        self.pf_horizon = pf_horizon_tti
        self.harq_max_tx = harq_max_tx
        self.harq_rtt = harq_rtt_ms
        self.num_harq = num_harq_processes
        self.arrival_rate = target_rate_kbps  # kb/s == bits/ms
        self.target_fer = target_fer
        self.avg_floor = avg_rate_floor
        # outer-loop link adaptation: equilibrium first-transmission error
        # rate equals target_fer when ack/nack steps obey this ratio
        self.olla_up = olla_step_db
        self.olla_down = olla_step_db * target_fer / (1.0 - target_fer)
        self.olla_max = olla_max_db
        self.vehicles: dict[int, VehicleLink] = {}
        self._cqi_thr = self.fer_model.cqi_thresholds_db(target_fer)
        # per-PRB achievable bits at each CQI, CQI 0 -> 0
        bits = (l2s.SUBCARRIERS_PER_PRB * l2s.DATA_SYMBOLS_PER_TTI
                * self.mcs_table.efficiency)
        self._prb_bits = np.concatenate([[0.0], bits])

    # -- membership -------------------------------------------------------

    def add_vehicle(self, vid: int):
        if vid in self.vehicles:
            return
        link = VehicleLink(vid=vid, avg_rate=self.avg_floor)
        link.processes = [HarqProcess(i) for i in range(self.num_harq)]
        self.vehicles[vid] = link

    def remove_vehicle(self, vid: int):
        self.vehicles.pop(vid, None)

    # -- traffic and feedback --------------------------------------------

    def arrive_traffic(self, dt_ms: float):
        """Grow every buffer by the constant arrival rate."""
        if dt_ms < 0:
            raise ValueError("dt must be non-negative")
        bits = self.arrival_rate * dt_ms
        for link in self.vehicles.values():
            link.buffer_bits += bits
            link.arrived_bits += bits

    def deliver_report(self, vid: int, report: l2s.CqiReport):
        link = self.vehicles.get(vid)
        if link is not None:
            link.report = report

    # -- scheduling -------------------------------------------------------

    def schedule_tti(self, tti: int) -> ScheduleDecision:
        owner = np.full(self.num_prbs, IDLE, dtype=int)
        grants = []
        free = list(range(self.num_prbs))
        granted = set()

        # 1) HARQ retransmissions first: same PRB count and MCS, placed on
        #    the lowest free PRBs; deferred if the pool is too small.
        for vid in sorted(self.vehicles):
            link = self.vehicles[vid]
            pending = [p for p in link.processes
                       if p.state == "pending_retx" and p.ready_tti <= tti]
            if not pending or vid in granted:
                continue
            proc = min(pending, key=lambda p: (p.ready_tti, p.process_id))
            if proc.num_prbs > len(free):
                continue
            prbs = np.array(free[:proc.num_prbs])
            free = free[proc.num_prbs:]
            owner[prbs] = vid
            granted.add(vid)
            grants.append(Grant(vid, prbs, proc.mcs, proc.tb_bits,
                                proc.process_id,
                                link.report.precoder_index if link.report else 0,
                                is_retx=True))

        # 2) new transmissions: greedy PF over the remaining PRBs
        elig = [v for v in sorted(self.vehicles)
                if v not in granted
                and self.vehicles[v].buffer_bits > 0
                and self.vehicles[v].report is not None
                and self.vehicles[v].report.cqi.max() >= 1
                and self.vehicles[v].idle_process() is not None]
        new_grants = []
        if elig and free:
            # wideband link adaptation: at highway Doppler the per-PRB CQI
            # peaks have decorrelated by the time the report is usable, so
            # chasing them only inflates the error rate; the band average is
            # the reliable part of the report
            rate = np.array([self._prb_bits[self.vehicles[v].report.cqi].mean()
                             for v in elig])
            avg = np.array([max(self.vehicles[v].avg_rate, self.avg_floor)
                            for v in elig])
            # tiny additive term keeps PRBs busy even where a vehicle's CQI is 0
            metric = (rate + 1e-9) / avg
            buffers = np.array([self.vehicles[v].buffer_bits for v in elig])
            pledged = np.zeros(len(elig))
            active = np.ones(len(elig), dtype=bool)
            assigned = [[] for _ in elig]
            for prb in free:
                if not active.any():
                    break
                col = np.where(active, metric, -np.inf)
                k = int(np.argmax(col))
                assigned[k].append(prb)
                owner[prb] = elig[k]
                pledged[k] += max(rate[k], 1.0)
                if pledged[k] >= buffers[k]:
                    active[k] = False
            for k, vid in enumerate(elig):
                if not assigned[k]:
                    continue
                link = self.vehicles[vid]
                prbs = np.array(assigned[k])
                mcs = l2s.select_mcs(link.report.cqi, self.mcs_table,
                                     self.fer_model, self.target_fer,
                                     offset_db=link.olla_db)
                tb = min(l2s.tb_size(len(prbs), mcs, self.mcs_table),
                         int(link.buffer_bits))
                if tb <= 0:
                    owner[prbs] = IDLE
                    continue
                proc = link.idle_process()
                proc.state = "waiting_ack"
                proc.tb_bits = tb
                proc.mcs = mcs
                proc.num_prbs = len(prbs)
                proc.tx_count = 0
                proc.accumulated_sinr = np.zeros(len(prbs))
                link.buffer_bits -= tb
                new_grants.append(Grant(vid, prbs, mcs, tb, proc.process_id,
                                        link.report.precoder_index, is_retx=False))

        # 3) PF average update: exponentially smoothed new-TB bits per TTI
        served = {g.vehicle: g.tb_bits for g in new_grants}
        a = 1.0 - 1.0 / self.pf_horizon
        for vid in sorted(self.vehicles):
            link = self.vehicles[vid]
            link.avg_rate = max(a * link.avg_rate
                                + (1.0 / self.pf_horizon) * served.get(vid, 0),
                                self.avg_floor)

        grants.extend(new_grants)
        grants.sort(key=lambda g: g.vehicle)
        return ScheduleDecision(prb_owner=owner, grants=grants)

    # -- transmission -----------------------------------------------------

    def transmit_and_ack(self, decision: ScheduleDecision, sinr_by_vehicle,
                         tti: int, rng) -> list:
        """Draw frame outcomes against the FER curve and run the HARQ state
        machine.  ``sinr_by_vehicle`` maps vehicle id to the true per-PRB
        linear SINR (length num_prbs).  Returns (vehicle, ack, delivered_bits)
        tuples in vehicle order.
        """
        results = []
        for g in decision.grants:
            link = self.vehicles[g.vehicle]
            proc = link.processes[g.harq_pid]
            current = np.asarray(sinr_by_vehicle[g.vehicle])[g.prbs]
            combined = proc.accumulated_sinr + current
            gamma_eff = l2s.effective_sinr(combined, g.mcs, self.mcs_table)
            fer = l2s.frame_error_probability(gamma_eff, g.mcs, self.fer_model)
            proc.tx_count += 1
            ok = rng.random() >= fer
            if not g.is_retx:
                step = -self.olla_down if ok else self.olla_up
                link.olla_db = float(np.clip(link.olla_db + step,
                                             -self.olla_max, self.olla_max))
            if ok:
                link.delivered_bits += g.tb_bits
                _reset(proc)
                results.append((g.vehicle, True, g.tb_bits))
            else:
                if proc.tx_count >= self.harq_max_tx:
                    # TB dropped; its bits rejoin the buffer tail
                    link.buffer_bits += g.tb_bits
                    link.dropped_tbs += 1
                    _reset(proc)
                else:
                    proc.state = "pending_retx"
                    proc.ready_tti = tti + self.harq_rtt
                    proc.accumulated_sinr = combined
                results.append((g.vehicle, False, 0))
        return results

    # -- accounting -------------------------------------------------------

    def ledger(self, vid: int) -> float:
        """arrivals - delivered - buffered - in-flight (zero by construction;
        dropped TBs return their bits to the buffer)."""
        link = self.vehicles[vid]
        return (link.arrived_bits - link.delivered_bits - link.buffer_bits
                - link.in_flight_bits())


def _reset(proc: HarqProcess):
    proc.state = "idle"
    proc.tb_bits = 0
    proc.mcs = 0
    proc.num_prbs = 0
    proc.tx_count = 0
    proc.accumulated_sinr = None
    proc.ready_tti = 0
