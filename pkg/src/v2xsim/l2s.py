"""Link-to-system interface: MIESM effective SINR, FER model, CQI and TB size.

The mutual-information curves are BICM capacities for QPSK/16QAM/64QAM,
precomputed once by Gauss-Hermite quadrature on a 0.1 dB grid and linearly
interpolated.  Gray-mapped square QAM factors into two independent PAM
dimensions, so the quadrature is one-dimensional.
"""

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SUBCARRIERS_PER_PRB = 12
DATA_SYMBOLS_PER_TTI = 11  # 14 minus 3 control/reference symbols

# standard 15-level CQI efficiency ladder (QPSK / 16QAM / 64QAM)
_CQI_EFFICIENCY = np.array([
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758,
    1.4766, 1.9141, 2.4063,
    2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
])
_CQI_MOD_ORDER = np.array([2, 2, 2, 2, 2, 2, 4, 4, 4, 6, 6, 6, 6, 6, 6])


@dataclass(frozen=True)
class McsTable:
    mod_order: np.ndarray       # bits per symbol of the modulation
    code_rate: np.ndarray
    efficiency: np.ndarray      # mod_order * code_rate, strictly increasing

    def __post_init__(self):
        if len(self.efficiency) != len(self.mod_order):
            raise ValueError("inconsistent table lengths")
        if np.any(np.diff(self.efficiency) <= 0):
            raise ValueError("spectral efficiency must be strictly increasing")

    @property
    def num_mcs(self) -> int:
        return len(self.efficiency)

    @classmethod
    def default(cls) -> "McsTable":
        return cls(mod_order=_CQI_MOD_ORDER.copy(),
                   code_rate=_CQI_EFFICIENCY / _CQI_MOD_ORDER,
                   efficiency=_CQI_EFFICIENCY.copy())


@dataclass(frozen=True)
class FerModel:
    """Logistic FER curve per MCS: 1 / (1 + exp(slope * (g_dB - g50)))."""
    gamma50_db: np.ndarray
    slope_per_db: np.ndarray

    @classmethod
    def default(cls, mcs_table: McsTable, slope=2.0, offset_db=0.5) -> "FerModel":
        # midpoint 0.5 dB above the Shannon-gap threshold of each efficiency
        g50 = 10.0 * np.log10(2.0 ** mcs_table.efficiency - 1.0) + offset_db
        return cls(gamma50_db=g50,
                   slope_per_db=np.full(mcs_table.num_mcs, float(slope)))

    def fer_db(self, gamma_db, mcs_index):
        """FER at effective SINR in dB for a 1-based MCS index."""
        i = np.asarray(mcs_index) - 1
        x = self.slope_per_db[i] * (np.asarray(gamma_db) - self.gamma50_db[i])
        return 1.0 / (1.0 + np.exp(np.clip(x, -500, 500)))

    def cqi_thresholds_db(self, target_fer=0.1) -> np.ndarray:
        """Lowest SINR (dB) at which each MCS meets the FER target."""
        return self.gamma50_db + np.log(1.0 / target_fer - 1.0) / self.slope_per_db


def _pam_levels_labels(mod_order):
    """Per-dimension Gray-mapped PAM of a unit-energy square QAM."""
    m = int(2 ** (mod_order // 2))  # levels per dimension
    raw = np.arange(-(m - 1), m, 2, dtype=float)
    # normalise so the two dimensions together have unit symbol energy
    levels = raw / np.sqrt(2.0 * np.mean(raw ** 2))
    gray = np.array([g ^ (g >> 1) for g in range(m)])
    # bit labels ordered by amplitude (binary-reflected Gray code)
    nbits = mod_order // 2
    labels = ((gray[:, None] >> np.arange(nbits - 1, -1, -1)) & 1)
    return levels, labels


@lru_cache(maxsize=None)
def _bicm_mi_table(mod_order, snr_min_db=-20.0, snr_max_db=40.0, step_db=0.1,
                   n_nodes=48):
    """BICM mutual information (bits/symbol) on a dB grid, strictly increasing.

    Returns (snr_db_grid, mi) truncated to the strictly increasing prefix so
    the tabulated map is invertible.
    """
    levels, labels = _pam_levels_labels(mod_order)
    nodes, weights = np.polynomial.hermite.hermgauss(n_nodes)
    snr_db = np.arange(snr_min_db, snr_max_db + step_db / 2, step_db)
    snr = 10.0 ** (snr_db / 10.0)
    sigma = np.sqrt(0.5 / snr)                       # per-dimension noise std
    # y[g, x, k] = x + sqrt(2)*sigma*node_k
    y = levels[None, :, None] + np.sqrt(2.0) * sigma[:, None, None] * nodes[None, None, :]
    # log p(y | x') up to a common constant, [g, x, k, x']
    d2 = -(y[..., None] - levels[None, None, None, :]) ** 2 / (2.0 * sigma[:, None, None, None] ** 2)
    log_den = _logsumexp(d2, axis=-1)
    mi_bits = np.zeros_like(snr)
    nbits = labels.shape[1]
    for i in range(nbits):
        for b in (0, 1):
            sel = labels[:, i] == b
            log_num = _logsumexp(d2[..., sel], axis=-1)
            # E_n over x with label bit b: weights/sqrt(pi), mean over x in set
            loss = ((log_den - log_num)[:, sel, :] * weights[None, None, :]).sum(axis=-1) / np.sqrt(np.pi)
            mi_bits += (1.0 - loss.mean(axis=1) / np.log(2.0)) / 2.0
    mi = 2.0 * mi_bits  # two independent dimensions
    mi = np.clip(mi, 0.0, float(mod_order))
    # strictly increasing prefix keeps the inverse well defined
    keep = np.concatenate([[True], np.diff(mi) > 1e-12])
    cut = len(mi) if keep.all() else int(np.argmin(keep))
    return snr_db[:cut], mi[:cut]


def _logsumexp(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis) + np.log(np.exp(a - m).sum(axis=axis))


class MiCurve:
    """Invertible tabulated SINR(dB) <-> mutual information map per modulation."""

    def __init__(self, mod_order):
        self.mod_order = int(mod_order)
        self.snr_db, self.mi = _bicm_mi_table(self.mod_order)

    def forward(self, snr_db):
        return np.interp(snr_db, self.snr_db, self.mi)

    def inverse(self, mi):
        return np.interp(mi, self.mi, self.snr_db)


@lru_cache(maxsize=None)
def mi_curve(mod_order) -> MiCurve:
    return MiCurve(mod_order)


@dataclass(frozen=True)
class CqiReport:
    cqi: np.ndarray          # per-PRB CQI, 0 = out of range, 1..15 otherwise
    generated_tti: int
    precoder_index: int = 0


def effective_sinr(sinrs, mcs_index, mcs_table=None):
    """MIESM effective SINR (linear in, linear out) at a given MCS."""
    table = mcs_table or McsTable.default()
    s = np.asarray(sinrs, dtype=float)
    if s.size == 0:
        raise ValueError("empty allocation")
    curve = mi_curve(int(table.mod_order[mcs_index - 1]))
    with np.errstate(divide="ignore"):
        snr_db = 10.0 * np.log10(s)
    eff_db = curve.inverse(curve.forward(snr_db).mean())
    # the tabulated curve saturates at high SINR; keep the effective value
    # inside the allocation's range
    return float(np.clip(10.0 ** (eff_db / 10.0), s.min(), s.max()))


def frame_error_probability(gamma_eff, mcs_index, fer_model=None):
    """Logistic FER at a linear effective SINR."""
    model = fer_model or FerModel.default(McsTable.default())
    with np.errstate(divide="ignore"):
        gamma_db = 10.0 * np.log10(np.asarray(gamma_eff, dtype=float))
    return model.fer_db(gamma_db, mcs_index)


def compute_cqi(per_prb_sinr, tti=0, fer_model=None, target_fer=0.1,
                precoder_index=0) -> CqiReport:
    """Per-PRB CQI: highest MCS whose predicted FER at that SINR <= target."""
    model = fer_model or FerModel.default(McsTable.default())
    thr = model.cqi_thresholds_db(target_fer)
    with np.errstate(divide="ignore"):
        sinr_db = 10.0 * np.log10(np.asarray(per_prb_sinr, dtype=float))
    cqi = np.searchsorted(thr, sinr_db, side="right")
    return CqiReport(cqi=cqi.astype(int), generated_tti=int(tti),
                     precoder_index=int(precoder_index))


def sinr_db_from_cqi(cqi, fer_model=None, target_fer=0.1, floor_db=-30.0):
    """Representative SINR implied by a CQI vector (threshold of its MCS)."""
    model = fer_model or FerModel.default(McsTable.default())
    thr = model.cqi_thresholds_db(target_fer)
    c = np.asarray(cqi, dtype=int)
    out = np.full(c.shape, floor_db)
    valid = c >= 1
    out[valid] = thr[c[valid] - 1]
    return out


def select_mcs(cqi_values, mcs_table=None, fer_model=None, target_fer=0.1,
               offset_db=0.0):
    """Highest MCS with predicted FER <= target at the MIESM-effective SINR
    implied by the reported per-PRB CQIs; falls back to MCS 1.

    ``offset_db`` is subtracted from the implied SINRs before selection (used
    by outer-loop link adaptation to correct reporting bias).  The effective
    SINR depends on the MCS only through its modulation, so it is evaluated
    once per modulation order rather than once per MCS.
    """
    table = mcs_table or McsTable.default()
    model = fer_model or FerModel.default(table)
    sinr_db = sinr_db_from_cqi(cqi_values, model, target_fer) - offset_db
    thr = model.cqi_thresholds_db(target_fer)
    eff_db = {}
    for mod in np.unique(table.mod_order):
        curve = mi_curve(int(mod))
        eff_db[int(mod)] = curve.inverse(curve.forward(sinr_db).mean())
    ok = np.array([eff_db[int(table.mod_order[m - 1])] >= thr[m - 1]
                   for m in range(1, table.num_mcs + 1)])
    return int(np.nonzero(ok)[0][-1] + 1) if ok.any() else 1


def tb_size(num_prbs, mcs_index, mcs_table=None) -> int:
    """Transport block size in bits for an allocation at a given MCS."""
    if num_prbs < 1:
        raise ValueError("allocation must contain at least one PRB")
    table = mcs_table or McsTable.default()
    eff = table.efficiency[mcs_index - 1]
    return int(np.floor(num_prbs * SUBCARRIERS_PER_PRB * DATA_SYMBOLS_PER_TTI * eff))


def load_tables_csv(path):
    """Optional override: CSV columns cqi,mod_order,code_rate,gamma50_db,slope_per_db."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"cqi", "mod_order", "code_rate", "gamma50_db", "slope_per_db"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"table CSV must have columns {sorted(required)}")
        for row in reader:
            rows.append(row)
    rows.sort(key=lambda r: int(r["cqi"]))
    mod = np.array([int(r["mod_order"]) for r in rows])
    rate = np.array([float(r["code_rate"]) for r in rows])
    table = McsTable(mod_order=mod, code_rate=rate, efficiency=mod * rate)
    fer = FerModel(gamma50_db=np.array([float(r["gamma50_db"]) for r in rows]),
                   slope_per_db=np.array([float(r["slope_per_db"]) for r in rows]))
    return table, fer
