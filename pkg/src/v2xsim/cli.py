"""Command-line entry point: config parsing and experiment batches.

The config file is sectioned key-value text (INI syntax) with sections
``scenario``, ``channel``, ``phy``, ``l2s``, ``mac``, ``engine`` plus one
``[experiment:<label>]`` section per experiment.  Unknown sections or keys
are errors; missing keys take the paper defaults.
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from configparser import ConfigParser, Error as ConfigParserError
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import engine
from .channel import NoiseModel, TdlConfig
from .scenario import KMH_TO_MS, HighwayConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    label: str
    gap_min_m: float
    gap_max_m: float
    receiver: str
    precoding: bool
    overrides: dict = field(default_factory=dict)

    @property
    def config_label(self) -> str:
        return f"[{self.gap_min_m:g} {self.gap_max_m:g}]"

    @property
    def receiver_label(self) -> str:
        return self.receiver + ("+precoding" if self.precoding else "")


_SCHEMA = {
    "scenario": {"lanes", "lane_width_m", "rsu_spacing_m", "rsu_offset_m",
                 "num_rsus", "speed_kmh", "gap_min_m", "gap_max_m",
                 "tx_power_dbm"},
    "channel": {"carrier_ghz", "shadowing_sigma_db", "decorr_m", "num_taps",
                "delay_spread_us", "tap_decay_db", "num_sinusoids",
                "noise_figure_db", "tx_corr"},
    "phy": {"receiver", "precoding", "tx_antennas", "rx_antennas"},
    "l2s": {"target_fer", "tables_csv"},
    "mac": {"pf_horizon_tti", "harq_max_tx", "harq_rtt_ms",
            "harq_processes", "cqi_period_ms", "cqi_delay_ms",
            "target_rate_kbps"},
    "engine": {"num_drops", "ttis_per_drop", "master_seed",
               "assoc_interval_ms", "min_measure_ms"},
}
_EXPERIMENT_KEYS = {"gap_min_m", "gap_max_m", "receiver", "precoding"}


def _bool(value, key):
    v = value.strip().lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"key {key!r}: expected on/off, got {value!r}")


def _apply(config: engine.SimConfig, section, key, value) -> engine.SimConfig:
    """Set one config key from its string value; raises naming the key."""
    name = f"{section}.{key}"
    try:
        if section == "scenario":
            scen = config.scenario
            mapping = {
                "lanes": ("num_lanes", int), "lane_width_m": ("lane_width", float),
                "rsu_spacing_m": ("rsu_spacing", float),
                "rsu_offset_m": ("rsu_offset", float),
                "num_rsus": ("num_rsus", int),
                "gap_min_m": ("min_gap", float), "gap_max_m": ("max_gap", float),
                "tx_power_dbm": ("tx_power_dbm", float),
            }
            if key == "speed_kmh":
                return replace(config, scenario=replace(scen, speed=float(value) * KMH_TO_MS))
            attr, cast = mapping[key]
            return replace(config, scenario=replace(scen, **{attr: cast(value)}))
        if section == "channel":
            if key == "shadowing_sigma_db":
                return replace(config, shadowing_sigma_db=float(value))
            if key == "decorr_m":
                return replace(config, decorr_m=float(value))
            if key == "noise_figure_db":
                return replace(config, noise=replace(config.noise,
                                                     noise_figure_db=float(value)))
            if key == "tx_corr":
                return replace(config, tx_corr=float(value))
            mapping = {"carrier_ghz": ("carrier_ghz", float),
                       "num_taps": ("num_taps", int),
                       "delay_spread_us": ("delay_spread_us", float),
                       "tap_decay_db": ("tap_decay_db", float),
                       "num_sinusoids": ("num_sinusoids", int)}
            attr, cast = mapping[key]
            return replace(config, tdl=replace(config.tdl, **{attr: cast(value)}))
        if section == "phy":
            if key == "receiver":
                return replace(config, receiver=value.strip().lower())
            if key == "precoding":
                return replace(config, precoding=_bool(value, name))
            if key == "tx_antennas":
                return replace(config, scenario=replace(config.scenario,
                                                        num_tx_antennas=int(value)))
            return replace(config, scenario=replace(config.scenario,
                                                    num_rx_antennas=int(value)))
        if section == "l2s":
            if key == "target_fer":
                return replace(config, target_fer=float(value))
            return replace(config, mcs_fer_csv=value.strip() or None)
        if section == "mac":
            mapping = {"pf_horizon_tti": "pf_horizon_tti",
                       "harq_max_tx": "harq_max_tx",
                       "harq_rtt_ms": "harq_rtt_ms",
                       "harq_processes": "num_harq_processes",
                       "cqi_period_ms": "cqi_period_ms",
                       "cqi_delay_ms": "cqi_delay_ms"}
            if key == "target_rate_kbps":
                return replace(config, target_rate_kbps=float(value))
            return replace(config, **{mapping[key]: int(value)})
        if section == "engine":
            mapping = {"num_drops": ("num_drops", int),
                       "ttis_per_drop": ("ttis_per_drop", int),
                       "master_seed": ("master_seed", int),
                       "assoc_interval_ms": ("assoc_interval_ms", int),
                       "min_measure_ms": ("min_measure_ms", float)}
            attr, cast = mapping[key]
            return replace(config, **{attr: cast(value)})
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid value for key {name!r}: {value!r}") from exc
    raise ConfigError(f"unknown section {section!r}")


def parse_config(path):
    """Read and validate a config file.

    Returns (base SimConfig, list of ExperimentSpec).  Unknown sections or
    keys are errors; an empty experiment list is an error.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except ConfigParserError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    config = engine.SimConfig()
    specs = []
    for section in parser.sections():
        if section.startswith("experiment:"):
            continue
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section {section!r}")
        for key, value in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section {section!r}")
            config = _apply(config, section, key, value)

    for section in parser.sections():
        if not section.startswith("experiment:"):
            continue
        label = section.split(":", 1)[1].strip()
        if not label:
            raise ConfigError("experiment label must not be empty")
        if any(s.label == label for s in specs):
            raise ConfigError(f"duplicate experiment label {label!r}")
        items = dict(parser.items(section))
        unknown = [k for k in items
                   if k not in _EXPERIMENT_KEYS and "." not in k]
        if unknown:
            raise ConfigError(f"unknown key {unknown[0]!r} in experiment {label!r}")
        overrides = {k: v for k, v in items.items() if "." in k}
        for dotted in overrides:
            sec, _, key = dotted.partition(".")
            if sec not in _SCHEMA or key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown override key {dotted!r} in "
                                  f"experiment {label!r}")
        spec = ExperimentSpec(
            label=label,
            gap_min_m=float(items.get("gap_min_m", config.scenario.min_gap)),
            gap_max_m=float(items.get("gap_max_m", config.scenario.max_gap)),
            receiver=items.get("receiver", config.receiver).strip().lower(),
            precoding=_bool(items.get("precoding", "on" if config.precoding else "off"),
                            f"{label}.precoding"),
            overrides=overrides,
        )
        if spec.gap_min_m > spec.gap_max_m:
            raise ConfigError(f"experiment {label!r}: gap_min_m exceeds gap_max_m")
        if spec.receiver not in ("mrc", "lmmse"):
            raise ConfigError(f"experiment {label!r}: unknown receiver "
                              f"{spec.receiver!r}")
        specs.append(spec)

    if not specs:
        raise ConfigError("no experiments defined")
    return config, specs


def experiment_config(base: engine.SimConfig, spec: ExperimentSpec) -> engine.SimConfig:
    """Base config with the experiment's density, receiver and overrides."""
    config = replace(base, receiver=spec.receiver, precoding=spec.precoding,
                     scenario=replace(base.scenario,
                                      min_gap=spec.gap_min_m,
                                      max_gap=spec.gap_max_m,
                                      num_tx_antennas=2 if spec.precoding else 1))
    for dotted, value in spec.overrides.items():
        sec, _, key = dotted.partition(".")
        config = _apply(config, sec, key, value)
    return config.validate()


def _run_drop_task(args):
    label, config, drop_index = args
    return label, drop_index, engine.run_drop(config, drop_index)


def run_batch(base, specs, output_dir, threads=1) -> int:
    """Run every experiment, write its CSVs, print a summary table."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    configs = {s.label: experiment_config(base, s) for s in specs}
    tasks = [(s.label, configs[s.label], d)
             for s in specs for d in range(configs[s.label].num_drops)]
    results = {}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for label, drop, res in pool.map(_run_drop_task, tasks):
                results[(label, drop)] = res
    else:
        for task in tasks:
            label, drop, res = _run_drop_task(task)
            results[(label, drop)] = res

    rows, failures = [], []
    for spec in specs:
        config = configs[spec.label]
        drops = [results[(spec.label, d)] for d in range(config.num_drops)]
        exp_dir = output_dir / spec.label
        try:
            exp_dir.mkdir(exist_ok=True)
            engine.write_sinr_csv(exp_dir / "sinr_samples.csv", drops)
            engine.write_vehicle_summary_csv(exp_dir / "vehicle_summary.csv",
                                             drops)
            rows.append(engine.aggregate(drops, config, spec.config_label,
                                         spec.receiver_label))
        except OSError as exc:
            failures.append(f"{spec.label}: {exc}")
    engine.write_results_table_csv(output_dir / "results_table.csv", rows)
    _print_summary(rows)
    if failures:
        for f in failures:
            print(f"error: {f}", file=sys.stderr)
        return 1
    return 0


def _print_summary(rows):
    print(f"{'config':>12} {'receiver':>18} {'target_prob':>12} "
          f"{'cell_edge_kbps':>15} {'outage_frac':>12} {'veh/rsu':>10}")
    for r in rows:
        print(f"{r.config_label:>12} {r.receiver:>18} "
              f"{format(r.target_prob, '.6g'):>12} "
              f"{format(r.cell_edge_kbps, '.6g'):>15} "
              f"{format(r.outage_frac, '.6g'):>12} "
              f"{format(r.mean_vehicles_per_rsu, '.6g'):>10}")


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2xsim",
        description="System-level simulator of an LTE-A roadside-unit network "
                    "serving highway vehicles in the downlink.")
    parser.add_argument("--config", required=True,
                        help="path to the sectioned key-value config file")
    parser.add_argument("--output-dir", default=None,
                        help="output directory (default: $V2XSIM_OUTPUT or ./results)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override engine.master_seed")
    parser.add_argument("--drops", type=int, default=None,
                        help="override engine.num_drops")
    parser.add_argument("--ttis", type=int, default=None,
                        help="override engine.ttis_per_drop")
    parser.add_argument("--experiments", default=None,
                        help="comma-separated experiment labels to run")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes across drops (1 = serial)")
    return parser


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        base, specs = parse_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        base = replace(base, master_seed=args.seed)
    if args.drops is not None:
        base = replace(base, num_drops=args.drops)
    if args.ttis is not None:
        base = replace(base, ttis_per_drop=args.ttis)
    if args.experiments is not None:
        wanted = [w.strip() for w in args.experiments.split(",") if w.strip()]
        known = {s.label for s in specs}
        missing = [w for w in wanted if w not in known]
        if missing:
            print(f"error: unknown experiment(s): {', '.join(missing)}",
                  file=sys.stderr)
            return 2
        specs = [s for s in specs if s.label in wanted]
    output_dir = args.output_dir or os.environ.get("V2XSIM_OUTPUT", "results")
    try:
        return run_batch(base, specs, output_dir, threads=max(args.threads, 1))
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
