"""System-level LTE-A V2I simulator: highway RSU network, downlink."""

from . import channel, cli, engine, l2s, mac, phy, scenario
from .engine import SimConfig, aggregate, run_drop
from .scenario import HighwayConfig

__all__ = [
    "channel", "cli", "engine", "l2s", "mac", "phy", "scenario",
    "SimConfig", "HighwayConfig", "run_drop", "aggregate",
]
