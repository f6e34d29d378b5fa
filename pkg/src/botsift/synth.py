"""Deterministic synthetic NetFlow generator.

Produces captures in the same CSV schema the ingest stage consumes, so
the whole pipeline can be exercised at desk scale. Background traffic
uses heavy-tailed durations and byte counts over many sources; botnet
sources follow a behavior profile (port-scan bursts or fixed-port
beaconing), optionally diluted with background-looking flows that keep
the botnet label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields as dataclass_fields
from datetime import datetime, timedelta

import numpy as np

from .flows import FlowRecord, FlowTable

BASE_TIME = datetime(2011, 8, 10, 9, 0, 0)

BEHAVIORS = ("port-scan", "beacon")

COMMON_DPORTS = ("80", "443", "53", "25", "110", "143", "123", "22",
                 "8080", "3389")
DPORT_WEIGHTS = (0.30, 0.22, 0.18, 0.06, 0.04, 0.04, 0.05, 0.04,
                 0.04, 0.03)

TCP_STATES = ("FSPA_FSPA", "SPA_SPA", "FSA_FSA", "S_RA", "SR_A")
UDP_STATES = ("CON", "INT")


@dataclass
class SynthConfig:
    n_background_flows: int = 50_000
    n_background_sources: int = 150
    n_botnet_sources: int = 5
    botnet_flow_rate: float = 0.5       # flows per minute per source
    duration: float = 7200.0            # seconds of capture
    botnet_behavior: str = "port-scan"
    burst_size: int = 5                 # flows per port-scan burst
    noise: float = 0.0                  # botnet flows that mimic background
    seed: int = 42

    def __post_init__(self):
        if self.n_background_flows < 1 or self.n_background_sources < 1:
            raise ValueError("background flow/source counts must be >= 1")
        if self.n_botnet_sources < 0:
            raise ValueError("n_botnet_sources must be >= 0")
        if self.botnet_flow_rate <= 0:
            raise ValueError("botnet_flow_rate must be > 0")
        if self.duration < 120.0:
            raise ValueError("duration must cover one 120 s window")
        if self.botnet_behavior not in BEHAVIORS:
            raise ValueError(f"unknown behavior {self.botnet_behavior!r}")
        if self.burst_size < 1:
            raise ValueError("burst_size must be >= 1")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")


def load_synth_config(path) -> SynthConfig:
    with open(path) as fh:
        data = json.load(fh)
    known = {f.name for f in dataclass_fields(SynthConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError("unknown config keys: " + ", ".join(unknown))
    return SynthConfig(**data)


def _timestamp(offset: float) -> datetime:
    return BASE_TIME + timedelta(microseconds=round(offset * 1e6))


def _background_numeric(rng: np.random.Generator):
    """(dur, tot_bytes, src_bytes, tot_pkts) with lognormal durations
    and Pareto-tailed byte counts."""
    dur = min(float(rng.lognormal(mean=-3.0, sigma=2.0)), 3600.0)
    tot_bytes = int(64 + rng.pareto(1.5) * 200.0)
    tot_bytes = min(tot_bytes, 10_000_000)
    src_bytes = int(tot_bytes * rng.uniform(0.2, 0.8))
    tot_pkts = max(1, tot_bytes // 700 + int(rng.integers(1, 4)))
    return dur, tot_bytes, src_bytes, tot_pkts


BACKGROUND_LABELS = {"tcp": "flow=Background-TCP-Established",
                     "udp": "flow=Background-UDP-Established",
                     "icmp": "flow=Background-ICMP-Echo"}


def _background_flow(rng: np.random.Generator, offset: float,
                     src_addr: str, dst_pool,
                     label: str = None) -> FlowRecord:
    """One background-shaped flow; label defaults to the per-protocol
    background tag but can be overridden (botnet noise traffic)."""
    proto_draw = rng.random()
    dur, tot_bytes, src_bytes, tot_pkts = _background_numeric(rng)
    if proto_draw < 0.05:
        proto, sport, dport = "icmp", None, None
        state = "ECO"
        direction = "->"
    else:
        proto = "tcp" if proto_draw < 0.65 else "udp"
        sport = str(int(rng.integers(1024, 65536)))
        dport = COMMON_DPORTS[int(rng.choice(len(COMMON_DPORTS),
                                             p=DPORT_WEIGHTS))]
        state = (TCP_STATES[int(rng.integers(0, len(TCP_STATES)))]
                 if proto == "tcp"
                 else UDP_STATES[int(rng.integers(0, len(UDP_STATES)))])
        direction = "<->"
    return FlowRecord(
        start_time=_timestamp(offset), dur=dur, proto=proto,
        src_addr=src_addr, sport=sport, dir=direction,
        dst_addr=dst_pool[int(rng.integers(0, len(dst_pool)))],
        dport=dport, state=state, s_tos=0, d_tos=0,
        tot_pkts=int(tot_pkts), tot_bytes=int(tot_bytes),
        src_bytes=int(src_bytes),
        label=label if label is not None else BACKGROUND_LABELS[proto])


def _portscan_flows(rng: np.random.Generator, cfg: SynthConfig,
                    src_addr: str, target: str, label: str,
                    noise_label: str, dst_pool) -> list:
    """Bursts of short probe flows, each burst hitting many distinct
    destination ports within one stride slot."""
    total = max(1, round(cfg.botnet_flow_rate * cfg.duration / 60.0))
    n_noise = int(round(total * cfg.noise))
    n_scan = total - n_noise
    flows = []

    n_bursts = max(1, round(n_scan / cfg.burst_size))
    for _ in range(n_bursts):
        burst_start = float(rng.uniform(0.0, cfg.duration - 45.0))
        ports = rng.choice(np.arange(1, 10_000), size=cfg.burst_size,
                           replace=False)
        for j in range(cfg.burst_size):
            offset = burst_start + float(rng.uniform(0.0, 40.0))
            dur = float(rng.uniform(0.0004, 0.004))
            # bare SYN probes: tiny fixed-size single-packet flows
            tot_bytes = int(rng.integers(40, 61))
            flows.append(FlowRecord(
                start_time=_timestamp(offset), dur=dur, proto="tcp",
                src_addr=src_addr, sport=str(int(rng.integers(1024,
                                                              65536))),
                dir="->", dst_addr=target, dport=str(int(ports[j])),
                state="S_RA", s_tos=0, d_tos=0, tot_pkts=1,
                tot_bytes=tot_bytes, src_bytes=tot_bytes,
                label=label))
    for _ in range(n_noise):
        offset = float(rng.uniform(0.0, cfg.duration))
        flows.append(_background_flow(rng, offset, src_addr, dst_pool,
                                      noise_label))
    return flows


def _beacon_flows(rng: np.random.Generator, cfg: SynthConfig,
                  src_addr: str, target: str, label: str,
                  noise_label: str, dst_pool) -> list:
    """Fixed-port check-ins at a regular period with small jitter and
    near-constant durations."""
    total = max(1, round(cfg.botnet_flow_rate * cfg.duration / 60.0))
    n_noise = int(round(total * cfg.noise))
    n_beacon = total - n_noise
    period = cfg.duration / max(1, n_beacon)
    phase = float(rng.uniform(0.0, period))
    flows = []
    for i in range(n_beacon):
        offset = min(phase + i * period + float(rng.uniform(-1.0, 1.0)),
                     cfg.duration - 1.0)
        offset = max(0.0, offset)
        dur = max(0.0, float(rng.normal(2.0, 0.05)))
        tot_bytes = int(rng.integers(280, 330))
        flows.append(FlowRecord(
            start_time=_timestamp(offset), dur=dur, proto="tcp",
            src_addr=src_addr, sport=str(int(rng.integers(1024, 65536))),
            dir="<->", dst_addr=target, dport="6667", state="SPA_SPA",
            s_tos=0, d_tos=0, tot_pkts=6, tot_bytes=tot_bytes,
            src_bytes=tot_bytes // 2, label=label))
    for _ in range(n_noise):
        offset = float(rng.uniform(0.0, cfg.duration))
        flows.append(_background_flow(rng, offset, src_addr, dst_pool,
                                      noise_label))
    return flows


def generate_scenario(cfg: SynthConfig) -> FlowTable:
    """Deterministic synthetic capture; identical configs give
    byte-identical serialized output."""
    rng = np.random.default_rng(cfg.seed)

    dst_pool = [f"147.32.{84 + i // 250}.{i % 250 + 1}"
                for i in range(500)]
    background_sources = [f"10.0.{i // 250}.{i % 250 + 1}"
                          for i in range(cfg.n_background_sources)]
    # skewed activity so some sources dominate, as in real captures
    weights = 1.0 / np.arange(1, cfg.n_background_sources + 1) ** 0.7
    weights /= weights.sum()

    flows = []
    for _ in range(cfg.n_background_flows):
        offset = float(rng.uniform(0.0, cfg.duration))
        src = background_sources[int(rng.choice(cfg.n_background_sources,
                                                p=weights))]
        flows.append(_background_flow(rng, offset, src, dst_pool))

    scan_label = "flow=From-Botnet-Synth-V1-TCP-PortScan"
    beacon_label = "flow=From-Botnet-Synth-V1-TCP-CC-Beacon"
    noise_label = "flow=From-Botnet-Synth-V1-Background-Noise"
    for b in range(cfg.n_botnet_sources):
        src = f"10.10.10.{b + 1}"
        target = dst_pool[int(rng.integers(0, len(dst_pool)))]
        if cfg.botnet_behavior == "port-scan":
            flows.extend(_portscan_flows(rng, cfg, src, target,
                                         scan_label, noise_label,
                                         dst_pool))
        else:
            flows.extend(_beacon_flows(rng, cfg, src, target,
                                       beacon_label, noise_label,
                                       dst_pool))

    flows.sort(key=lambda r: (r.start_time, r.src_addr, r.dst_addr,
                              r.dport or "", r.sport or ""))
    return FlowTable(records=flows, source_path=None, parse_stats=None)
