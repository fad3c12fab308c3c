"""Synthetic IIoT packet streams: regular benign sessions and bot flood traffic."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .detection import PACKET_COLUMNS, make_windows

# application -> (policy, sla, protocol, server, [(direction, mean length)], mean gap seconds)
APPS = {
    "modbus": ("ot-control", "gold", "tcp", "10.0.1.5:502",
               [("out", 12), ("in", 11), ("out", 12), ("in", 60)], 0.02),
    "opcua": ("ot-control", "gold", "tcp", "10.0.1.6:4840",
              [("out", 90), ("in", 420), ("out", 40)], 0.05),
    "mqtt": ("telemetry", "silver", "tcp", "10.0.2.9:1883",
             [("out", 180), ("in", 4), ("out", 180), ("in", 4)], 0.5),
    "http": ("it-general", "bronze", "tcp", "10.0.3.2:80",
             [("out", 350), ("in", 1460), ("in", 1460), ("in", 700), ("out", 52)], 0.01),
    "dns": ("it-general", "bronze", "udp", "10.0.0.53:53", [("out", 70), ("in", 140)], 0.004),
    "ntp": ("infra", "silver", "udp", "10.0.0.12:123", [("out", 76), ("in", 76)], 0.002),
}
APP_WEIGHTS = np.array([0.3, 0.15, 0.25, 0.15, 0.1, 0.05])
DEVICES = [f"192.168.7.{i}" for i in range(2, 18)]


def benign_packets(n: int, seed: int = 0, devices=DEVICES) -> pd.DataFrame:
    """``n`` packets from back-to-back application sessions.

    Each session repeats its application's request/response cycle 1-3 times, so
    packets inside a session are predictable and session starts are not.
    """
    rng = np.random.default_rng(seed)
    names = list(APPS)
    rows = []
    prev = None
    while len(rows) < n:
        w = APP_WEIGHTS.copy()
        if prev is not None:
            w[prev] *= 2.0
        a = int(rng.choice(len(names), p=w / w.sum()))
        prev = a
        app = names[a]
        policy, sla, proto, server, pattern, gap = APPS[app]
        dev = devices[int(rng.integers(len(devices)))]
        for _ in range(int(rng.integers(1, 4))):
            for direction, mean_len in pattern:
                length = max(1.0, rng.normal(mean_len, 0.05 * mean_len))
                rows.append((app, policy, direction, server, dev, proto, round(length, 1),
                             float(rng.exponential(gap)), sla))
    return pd.DataFrame(rows[:n], columns=list(PACKET_COLUMNS))


def attack_packets(n: int, seed: int = 0, victim: str = "10.0.1.5:502", bots: int = 200) -> pd.DataFrame:
    """Bot flood aimed at ``victim``: inbound bursts with irregular symbols and tiny gaps."""
    rng = np.random.default_rng(seed)
    kind = rng.choice(3, size=n, p=[0.5, 0.3, 0.2])
    app = np.array(["unknown", "http", "dns"], dtype=object)[kind]
    proto = np.array(["udp", "tcp", "udp"], dtype=object)[kind]
    length = np.where(kind == 0, rng.uniform(1, 1500, n), np.where(kind == 1, rng.uniform(40, 64, n),
                                                                   rng.uniform(500, 4000, n)))
    src = [f"172.16.{b // 250}.{b % 250}" for b in rng.integers(0, bots, n)]
    return pd.DataFrame({
        "application": app, "policy": "none", "direction": "in", "dest": victim, "source": src,
        "protocol": proto, "length": length.round(1), "inter_arrival": rng.exponential(1e-4, n),
        "sla": "bronze",
    }, columns=list(PACKET_COLUMNS))


def mixed_window(ts: int, attack_share: float, seed: int, victim: str = "10.0.1.5:502") -> pd.DataFrame:
    """Benign background with a ``attack_share`` fraction of packets replaced by flood packets."""
    rng = np.random.default_rng([seed, 7])
    base = benign_packets(ts, seed=int(rng.integers(2**31)))
    k = int(round(attack_share * ts))
    if k:
        pos = np.sort(rng.choice(ts, size=k, replace=False))
        atk = attack_packets(k, seed=int(rng.integers(2**31)), victim=victim)
        base.iloc[pos] = atk.to_numpy()
    return base


def benign_windows(count: int, ts: int = 100, seed: int = 0):
    return make_windows(benign_packets(count * ts, seed=seed), ts)
