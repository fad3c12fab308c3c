"""Synthetic flow records in the raw 49-column UNSW NB-15 layout.

Used when the real capture files are not available. Normal and attack flows
are drawn from per-category distributions loosely shaped after the published
dataset statistics (TTL signatures, byte volumes, connection counters); the
classes overlap and a small fraction of labels is flipped, so a good detector
tops out in the mid-to-high 90s rather than at 100%.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .dataset import RAW49

ATTACK_MIX = {
    "Generic": 0.42, "Exploits": 0.22, "Fuzzers": 0.12, "DoS": 0.08, "Reconnaissance": 0.09,
    "Analysis": 0.02, "Backdoor": 0.02, "Shellcode": 0.02, "Worms": 0.01,
}


def _choice(rng, options: dict, n):
    keys = list(options)
    p = np.array([options[k] for k in keys], dtype=float)
    return np.array(keys, dtype=object)[rng.choice(len(keys), size=n, p=p / p.sum())]


def _normal(rng, n):
    proto = _choice(rng, {"tcp": 0.74, "udp": 0.23, "arp": 0.015, "ospf": 0.01, "icmp": 0.005}, n)
    tcp = proto == "tcp"
    udp = proto == "udp"
    service = np.where(
        tcp, _choice(rng, {"-": 0.38, "http": 0.2, "ftp-data": 0.12, "smtp": 0.1, "ftp": 0.08,
                           "ssh": 0.08, "pop3": 0.02, "irc": 0.02}, n),
        np.where(udp, _choice(rng, {"dns": 0.7, "-": 0.27, "snmp": 0.02, "dhcp": 0.01}, n), "-"),
    )
    state = np.where(tcp, _choice(rng, {"FIN": 0.82, "CON": 0.14, "REQ": 0.03, "INT": 0.01}, n),
                     np.where(udp, _choice(rng, {"CON": 0.78, "INT": 0.22}, n), "INT"))
    sbytes = np.where(tcp, rng.lognormal(7.6, 1.6, n), rng.lognormal(4.7, 0.6, n))
    dbytes = np.where(tcp, rng.lognormal(8.8, 2.0, n), np.where(state == "INT", 0.0, rng.lognormal(5.0, 0.7, n)))
    sttl = np.where(rng.random(n) < 0.04, 254, np.where(rng.random(n) < 0.85, 31, 62))
    dttl = np.where(state == "INT", 0, np.where(rng.random(n) < 0.8, 29, 252))
    dur = np.where(tcp, rng.lognormal(-0.5, 1.6, n), rng.lognormal(-5.5, 1.2, n))
    ct_base = rng.poisson(3, n) + 1
    return dict(proto=proto, service=service, state=state, sbytes=sbytes, dbytes=dbytes,
                sttl=sttl, dttl=dttl, dur=dur, ct=ct_base)


def _attack(rng, n):
    cat = _choice(rng, ATTACK_MIX, n)
    generic = cat == "Generic"
    recon = cat == "Reconnaissance"
    proto = np.where(generic, "udp", _choice(rng, {"tcp": 0.6, "udp": 0.25, "unas": 0.08, "sctp": 0.04,
                                                   "ospf": 0.03}, n))
    tcp = proto == "tcp"
    service = np.where(generic, "dns", np.where(
        tcp, _choice(rng, {"-": 0.5, "http": 0.35, "ftp": 0.06, "smtp": 0.05, "pop3": 0.04}, n), "-"))
    state = np.where(tcp, _choice(rng, {"FIN": 0.6, "INT": 0.25, "REQ": 0.1, "CON": 0.05}, n),
                     _choice(rng, {"INT": 0.9, "CON": 0.1}, n))
    sbytes = np.where(generic, rng.normal(114, 8, n).clip(60),
                      np.where(recon, rng.lognormal(5.3, 0.8, n), rng.lognormal(7.2, 1.4, n)))
    dbytes = np.where(state == "INT", 0.0, rng.lognormal(6.4, 1.8, n))
    stealthy = rng.random(n) < 0.22
    sttl = np.where(stealthy, np.where(rng.random(n) < 0.5, 62, 31), 254)
    dttl = np.where(state == "INT", 0, np.where(stealthy, 29, 252))
    dur = np.where(generic | recon, rng.exponential(2e-5, n), rng.lognormal(-1.0, 1.8, n))
    ct = rng.poisson(np.where(generic, 18, 6), n) + 1
    return dict(proto=proto, service=service, state=state, sbytes=sbytes, dbytes=dbytes,
                sttl=sttl, dttl=dttl, dur=dur, ct=ct, cat=cat)


def generate(n: int, attack_fraction: float = 0.35, label_noise: float = 0.015, seed: int = 0) -> pd.DataFrame:
    """Return ``n`` synthetic flows as a DataFrame with the raw 49 columns."""
    rng = np.random.default_rng(seed)
    label = (rng.random(n) < attack_fraction).astype(np.int64)
    na, nn = int(label.sum()), int(n - label.sum())
    parts = {0: _normal(rng, nn), 1: _attack(rng, na)}
    cols = {}
    for key in ("proto", "service", "state", "sbytes", "dbytes", "sttl", "dttl", "dur", "ct"):
        arr = np.empty(n, dtype=object if key in ("proto", "service", "state") else float)
        arr[label == 0] = parts[0][key]
        arr[label == 1] = parts[1][key]
        cols[key] = arr
    cat = np.full(n, "", dtype=object)
    cat[label == 1] = parts[1]["cat"]

    sbytes, dbytes, dur = cols["sbytes"].round(), cols["dbytes"].round(), cols["dur"]
    spkts = np.maximum(1, np.round(sbytes / rng.uniform(80, 700, n)))
    dpkts = np.where(dbytes > 0, np.maximum(1, np.round(dbytes / rng.uniform(100, 1400, n))), 0)
    safe_dur = np.maximum(dur, 1e-6)
    tcp = cols["proto"] == "tcp"
    ct = cols["ct"]
    stime = 1421927414 + np.cumsum(rng.exponential(0.05, n)).astype(np.int64)
    src_host = np.where(label == 1, "175.45.176.", "59.166.0.")
    srcip = [f"{p}{h}" for p, h in zip(src_host, rng.integers(0, 10, n))]
    dstip = [f"149.171.126.{h}" for h in rng.integers(0, 20, n)]

    df = pd.DataFrame({
        "srcip": srcip,
        "sport": rng.integers(1024, 65535, n),
        "dstip": dstip,
        "dsport": _choice(rng, {"80": 0.3, "53": 0.3, "21": 0.05, "25": 0.05, "22": 0.05, "111": 0.05,
                                "0": 0.2}, n),
        "proto": cols["proto"],
        "state": cols["state"],
        "dur": dur.round(6),
        "sbytes": sbytes.astype(np.int64),
        "dbytes": dbytes.astype(np.int64),
        "sttl": cols["sttl"].astype(np.int64),
        "dttl": cols["dttl"].astype(np.int64),
        "sloss": np.where(tcp, rng.poisson(spkts * 0.02), 0),
        "dloss": np.where(tcp, rng.poisson(dpkts * 0.02), 0),
        "service": cols["service"],
        "sload": (sbytes * 8 / safe_dur).round(2),
        "dload": (dbytes * 8 / safe_dur).round(2),
        "spkts": spkts.astype(np.int64),
        "dpkts": dpkts.astype(np.int64),
        "swin": np.where(tcp, 255, 0),
        "dwin": np.where(tcp & (dbytes > 0), 255, 0),
        "stcpb": np.where(tcp, rng.integers(0, 2**32, n), 0),
        "dtcpb": np.where(tcp & (dbytes > 0), rng.integers(0, 2**32, n), 0),
        "smeansz": np.round(sbytes / spkts).astype(np.int64),
        "dmeansz": np.where(dpkts > 0, np.round(dbytes / np.maximum(dpkts, 1)), 0).astype(np.int64),
        "trans_depth": np.where(cols["service"] == "http", rng.integers(0, 3, n), 0),
        "res_bdy_len": np.where(cols["service"] == "http", rng.integers(0, 20000, n), 0),
        "sjit": (rng.exponential(1, n) * safe_dur * 1000 / spkts).round(3),
        "djit": (rng.exponential(1, n) * safe_dur * 1000 / np.maximum(dpkts, 1)).round(3),
        "stime": stime,
        "ltime": stime + np.ceil(dur).astype(np.int64),
        "sintpkt": (safe_dur * 1000 / spkts).round(3),
        "dintpkt": (safe_dur * 1000 / np.maximum(dpkts, 1)).round(3),
        "tcprtt": np.where(tcp, rng.exponential(0.05, n), 0).round(6),
        "synack": np.where(tcp, rng.exponential(0.03, n), 0).round(6),
        "ackdat": np.where(tcp, rng.exponential(0.02, n), 0).round(6),
        "is_sm_ips_ports": (rng.random(n) < 0.002).astype(np.int64),
        "ct_state_ttl": np.where(cols["sttl"] == 254, 2, np.where(cols["sttl"] == 62, 1, 0)),
        "ct_flw_http_mthd": np.where(cols["service"] == "http", rng.integers(1, 4, n), 0),
        "is_ftp_login": np.where(cols["service"] == "ftp", rng.integers(0, 2, n), 0),
        "ct_ftp_cmd": np.where(cols["service"] == "ftp", rng.integers(0, 3, n), 0),
        "ct_srv_src": ct.astype(np.int64),
        "ct_srv_dst": (ct + rng.integers(0, 3, n)).astype(np.int64),
        "ct_dst_ltm": np.maximum(1, ct - rng.integers(0, 3, n)).astype(np.int64),
        "ct_src_ltm": np.maximum(1, ct - rng.integers(0, 3, n)).astype(np.int64),
        "ct_src_dport_ltm": np.maximum(1, ct - rng.integers(0, 4, n)).astype(np.int64),
        "ct_dst_sport_ltm": np.maximum(1, (ct // 2) - rng.integers(0, 2, n)).astype(np.int64),
        "ct_dst_src_ltm": np.maximum(1, ct - rng.integers(0, 3, n)).astype(np.int64),
        "attack_cat": cat,
        "label": label,
    })
    flip = rng.random(n) < label_noise
    df.loc[flip, "label"] = 1 - df.loc[flip, "label"]
    assert tuple(df.columns) == RAW49.columns
    return df


def write_csv(path, n: int, seed: int = 0, header: bool = True, **kw) -> None:
    generate(n, seed=seed, **kw).to_csv(path, index=False, header=header)
