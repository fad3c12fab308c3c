"""Monte-Carlo mitigation-delay and system-accuracy simulation.

Delay: bots are drawn over three traffic patterns; each pattern has a per-flow
mitigation delay under the victim-centric and the attacker-centric model, and
the headline delay is the sum of count * delay. Flow emission jitter and the
defender's FIFO analysis queue are simulated as a secondary trace.

Accuracy: labelled traffic windows are observed at alliance defenders; benign
pass rate (BPR) and malicious drop rate (MDR) are averaged into the system
accuracy.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import kernels
from .economics import mitigation_time
from .traffic import benign_packets, mixed_window
from .detection import FlowWindow, make_windows

PATTERNS = ("pattern-1", "pattern-2", "pattern-3")
VICTIM_DELAYS_MS = (1900.0, 2800.0, 4400.0)
ATTACKER_DELAYS_MS = (600.0, 800.0, 1200.0)
Z95 = 1.959963984540054


@dataclass(frozen=True)
class AttackScenario:
    bot_count: int = 1000
    mix: tuple = (1 / 3, 1 / 3, 1 / 3)
    intervals: tuple = (5.0, 10.0, 15.0)
    analysis_time: float = 7.0
    victim_delays: tuple = VICTIM_DELAYS_MS
    attacker_delays: tuple = ATTACKER_DELAYS_MS
    delay_model: str = "victim"
    unit: float = 1e-3  # delay table unit -> seconds
    jitter: float = 0.2
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if abs(sum(self.mix) - 1.0) > 1e-9 or min(self.mix) < 0:
            raise ValueError("pattern mix must be non-negative and sum to 1")
        if len(self.mix) != 3 or len(self.intervals) != 3:
            raise ValueError("three traffic patterns expected")
        if min(self.intervals) <= 0 or self.analysis_time <= 0:
            raise ValueError("intervals and analysis time must be positive")
        if min(self.victim_delays + self.attacker_delays) < 0:
            raise ValueError("delays must be non-negative")
        if self.delay_model not in ("victim", "attacker"):
            raise ValueError("delay_model is 'victim' or 'attacker'")
        if self.trials < 1 or self.bot_count < 0:
            raise ValueError("need trials >= 1 and bot_count >= 0")
        if not 0 <= self.jitter < 1:
            raise ValueError("jitter must lie in [0, 1)")

    @property
    def delays(self) -> tuple:
        return self.victim_delays if self.delay_model == "victim" else self.attacker_delays

    def expected_delay(self, model: str | None = None) -> float:
        d = self.victim_delays if (model or self.delay_model) == "victim" else self.attacker_delays
        return self.bot_count * self.unit * sum(m * t for m, t in zip(self.mix, d))

    def closed_form_ratio(self) -> float:
        num = sum(m * t for m, t in zip(self.mix, self.attacker_delays))
        den = sum(m * t for m, t in zip(self.mix, self.victim_delays))
        return num / den

    def with_(self, **kw) -> "AttackScenario":
        d = asdict(self)
        d.update(kw)
        return AttackScenario(**d)


@dataclass
class MitigationReport:
    mean_delay: float | None = None
    stdev_delay: float | None = None
    ci_half_width: float | None = None
    per_1000_bots: float | None = None
    bpr: float | None = None
    mdr: float | None = None
    system_accuracy: float | None = None
    traces: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k != "traces"}


def system_accuracy(bpr: float, mdr: float) -> float:
    return (bpr + mdr) / 2.0


def _trial_rng(seed: int, k: int):
    return np.random.default_rng([seed, k])


def _trial(sc: AttackScenario, k: int):
    rng = _trial_rng(sc.seed, k)
    counts = rng.multinomial(sc.bot_count, sc.mix) if sc.bot_count else np.zeros(3, dtype=np.int64)
    victim = mitigation_time(zip(counts.tolist(), (t * sc.unit for t in sc.victim_delays)))
    attacker = mitigation_time(zip(counts.tolist(), (t * sc.unit for t in sc.attacker_delays)))
    nominal = np.repeat(np.asarray(sc.intervals, dtype=float), counts)
    arrivals = np.sort(nominal * rng.uniform(1 - sc.jitter, 1 + sc.jitter, nominal.size))
    if arrivals.size:
        sojourn = kernels.fifo_sojourn(arrivals, sc.analysis_time)
        queue_total, queue_max = float(sojourn.sum()), float(sojourn.max())
    else:
        queue_total = queue_max = 0.0
    return counts, victim, attacker, queue_total, queue_max


def _stats(x: np.ndarray):
    n = len(x)
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    return mean, sd, Z95 * sd / math.sqrt(n)


def _run(sc: AttackScenario):
    rows = [_trial(sc, k) for k in range(sc.trials)]
    counts = np.array([r[0] for r in rows])
    return (counts, np.array([r[1] for r in rows]), np.array([r[2] for r in rows]),
            np.array([r[3] for r in rows]), np.array([r[4] for r in rows]))


def run_delay_simulation(scenario: AttackScenario) -> MitigationReport:
    """Monte-Carlo total mitigation delay (seconds) under ``scenario.delay_model``."""
    counts, victim, attacker, qtot, qmax = _run(scenario)
    delays = victim if scenario.delay_model == "victim" else attacker
    mean, sd, hw = _stats(delays)
    per_k = mean / scenario.bot_count * 1000 if scenario.bot_count else 0.0
    return MitigationReport(
        mean, sd, hw, per_k,
        traces={"delay": delays, "counts": counts, "queue_total": qtot, "queue_max": qmax},
        info={"delay_model": scenario.delay_model, "expected": scenario.expected_delay(),
              "trials": scenario.trials, "bot_count": scenario.bot_count,
              "queue_total_mean": float(qtot.mean()), "queue_max_mean": float(qmax.mean()),
              "backend": kernels.BACKEND},
    )


@dataclass
class DelayComparison:
    victim: MitigationReport
    attacker: MitigationReport
    ratio_mean: float
    ratio_ci: float
    ratio_of_means: float
    closed_form: float

    def summary(self) -> dict:
        return {
            "victim_mean_s": self.victim.mean_delay, "attacker_mean_s": self.attacker.mean_delay,
            "victim_per_1000": self.victim.per_1000_bots, "attacker_per_1000": self.attacker.per_1000_bots,
            "ratio_mean": self.ratio_mean, "ratio_ci95": self.ratio_ci,
            "ratio_of_means": self.ratio_of_means, "closed_form_ratio": self.closed_form,
        }


def compare_delay_models(scenario: AttackScenario) -> DelayComparison:
    """Paired trials: identical bot draws priced under both delay tables."""
    v = run_delay_simulation(scenario.with_(delay_model="victim"))
    a = run_delay_simulation(scenario.with_(delay_model="attacker"))
    if scenario.bot_count == 0:
        return DelayComparison(v, a, float("nan"), float("nan"), float("nan"), scenario.closed_form_ratio())
    ratios = a.traces["delay"] / v.traces["delay"]
    rm, _, rci = _stats(ratios)
    return DelayComparison(v, a, rm, rci, a.mean_delay / v.mean_delay, scenario.closed_form_ratio())


def delay_curve(scenario: AttackScenario, bot_counts) -> list[tuple[int, float, float]]:
    """(bots, victim mean, attacker mean) per population, for the delay-vs-bots plot."""
    out = []
    for n in bot_counts:
        c = compare_delay_models(scenario.with_(bot_count=int(n)))
        out.append((int(n), c.victim.mean_delay, c.attacker.mean_delay))
    return out


# -- system accuracy -----------------------------------------------------------------


@dataclass
class TrafficWindow:
    window: FlowWindow
    malicious: bool
    observer: int
    victim: int
    slot: int


@dataclass(frozen=True)
class TrafficSpec:
    defenders: int = 4
    slots: int = 50
    benign_per_slot: int = 4
    attack_prob: float = 0.5
    attack_windows: int = 4
    nonlocal_share: float = 0.5
    attack_share: float = 0.5
    window_size: int = 100
    seed: int = 0


def mixed_traffic(spec: TrafficSpec = TrafficSpec()) -> list[TrafficWindow]:
    """Benign and flood windows across defenders and time slots.

    Every victim gets ``benign_per_slot`` benign windows per slot from its own
    users. With probability ``attack_prob`` a victim is attacked in a slot by
    ``attack_windows`` malicious windows; each one is observed at the victim's
    own defender, or, with probability ``nonlocal_share``, at another defender
    whose network hosts the bots.
    """
    rng = np.random.default_rng([spec.seed, 5])
    out, wid = [], 0
    victims = [f"10.{d}.1.5:502" for d in range(spec.defenders)]
    benign_needed = spec.defenders * spec.slots * spec.benign_per_slot
    benign = make_windows(benign_packets(benign_needed * spec.window_size, seed=spec.seed + 1), spec.window_size)
    b = 0
    for slot in range(spec.slots):
        for v in range(spec.defenders):
            for _ in range(spec.benign_per_slot):
                w = benign[b]
                b += 1
                w.window_id = wid
                out.append(TrafficWindow(w, False, v, v, slot))
                wid += 1
            if rng.random() < spec.attack_prob:
                for _ in range(spec.attack_windows):
                    if spec.defenders > 1 and rng.random() < spec.nonlocal_share:
                        obs = int(rng.choice([d for d in range(spec.defenders) if d != v]))
                    else:
                        obs = v
                    pk = mixed_window(spec.window_size, spec.attack_share, int(rng.integers(2**31)), victims[v])
                    out.append(TrafficWindow(FlowWindow(pk, wid, (0.0, 0.0), spec.window_size), True, obs, v, slot))
                    wid += 1
    return out


@dataclass(frozen=True)
class Defense:
    mode: str = "joint"  # or "individual"
    placement: str = "attacker"  # or "victim"
    capacity: float = 1.0  # unmitigated load that exhausts a victim for one slot
    edge_load: float = 0.15  # residual load of a flow dropped at the victim edge

    def __post_init__(self):
        if self.mode not in ("joint", "individual"):
            raise ValueError("mode is 'joint' or 'individual'")
        if self.placement not in ("attacker", "victim"):
            raise ValueError("placement is 'attacker' or 'victim'")


def _verdicts(detector, windows) -> list[bool]:
    if hasattr(detector, "classify_many"):
        return [v.anomaly for v in detector.classify_many(windows)]
    return [bool(x) for x in detector(windows)]


def run_accuracy_simulation(traffic, defense: Defense, detector, verdicts=None) -> MitigationReport:
    """BPR / MDR / system accuracy for one defense configuration.

    ``detector`` is a ``Detector`` with a baseline, or a callable mapping a list
    of ``FlowWindow`` to anomaly flags. Precomputed ``verdicts`` skip scoring.

    A malicious window is inspectable in joint mode, or in individual mode only
    when its victim is the observing defender's own asset. Inspected windows the
    detector flags are dropped. A victim whose unmitigated load in a slot reaches
    ``capacity`` is exhausted and its benign windows in that slot are lost;
    flows dropped at the victim edge still add ``edge_load``.
    """
    if verdicts is None:
        verdicts = _verdicts(detector, [t.window for t in traffic])
    dropped = []
    for t, flag in zip(traffic, verdicts):
        inspect = defense.mode == "joint" or t.victim == t.observer
        dropped.append(bool(flag) and inspect)

    load = {}
    for t, d in zip(traffic, dropped):
        if not t.malicious:
            continue
        key = (t.victim, t.slot)
        if not d:
            load[key] = load.get(key, 0.0) + 1.0
        elif defense.placement == "victim":
            load[key] = load.get(key, 0.0) + defense.edge_load

    n_benign = n_mal = passed = caught = 0
    for t, d in zip(traffic, dropped):
        if t.malicious:
            n_mal += 1
            caught += d
        else:
            n_benign += 1
            exhausted = load.get((t.victim, t.slot), 0.0) >= defense.capacity - 1e-12
            passed += (not d) and not exhausted
    bpr = passed / n_benign if n_benign else None
    mdr = caught / n_mal if n_mal else None
    acc = system_accuracy(bpr, mdr) if bpr is not None and mdr is not None else None
    info = {"mode": defense.mode, "placement": defense.placement, "benign": n_benign,
            "malicious": n_mal, "undefined": [k for k, v in (("bpr", bpr), ("mdr", mdr)) if v is None]}
    return MitigationReport(bpr=bpr, mdr=mdr, system_accuracy=acc, info=info,
                            traces={"dropped": np.array(dropped), "flags": np.array(verdicts, dtype=bool)})


def accuracy_grid(traffic, detector) -> dict:
    """All four mode x placement combinations on the same traffic and verdicts."""
    flags = _verdicts(detector, [t.window for t in traffic])
    out = {}
    for mode in ("individual", "joint"):
        for placement in ("victim", "attacker"):
            out[(mode, placement)] = run_accuracy_simulation(traffic, Defense(mode, placement), None, flags)
    return out


def write_reports_csv(rows, path) -> None:
    """``rows``: iterable of (label, MitigationReport)."""
    cols = ["scenario", "mean_delay_s", "stdev_delay_s", "ci95_half_width_s", "per_1000_bots_s",
            "bpr", "mdr", "system_accuracy"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for label, r in rows:
            w.writerow([label] + ["" if x is None else repr(x) for x in
                                  (r.mean_delay, r.stdev_delay, r.ci_half_width, r.per_1000_bots,
                                   r.bpr, r.mdr, r.system_accuracy)])


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=1, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o).__name__)


def _coerce(cls, raw: dict):
    out = {}
    known = {f.name: f for f in fields(cls)}
    for k, v in raw.items():
        if k not in known:
            raise ValueError(f"unknown {cls.__name__} key {k!r}")
        default = known[k].default
        if isinstance(v, str):
            if isinstance(default, tuple):
                v = tuple(float(x) for x in v.split(","))
            elif isinstance(default, bool):
                v = v.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                v = int(v)
            elif isinstance(default, float):
                v = float(v)
        elif isinstance(v, list):
            v = tuple(v)
        out[k] = v
    return cls(**out)


def load_scenario(path, seed: int | None = None):
    """``(AttackScenario, TrafficSpec)`` from an INI file ([delay], [traffic]) or JSON object."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
    else:
        cp = configparser.ConfigParser()
        cp.read_string(path.read_text())
        data = {s: dict(cp[s]) for s in cp.sections()}
    extra = set(data) - {"delay", "traffic"}
    if extra:
        raise ValueError(f"unknown scenario sections: {sorted(extra)}")
    delay, traffic = dict(data.get("delay", {})), dict(data.get("traffic", {}))
    if seed is not None:
        delay["seed"], traffic["seed"] = seed, seed
    return _coerce(AttackScenario, delay), _coerce(TrafficSpec, traffic)
