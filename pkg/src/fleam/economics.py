"""Attack economics: firepower, bot cost rates, profit test and bot/resource dynamics."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels

# reference mitigation delays (seconds per 1000 bots) for the two defense models
CLASSIC_TIME_MTG = 1715.91
FLEAM_TIME_MTG = 483.74


class DomainError(ValueError):
    pass


class IntegrationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BotnetOffer:
    name: str
    bot_type: str
    population: int
    rental_price: float
    setup_cost: float = 0.0

    def __post_init__(self):
        if self.population < 1:
            raise ValueError(f"{self.name}: population must be >= 1")
        if self.rental_price < 0 or self.setup_cost < 0:
            raise ValueError(f"{self.name}: prices must be non-negative")

    @property
    def total_cost(self) -> float:
        return self.rental_price + self.setup_cost

    @property
    def calibrated_kill_power(self) -> float:
        """The constant that makes cost rate = (rental + setup) / time."""
        return self.population / self.total_cost


# Reported botnet-for-hire services (population, rental USD).
DEFAULT_OFFERS = (
    BotnetOffer("Botnet-Canada", "Computers", 1000, 270),
    BotnetOffer("Botnet-the U.S.", "Computers", 1000, 180),
    BotnetOffer("Botnet-the U.K.", "Computers", 1000, 240),
    BotnetOffer("Botnet-France", "Computers", 1000, 200),
    BotnetOffer("Boy Webcam", "Hacked IIoT device", 100, 1),
    BotnetOffer("Girl Webcam", "Hacked IIoT device", 100, 100),
    BotnetOffer("Remote controller", "Administration tool", 1, 40),
)


def load_offers(path) -> list[BotnetOffer]:
    """Price list as CSV (name,bot_type,population,rental_price[,setup_cost]) or a JSON list."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(text.splitlines()))
    offers = []
    for r in rows:
        offers.append(BotnetOffer(
            str(r["name"]), str(r.get("bot_type", "")), int(r["population"]),
            float(r["rental_price"]), float(r.get("setup_cost") or 0.0),
        ))
    return offers


@dataclass(frozen=True)
class Firepower:
    value: float
    warning: bool


def offensive_firepower(code_out: float, code_in: float) -> Firepower:
    """Attack traffic emitted per unit of control traffic; warns when not above 1."""
    if code_in == 0:
        raise DomainError("code_in must be non-zero")
    if code_in < 0 or code_out < 0:
        raise DomainError("traffic volumes must be non-negative")
    of = code_out / code_in
    return Firepower(of, of <= 1.0)


def mitigation_time(flows) -> float:
    """Total delay: sum of count * per-flow delay over ``(count, delay)`` pairs."""
    total = 0.0
    for count, delay in flows:
        if count < 0 or delay < 0:
            raise DomainError("counts and delays must be non-negative")
        total += delay * count
    return total


def attack_cost_rate(offer: BotnetOffer, time_mtg: float, kill_power: float | None = None) -> float:
    """Currency per second: ``(1 / kill_power) * population / time_mtg``."""
    if not time_mtg > 0:
        raise DomainError("mitigation time must be positive")
    kp = offer.calibrated_kill_power if kill_power is None else kill_power
    if not kp > 0:
        raise DomainError("kill power must be positive")
    return offer.population / (kp * time_mtg)


@dataclass(frozen=True)
class ProfitResult:
    profit: float
    viable: bool


def profit(value_attack: float, cost_attack: float, attackable=("victim",)) -> ProfitResult:
    p = value_attack - cost_attack
    return ProfitResult(p, p > 0 and len(attackable) > 0)


@dataclass(frozen=True)
class EconParams:
    kill_power: float = 1.0
    value_attack: float = 0.0
    code_out: float = 1.0
    code_in: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 0.1
    alpha3: float = 0.1
    alpha4: float = 1.0
    step: float = 1e-3

    def __post_init__(self):
        if not self.kill_power > 0:
            raise ValueError("kill_power must be positive")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if min(self.alpha1, self.alpha2, self.alpha3, self.alpha4) < 0:
            raise ValueError("alpha constants must be non-negative")


@dataclass
class Trajectory:
    t: np.ndarray
    idle: np.ndarray
    bots: np.ndarray

    def first_integral(self, p: EconParams) -> np.ndarray:
        """alpha3*I - alpha4*ln I + alpha2*N - alpha1*ln N, constant along exact solutions."""
        return (p.alpha3 * self.idle - p.alpha4 * np.log(self.idle)
                + p.alpha2 * self.bots - p.alpha1 * np.log(self.bots))


def lv_dynamics(params: EconParams, idle0: float, bots0: float, horizon: float) -> Trajectory:
    """RK4 for dI/dt = a1 I - a2 I N, dN/dt = a3 I N - a4 N with the params' fixed step.

    The last step is shortened so the trajectory ends exactly at ``horizon``.
    """
    if not (idle0 > 0 and bots0 > 0):
        raise DomainError("initial populations must be positive")
    if horizon < 0:
        raise DomainError("horizon must be non-negative")
    h = params.step
    full = int(math.floor(horizon / h + 1e-9))
    a = (params.alpha1, params.alpha2, params.alpha3, params.alpha4)
    traj, failed = kernels.lv_rk4(*a, idle0, bots0, h, full)
    if failed >= 0:
        raise IntegrationError(
            f"state became non-positive at step {failed} (t={failed * h:g}); use a smaller step"
        )
    t = np.arange(full + 1) * h
    rest = horizon - full * h
    if rest > 1e-12:
        tail, failed = kernels.lv_rk4(*a, traj[-1, 0], traj[-1, 1], rest, 1)
        if failed >= 0:
            raise IntegrationError("state became non-positive on the final step; use a smaller step")
        traj = np.vstack([traj, tail[1:]])
        t = np.append(t, horizon)
    return Trajectory(t, traj[:, 0].copy(), traj[:, 1].copy())


@dataclass(frozen=True)
class CostRow:
    name: str
    classic_per_sec: float
    fleam_per_sec: float

    @property
    def classic_per_hour(self) -> float:
        return self.classic_per_sec * 3600.0

    @property
    def fleam_per_hour(self) -> float:
        return self.fleam_per_sec * 3600.0


def cost_table(offers=DEFAULT_OFFERS, classic_time: float = CLASSIC_TIME_MTG,
               fleam_time: float = FLEAM_TIME_MTG, names=None) -> list[CostRow]:
    """Per-second (and per-hour) attack cost under both mitigation delays."""
    rows = []
    for o in offers:
        if names is not None and o.name not in names:
            continue
        rows.append(CostRow(o.name, attack_cost_rate(o, classic_time), attack_cost_rate(o, fleam_time)))
    return rows


TABLE_COLUMNS = ("botnet", "classic_usd_per_sec", "fleam_usd_per_sec", "classic_usd_per_hour",
                 "fleam_usd_per_hour", "classic_kusd_per_hour", "fleam_kusd_per_hour")


def write_cost_table(rows, path) -> None:
    """CSV with values rounded to 3 decimals at report time.

    Per-hour columns appear twice: plain dollars and thousands of dollars.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_COLUMNS)
        for r in rows:
            w.writerow([r.name, f"{r.classic_per_sec:.3f}", f"{r.fleam_per_sec:.3f}",
                        f"{r.classic_per_hour:.3f}", f"{r.fleam_per_hour:.3f}",
                        f"{r.classic_per_hour / 1000:.3f}", f"{r.fleam_per_hour / 1000:.3f}"])
