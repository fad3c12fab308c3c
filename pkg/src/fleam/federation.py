"""Synchronous iterative model averaging over simulated collaborators.

A collaborator is a DDoS policy module (DPM) coordinating one or more local
analysis modules (LAMs) that hold its data shard. Each round the scheduler
invites collaborators, a DPM accepts iff it has an idle LAM, every accepted
participant trains ``E`` local epochs from the current global parameters, and
the updater averages the returned vectors once all of them have reported.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .detection import classify_supervised

log = logging.getLogger(__name__)


class ProtocolError(RuntimeError):
    pass


class BarrierError(ProtocolError):
    """Aggregation attempted before every selected participant reported."""


class RoundAborted(ProtocolError):
    pass


class Status(str, enum.Enum):
    INVITING = "inviting"
    TRAINING = "training"
    AGGREGATING = "aggregating"
    DONE = "done"
    ABORTED = "aborted"


@dataclass
class LAM:
    lam_id: int
    busy: bool = False


@dataclass
class DPM:
    lams: list = field(default_factory=lambda: [LAM(0)])

    def idle_lam(self):
        for lam in self.lams:
            if not lam.busy:
                return lam
        return None


@dataclass
class Collaborator:
    cid: int
    xs: np.ndarray
    ys: np.ndarray
    config: nn.TrainConfig = field(default_factory=nn.TrainConfig)
    dpm: DPM = field(default_factory=DPM)
    available: bool = True
    latency: float = 0.0  # simulated seconds per round, compared against the round timeout

    @property
    def size(self) -> int:
        return int(self.xs.shape[0])

    def accepts(self) -> bool:
        return self.available and self.dpm.idle_lam() is not None


def make_pool(shards, config: nn.TrainConfig, lams_per_dpm: int = 1, seed_stride: int = 1):
    """Collaborators from ``[(xs, ys), ...]``; worker ``i`` trains with seed ``config.seed + i``."""
    return [
        Collaborator(i, xs, ys, config.replace(seed=config.seed + i * seed_stride),
                     DPM([LAM(k) for k in range(lams_per_dpm)]))
        for i, (xs, ys) in enumerate(shards)
    ]


@dataclass
class RoundState:
    round: int
    global_params: nn.ParamVector
    participants: list = field(default_factory=list)
    received: dict = field(default_factory=dict)
    losses: dict = field(default_factory=dict)
    status: Status = Status.INVITING


def schedule_round(pool, policy="all", seed: int = 0, round_index: int = 0) -> list[int]:
    """Invite collaborators and return the ids that accept.

    ``policy`` is ``"all"`` or an integer k (k invitees drawn without
    replacement, seeded by ``(seed, round_index)``).
    """
    if not pool:
        raise ProtocolError("empty collaborator pool")
    ids = sorted(c.cid for c in pool)
    if policy == "all":
        invited = ids
    else:
        k = int(policy)
        rng = np.random.default_rng([seed, round_index, 11])
        invited = sorted(rng.choice(ids, size=min(k, len(ids)), replace=False).tolist())
    by_id = {c.cid: c for c in pool}
    accepted = [i for i in invited if by_id[i].accepts()]
    for i in invited:
        if i not in accepted:
            log.info("round %d: collaborator %d rejected the invitation", round_index, i)
    if not accepted:
        raise RoundAborted(f"round {round_index}: no collaborator accepted")
    return accepted


def local_update(collab: Collaborator, omega: nn.ParamVector, template: nn.GruModel,
                 round_index: int = 0) -> tuple[nn.ParamVector, float]:
    """``E`` epochs of SGD on the collaborator's shard starting from ``omega``.

    Epoch ``e`` of round ``t`` shuffles with ``(seed, t * E + e)``, the same key a
    centralized run uses for its ``(t * E + e)``-th epoch.
    """
    cfg = collab.config
    lam = collab.dpm.idle_lam()
    if lam is not None:
        lam.busy = True
    try:
        if collab.size == 0:
            log.warning("collaborator %d has an empty shard; returning global parameters", collab.cid)
            return omega.copy(), float("nan")
        model = template.unflatten(omega)
        loss = float("nan")
        for e in range(cfg.epochs):
            model, loss = nn.sgd_epoch(model, collab.xs, collab.ys, cfg, epoch=round_index * cfg.epochs + e)
        return model.flatten(), loss
    finally:
        if lam is not None:
            lam.busy = False


def normalized_weights(sizes: dict, scheme: str = "size") -> dict:
    ids = sorted(sizes)
    if scheme == "uniform":
        raw = {i: 1.0 for i in ids}
    elif scheme == "size":
        raw = {i: float(sizes[i]) for i in ids}
    else:
        raise ValueError(f"unknown weighting scheme {scheme!r}")
    total = sum(raw[i] for i in ids)
    if total <= 0:
        raise ProtocolError("aggregation weights sum to zero")
    return {i: raw[i] / total for i in ids}


def aggregate(received: dict, weights: dict, expected=None) -> nn.ParamVector:
    """Weighted mean of participant vectors, reduced in sorted-id order."""
    expected = sorted(weights) if expected is None else sorted(expected)
    missing = [i for i in expected if i not in received]
    if missing:
        raise BarrierError(f"participants {missing} have not reported")
    if set(received) != set(expected):
        raise ProtocolError("received vectors from participants that were not selected")
    if abs(sum(weights[i] for i in expected) - 1.0) > 1e-12:
        raise ProtocolError("aggregation weights are not normalised")
    first = received[expected[0]]
    for i in expected:
        if not received[i].compatible(first):
            raise ProtocolError(f"participant {i} sent an incompatible parameter layout")
    acc = np.zeros_like(first.values)
    for i in expected:
        acc += weights[i] * received[i].values
    return nn.ParamVector(acc, first.layout_id)


@dataclass
class RoundRecord:
    round: int
    params: nn.ParamVector
    accuracy: float
    loss: float
    participants: list
    status: str


def accuracy(model: nn.GruModel, xs, ys) -> float:
    if xs is None or len(xs) == 0:
        return float("nan")
    pred = classify_supervised(model, xs)
    return float(np.mean(pred == np.asarray(ys)[:, -1]))


class Scheduler:
    """Opens rounds: selection and invitation."""

    def __init__(self, pool, policy="all", seed: int = 0):
        self.pool, self.policy, self.seed = pool, policy, seed

    def open(self, t: int, omega: nn.ParamVector) -> RoundState:
        state = RoundState(t, omega)
        state.participants = schedule_round(self.pool, self.policy, self.seed, t)
        state.status = Status.TRAINING
        return state


class Updater:
    """Collects local results behind the round barrier and aggregates."""

    def __init__(self, pool, template: nn.GruModel, weighting: str = "size",
                 round_timeout: float | None = None, workers: int = 1):
        self.by_id = {c.cid: c for c in pool}
        self.template = template
        self.weighting = weighting
        self.round_timeout = round_timeout
        self.workers = workers

    def train(self, state: RoundState) -> RoundState:
        if self.round_timeout is not None:
            late = [i for i in state.participants if self.by_id[i].latency > self.round_timeout]
            if late:
                state.status = Status.ABORTED
                raise RoundAborted(f"round {state.round}: stragglers {late} exceeded the timeout")
        jobs = [self.by_id[i] for i in state.participants]
        run = lambda c: (c.cid, local_update(c, state.global_params, self.template, state.round))
        if self.workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(self.workers) as ex:
                results = list(ex.map(run, jobs))
        else:
            results = [run(c) for c in jobs]
        for cid, (pv, loss) in results:
            state.received[cid] = pv
            state.losses[cid] = loss
        state.status = Status.AGGREGATING
        return state

    def close(self, state: RoundState) -> tuple[nn.ParamVector, float]:
        sizes = {i: self.by_id[i].size for i in state.participants}
        w = normalized_weights(sizes, self.weighting)
        new = aggregate(state.received, w, state.participants)
        loss = global_loss(state.losses, sizes)
        state.status = Status.DONE
        return new, loss


def global_loss(losses: dict, sizes: dict) -> float:
    """Data-size weighted average of local losses."""
    total = sum(sizes[i] for i in sorted(sizes))
    return float(sum(sizes[i] / total * losses[i] for i in sorted(sizes)))


def run_federation(pool, rounds: int, init: nn.GruModel, eval_set=None, policy="all",
                   seed: int = 0, weighting: str = "size", round_timeout: float | None = None,
                   workers: int = 1, callback=None) -> list[RoundRecord]:
    """Run ``rounds`` synchronous rounds; history entry 0 is the initial model."""
    ev_x, ev_y = eval_set if eval_set is not None else (None, None)
    omega = init.flatten()
    history = [RoundRecord(0, omega, accuracy(init, ev_x, ev_y), float("nan"), [], Status.DONE.value)]
    scheduler = Scheduler(pool, policy, seed)
    updater = Updater(pool, init, weighting, round_timeout, workers)
    for t in range(rounds):
        try:
            state = scheduler.open(t, omega)
            updater.train(state)
            omega, loss = updater.close(state)
            status, parts = Status.DONE.value, state.participants
        except RoundAborted as exc:
            log.warning("%s", exc)
            loss, status, parts = float("nan"), Status.ABORTED.value, []
        model = init.unflatten(omega)
        rec = RoundRecord(t + 1, omega, accuracy(model, ev_x, ev_y), loss, parts, status)
        history.append(rec)
        if callback is not None:
            callback(rec)
    return history


def train_centralized(xs, ys, init: nn.GruModel, config: nn.TrainConfig, eval_set=None,
                      callback=None) -> list[RoundRecord]:
    """Plain SGD on the pooled data, one record per epoch (entry 0 is the initial model)."""
    ev_x, ev_y = eval_set if eval_set is not None else (None, None)
    model = init
    history = [RoundRecord(0, model.flatten(), accuracy(model, ev_x, ev_y), float("nan"), [], "done")]
    for e in range(config.epochs):
        model, loss = nn.sgd_epoch(model, xs, ys, config, epoch=e)
        rec = RoundRecord(e + 1, model.flatten(), accuracy(model, ev_x, ev_y), loss, [0], "done")
        history.append(rec)
        if callback is not None:
            callback(rec)
    return history
