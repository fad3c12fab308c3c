"""End-to-end intrusion-detection experiments: centralized vs federated GRU training."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataset, federation, nn
from .encoding import Encoder

log = logging.getLogger(__name__)


@dataclass
class Prepared:
    records: dataset.RecordSet
    partition: dataset.Partition
    encoder: Encoder
    shards: list  # [(xs, ys)] per worker
    test: tuple  # (xs, ys)
    seq_len: int

    @property
    def input_dim(self) -> int:
        return self.encoder.width

    def pooled(self):
        """All training shards concatenated (for the centralized baseline)."""
        if len(self.shards) == 1:
            return self.shards[0]
        return (np.concatenate([s[0] for s in self.shards]), np.concatenate([s[1] for s in self.shards]))


def prepare(records: dataset.RecordSet, plan: dataset.ShardPlan, subset: int | None = 50_000,
            seq_len: int = 1) -> Prepared:
    records = dataset.subsample(records, subset, plan.seed)
    part = dataset.partition(records, plan)
    train_idx = np.sort(np.concatenate(part.shards))
    matrix, enc = dataset.preprocess(records, train_idx)
    shards = [dataset.as_sequences(matrix[s], records.labels[s], seq_len) for s in part.shards]
    test = dataset.as_sequences(matrix[part.test], records.labels[part.test], seq_len)
    return Prepared(records, part, enc, shards, test, seq_len)


def init_model(prep: Prepared, hidden_dim: int, seed: int) -> nn.GruModel:
    return nn.GruModel.initialize(prep.input_dim, hidden_dim, 2, seed=seed)


def centralized(prep: Prepared, hidden_dim: int = 100, config: nn.TrainConfig | None = None,
                callback=None):
    config = config or nn.TrainConfig()
    xs, ys = prep.pooled()
    return federation.train_centralized(xs, ys, init_model(prep, hidden_dim, config.seed), config,
                                        prep.test, callback)


def federated(prep: Prepared, rounds: int = 20, hidden_dim: int = 100,
              config: nn.TrainConfig | None = None, local_epochs: int = 1, policy="all",
              weighting: str = "size", lams_per_dpm: int = 1, callback=None, workers: int = 1):
    config = config or nn.TrainConfig()
    local = config.replace(epochs=local_epochs)
    pool = federation.make_pool(prep.shards, local, lams_per_dpm)
    init = init_model(prep, hidden_dim, config.seed)
    return federation.run_federation(pool, rounds, init, prep.test, policy, config.seed,
                                     weighting, workers=workers, callback=callback)


def local_only(prep: Prepared, hidden_dim: int = 100, config: nn.TrainConfig | None = None):
    """Each worker trains alone on its shard; returns final test accuracy per worker."""
    config = config or nn.TrainConfig()
    out = []
    for i, (xs, ys) in enumerate(prep.shards):
        cfg = config.replace(seed=config.seed + i)
        if len(xs) == 0:
            out.append(float("nan"))
            continue
        hist = federation.train_centralized(xs, ys, init_model(prep, hidden_dim, config.seed), cfg, prep.test)
        out.append(hist[-1].accuracy)
    return out


def write_history(history, path, label: str = "round") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([label, "loss", "accuracy", "participants", "status"])
        for r in history:
            w.writerow([r.round, repr(r.loss), repr(r.accuracy), " ".join(map(str, r.participants)), r.status])


def final_model(prep: Prepared, history, hidden_dim: int) -> nn.GruModel:
    return nn.GruModel.zeros(prep.input_dim, hidden_dim, 2).unflatten(history[-1].params)


def save_outputs(out_dir, prep: Prepared, history, hidden_dim: int, stem: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    nn.save_checkpoint(final_model(prep, history, hidden_dim), out / f"{stem}.ckpt")
    prep.encoder.save(out / "encoder.json")
    write_history(history, out / f"{stem}.csv", "epoch" if stem == "centralized" else "round")
    prep.partition.save(out / "shards.json")
    return out
