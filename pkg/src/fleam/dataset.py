"""UNSW NB-15 ingestion, preprocessing, k-fold test split and collaborator sharding."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .encoding import Encoder

log = logging.getLogger(__name__)


class IngestionError(RuntimeError):
    pass


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Schema:
    name: str
    columns: tuple
    identifiers: tuple
    categorical: tuple
    label: str
    attack_cat: str
    log1p: tuple = ()

    @property
    def numeric(self) -> tuple:
        skip = set(self.identifiers) | set(self.categorical) | {self.label, self.attack_cat}
        return tuple(c for c in self.columns if c not in skip)


# The four raw capture files: 49 columns, no header row in the official release.
RAW49 = Schema(
    name="unsw-nb15-raw",
    columns=(
        "srcip", "sport", "dstip", "dsport", "proto", "state", "dur", "sbytes", "dbytes",
        "sttl", "dttl", "sloss", "dloss", "service", "sload", "dload", "spkts", "dpkts",
        "swin", "dwin", "stcpb", "dtcpb", "smeansz", "dmeansz", "trans_depth",
        "res_bdy_len", "sjit", "djit", "stime", "ltime", "sintpkt", "dintpkt", "tcprtt",
        "synack", "ackdat", "is_sm_ips_ports", "ct_state_ttl", "ct_flw_http_mthd",
        "is_ftp_login", "ct_ftp_cmd", "ct_srv_src", "ct_srv_dst", "ct_dst_ltm",
        "ct_src_ltm", "ct_src_dport_ltm", "ct_dst_sport_ltm", "ct_dst_src_ltm",
        "attack_cat", "label",
    ),
    identifiers=("srcip", "sport", "dstip", "dsport", "stime", "ltime"),
    categorical=("proto", "service", "state"),
    label="label",
    attack_cat="attack_cat",
    log1p=("dur", "sbytes", "dbytes", "sload", "dload", "spkts", "dpkts", "stcpb", "dtcpb",
           "smeansz", "dmeansz", "trans_depth", "res_bdy_len", "sjit", "djit", "sintpkt",
           "dintpkt", "sloss", "dloss"),
)

# The published training/testing split files (45 columns with a header row).
TRAINING_SET = Schema(
    name="unsw-nb15-training-set",
    columns=(
        "id", "dur", "proto", "service", "state", "spkts", "dpkts", "sbytes", "dbytes",
        "rate", "sttl", "dttl", "sload", "dload", "sloss", "dloss", "sinpkt", "dinpkt",
        "sjit", "djit", "swin", "stcpb", "dtcpb", "dwin", "tcprtt", "synack", "ackdat",
        "smean", "dmean", "trans_depth", "response_body_len", "ct_srv_src",
        "ct_state_ttl", "ct_dst_ltm", "ct_src_dport_ltm", "ct_dst_sport_ltm",
        "ct_dst_src_ltm", "is_ftp_login", "ct_ftp_cmd", "ct_flw_http_mthd", "ct_src_ltm",
        "ct_srv_dst", "is_sm_ips_ports", "attack_cat", "label",
    ),
    identifiers=("id",),
    categorical=("proto", "service", "state"),
    label="label",
    attack_cat="attack_cat",
    log1p=("dur", "sbytes", "dbytes", "rate", "sload", "dload", "spkts", "dpkts", "stcpb",
           "dtcpb", "smean", "dmean", "trans_depth", "response_body_len", "sjit", "djit",
           "sinpkt", "dinpkt", "sloss", "dloss"),
)

SCHEMAS = {s.name: s for s in (RAW49, TRAINING_SET)}


@dataclass
class RecordSet:
    """Typed rows of one intrusion CSV.

    ``frame`` holds the feature columns (numerics as float, categoricals as str).
    """

    schema: Schema
    frame: pd.DataFrame
    labels: np.ndarray
    attack_cat: np.ndarray
    rejected: int = 0
    rejected_lines: list = field(default_factory=list)
    data_lines: int = 0

    def __len__(self):
        return len(self.labels)

    def take(self, idx) -> "RecordSet":
        idx = np.asarray(idx, dtype=np.int64)
        return RecordSet(self.schema, self.frame.iloc[idx].reset_index(drop=True),
                         self.labels[idx], self.attack_cat[idx])


def _norm(name: str) -> str:
    return name.strip().lower().replace(" ", "")


def _detect(first_row, schema: Schema | None):
    names = [_norm(c) for c in first_row]
    candidates = [schema] if schema else list(SCHEMAS.values())
    for s in candidates:
        if names == list(s.columns):
            return s, True
    if schema is not None:
        if len(first_row) == len(schema.columns) and not set(names) & set(schema.columns):
            return schema, False
        raise IngestionError(
            f"header does not match schema {schema.name}: expected {len(schema.columns)} "
            f"columns {schema.columns[:4]}..., got {len(first_row)} starting {names[:4]}"
        )
    for s in candidates:
        if len(first_row) == len(s.columns) and not set(names) & set(s.columns):
            return s, False
    raise IngestionError(f"unrecognised header/column count ({len(first_row)} fields)")


def load_csv(path, schema: Schema | None = None) -> RecordSet:
    """Read a UNSW NB-15 CSV (raw 49-column capture or the training-set layout).

    A header row is optional for the raw layout. Empty numeric cells read as 0;
    rows with unparsable numbers, wrong field counts or labels outside {0, 1}
    are dropped and counted in ``rejected``.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="latin-1") as fh:
        first = next(csv.reader(fh), None)
    if first is None:
        raise IngestionError(f"{path}: empty file (no header)")
    schema, has_header = _detect(first, schema)

    raw = pd.read_csv(
        path, header=None, skiprows=1 if has_header else 0, dtype=str,
        keep_default_na=False, encoding="latin-1", on_bad_lines="skip",
        names=list(schema.columns),
    )
    data_lines = _count_data_lines(path, has_header)
    bad_shape = data_lines - len(raw)

    ok = np.ones(len(raw), dtype=bool)
    frame = {}
    for col in schema.numeric:
        s = raw[col].str.strip()
        s = s.where(s != "", "0")
        vals = pd.to_numeric(s, errors="coerce")
        ok &= vals.notna().to_numpy()
        frame[col] = vals.to_numpy(dtype=np.float64, na_value=np.nan)
    for col in schema.categorical:
        frame[col] = raw[col].str.strip().replace("", "-").to_numpy(dtype=object)
    label = pd.to_numeric(raw[schema.label].str.strip(), errors="coerce")
    ok &= label.isin([0, 1]).to_numpy()
    cats = raw[schema.attack_cat].str.strip().replace("", "Normal").to_numpy(dtype=object)

    rejected_lines = (np.flatnonzero(~ok) + (2 if has_header else 1)).tolist()
    df = pd.DataFrame(frame).loc[ok].reset_index(drop=True)
    labels = label.to_numpy()[ok].astype(np.int8)
    rejected = int((~ok).sum()) + bad_shape
    if rejected:
        log.warning("%s: rejected %d malformed rows", path.name, rejected)
    return RecordSet(schema, df, labels, cats[ok], rejected, rejected_lines[:100], data_lines)


def _count_data_lines(path: Path, has_header: bool) -> int:
    with path.open(newline="", encoding="latin-1") as fh:
        n = sum(1 for row in csv.reader(fh) if row)
    return n - (1 if has_header else 0)


def subsample(records: RecordSet, n: int | None, seed: int = 0) -> RecordSet:
    """Seeded sample of ``n`` rows, kept in file order."""
    if n is None or n >= len(records):
        return records
    rng = np.random.default_rng([seed, 1])
    idx = np.sort(rng.choice(len(records), size=n, replace=False))
    return records.take(idx)


def fit_encoder(records: RecordSet, train_idx=None) -> Encoder:
    sub = records.frame if train_idx is None else records.frame.iloc[np.asarray(train_idx)]
    s = records.schema
    return Encoder.fit(sub, categorical=s.categorical, numeric=s.numeric, log1p=s.log1p)


def preprocess(records: RecordSet, train_idx=None, encoder: Encoder | None = None):
    """Encode every record; scaling/vocabularies come from ``train_idx`` rows only.

    Returns ``(matrix, encoder)``.
    """
    if encoder is None:
        encoder = fit_encoder(records, train_idx)
    return encoder.transform(records.frame), encoder


def as_sequences(matrix: np.ndarray, labels: np.ndarray, seq_len: int = 1):
    """Group consecutive rows into ``(N, seq_len, D)`` sequences with per-step labels.

    Trailing rows that do not fill a sequence are dropped.
    """
    n = (len(matrix) // seq_len) * seq_len
    xs = matrix[:n].reshape(-1, seq_len, matrix.shape[1])
    ys = np.asarray(labels[:n], dtype=np.int64).reshape(-1, seq_len)
    return xs, ys


@dataclass(frozen=True)
class ShardPlan:
    n_workers: int = 4
    mode: str = "uniform"
    fractions: tuple | None = None
    alpha: float = 0.2
    n_folds: int = 10
    fold: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n_workers < 1:
            raise PartitionError("n_workers must be >= 1")
        if self.mode not in ("uniform", "dirichlet"):
            raise PartitionError(f"unknown partition mode {self.mode!r}")
        if not 0 <= self.fold < self.n_folds:
            raise PartitionError("fold index out of range")
        if self.fractions is not None:
            if len(self.fractions) != self.n_workers:
                raise PartitionError("one fraction per worker required")
            if abs(sum(self.fractions) - 1.0) > 1e-9 or min(self.fractions) < 0:
                raise PartitionError("fractions must be non-negative and sum to 1")

    @property
    def test_fraction(self) -> float:
        return 1.0 / self.n_folds


@dataclass
class Partition:
    shards: list
    test: np.ndarray
    plan: ShardPlan

    def to_manifest(self) -> dict:
        return {
            "plan": asdict(self.plan),
            "test": self.test.tolist(),
            "shards": {str(i): s.tolist() for i, s in enumerate(self.shards)},
        }

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_manifest()))

    @classmethod
    def load(cls, path) -> "Partition":
        d = json.loads(Path(path).read_text())
        plan = d["plan"]
        if plan.get("fractions") is not None:
            plan["fractions"] = tuple(plan["fractions"])
        shards = [np.asarray(d["shards"][str(i)], dtype=np.int64) for i in range(len(d["shards"]))]
        return cls(shards, np.asarray(d["test"], dtype=np.int64), ShardPlan(**plan))


def kfold_split(n: int, n_folds: int, fold: int, seed: int):
    """Seeded k-fold assignment; returns ``(train_idx, test_idx)`` both sorted."""
    rng = np.random.default_rng([seed, 0])
    perm = rng.permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % n_folds
    test = np.flatnonzero(fold_of == fold)
    train = np.flatnonzero(fold_of != fold)
    return train, test


def partition(labels, plan: ShardPlan) -> Partition:
    """Hold out the plan's test fold, then split the rest among workers.

    ``labels`` is the per-record binary label array (a ``RecordSet`` also works).
    Shard index arrays keep file order.
    """
    if isinstance(labels, RecordSet):
        labels = labels.labels
    labels = np.asarray(labels)
    n = len(labels)
    if plan.n_workers > n:
        raise PartitionError(f"{plan.n_workers} workers but only {n} records")
    train, test = kfold_split(n, plan.n_folds, plan.fold, plan.seed)
    if plan.mode == "dirichlet":
        shards = _dirichlet(train, labels, plan)
    else:
        for attempt in range(10):
            shards = _uniform(train, plan, attempt)
            if plan.n_workers == 1 or all(len(np.unique(labels[s])) == len(np.unique(labels)) for s in shards):
                break
        else:
            raise PartitionError("could not draw shards containing every class after 10 attempts")
    return Partition([np.sort(s) for s in shards], test, plan)


def _uniform(train, plan: ShardPlan, attempt: int):
    rng = np.random.default_rng([plan.seed, 2, attempt])
    perm = rng.permutation(train)
    fr = np.asarray(plan.fractions or [1.0 / plan.n_workers] * plan.n_workers)
    cuts = np.round(np.cumsum(fr)[:-1] * len(perm)).astype(int)
    return np.split(perm, cuts)


def _dirichlet(train, labels, plan: ShardPlan):
    rng = np.random.default_rng([plan.seed, 3])
    parts = [[] for _ in range(plan.n_workers)]
    for c in np.unique(labels[train]):
        idx = rng.permutation(train[labels[train] == c])
        p = rng.dirichlet([plan.alpha] * plan.n_workers)
        cuts = np.round(np.cumsum(p)[:-1] * len(idx)).astype(int)
        for w, chunk in enumerate(np.split(idx, cuts)):
            parts[w].append(chunk)
    shards = [np.concatenate(p) if p else np.empty(0, dtype=np.int64) for p in parts]
    if any(len(s) == 0 for s in shards):
        log.warning("dirichlet partition produced an empty shard")
    return shards
