"""Feature encoding shared by the intrusion-dataset pipeline and packet symbolization.

Categoricals become one-hot blocks (code 0 reserved for unseen values) or, past
the vocabulary cap, hashed one-hot blocks. Reals are min-max scaled with the
range fitted on training data only.
"""

from __future__ import annotations

import json
import logging
import zlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

HASH_BUCKETS = 64


def stable_bucket(value, buckets: int = HASH_BUCKETS) -> int:
    return zlib.crc32(str(value).encode("utf-8")) % buckets


@dataclass
class CategoricalVocab:
    name: str
    values: list = field(default_factory=list)
    hashed: bool = False
    buckets: int = HASH_BUCKETS

    @classmethod
    def fit(cls, name, column, cap: int = HASH_BUCKETS, hashed: bool = False):
        if hashed:
            return cls(name, [], True, cap)
        counts = Counter(str(v) for v in column)
        if len(counts) + 1 > cap:
            log.info("%s: %d distinct values exceed cap %d; hashing", name, len(counts), cap)
            return cls(name, [], True, cap)
        # most frequent first, ties by value, so the code table is reproducible
        values = [v for v, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]
        return cls(name, values, False, cap)

    @property
    def width(self) -> int:
        return self.buckets if self.hashed else len(self.values) + 1

    def codes(self, column) -> np.ndarray:
        if self.hashed:
            return np.fromiter((stable_bucket(v, self.buckets) for v in column), dtype=np.int64)
        table = {v: i + 1 for i, v in enumerate(self.values)}
        return np.fromiter((table.get(str(v), 0) for v in column), dtype=np.int64)

    def to_dict(self):
        return {"kind": "categorical", "name": self.name, "values": self.values,
                "hashed": self.hashed, "buckets": self.buckets}


@dataclass
class MinMax:
    name: str
    lo: float = 0.0
    hi: float = 0.0
    log1p: bool = False

    @classmethod
    def fit(cls, name, column, log1p: bool = False):
        x = _prep(np.asarray(column, dtype=np.float64), log1p)
        if x.size == 0:
            return cls(name, 0.0, 0.0, log1p)
        return cls(name, float(x.min()), float(x.max()), log1p)

    @property
    def width(self) -> int:
        return 1

    @property
    def constant(self) -> bool:
        return not self.hi > self.lo

    def scale(self, column) -> np.ndarray:
        x = _prep(np.asarray(column, dtype=np.float64), self.log1p)
        if self.constant:
            return np.zeros_like(x)
        return (x - self.lo) / (self.hi - self.lo)

    def to_dict(self):
        return {"kind": "numeric", "name": self.name, "lo": self.lo, "hi": self.hi, "log1p": self.log1p}


def _prep(x, log1p):
    if log1p:
        return np.log1p(np.maximum(x, 0.0))
    return x


class Encoder:
    """Ordered list of column encoders; output is their concatenation."""

    def __init__(self, parts):
        self.parts = list(parts)

    @classmethod
    def fit(cls, columns, categorical=(), hashed=(), numeric=(), log1p=(), cap=HASH_BUCKETS):
        """Fit on a mapping ``name -> sequence`` (a DataFrame works).

        Output order is categorical, then hashed, then numeric, each in the
        order given.
        """
        parts = []
        for name in categorical:
            parts.append(CategoricalVocab.fit(name, columns[name], cap=cap))
        for name in hashed:
            parts.append(CategoricalVocab.fit(name, columns[name], cap=cap, hashed=True))
        log1p = set(log1p)
        for name in numeric:
            mm = MinMax.fit(name, columns[name], log1p=name in log1p)
            if mm.constant:
                log.warning("numeric column %r is constant on the training data; it will encode as 0", name)
            parts.append(mm)
        return cls(parts)

    @property
    def width(self) -> int:
        return sum(p.width for p in self.parts)

    @property
    def names(self):
        return [p.name for p in self.parts]

    def transform(self, columns) -> np.ndarray:
        n = len(columns[self.parts[0].name]) if self.parts else 0
        out = np.zeros((n, self.width))
        col = 0
        rows = np.arange(n)
        for p in self.parts:
            if isinstance(p, CategoricalVocab):
                out[rows, col + p.codes(columns[p.name])] = 1.0
            else:
                out[:, col] = p.scale(columns[p.name])
            col += p.width
        return out

    def to_dict(self):
        return {"parts": [p.to_dict() for p in self.parts]}

    @classmethod
    def from_dict(cls, d):
        parts = []
        for p in d["parts"]:
            if p["kind"] == "categorical":
                parts.append(CategoricalVocab(p["name"], list(p["values"]), p["hashed"], p["buckets"]))
            else:
                parts.append(MinMax(p["name"], p["lo"], p["hi"], p.get("log1p", False)))
        return cls(parts)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))
