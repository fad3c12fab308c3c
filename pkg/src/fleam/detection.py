"""Packet symbolization, GRU occurrence-probability scoring and window anomaly triggering.

A packet is described by nine features (application, enterprise policy,
direction, destination ip:port, source ip, upper protocol, length,
inter-arrival time, SLA class). The GRU sees the encoded features of the
``l`` preceding packets and predicts a distribution over symbol classes; the
probability it assigns to the class actually observed is the packet's score.
Packets scoring below the baseline threshold are flagged, and a window is
anomalous when the flagged fraction strictly exceeds ``gamma``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import nn
from .encoding import Encoder

PACKET_COLUMNS = ("application", "policy", "direction", "dest", "source", "protocol",
                  "length", "inter_arrival", "sla")
CATEGORICAL = ("application", "policy", "direction", "protocol", "sla")
HASHED = ("dest", "source")
NUMERIC = ("length", "inter_arrival")
DIRECTIONS = ("in", "out")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SymbolVector:
    application: str
    policy: str
    direction: str
    dest: str
    source: str
    protocol: str
    length: float
    inter_arrival: float
    sla: str

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        if self.length < 0 or self.inter_arrival < 0:
            raise ValueError("length and inter_arrival must be non-negative")


def packets_frame(packets) -> pd.DataFrame:
    """Normalise a list of ``SymbolVector`` or a DataFrame to the packet columns."""
    if isinstance(packets, pd.DataFrame):
        missing = set(PACKET_COLUMNS) - set(packets.columns)
        if missing:
            raise ConfigError(f"packet table missing columns {sorted(missing)}")
        return packets
    return pd.DataFrame([asdict(p) for p in packets], columns=list(PACKET_COLUMNS))


def read_packets(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={c: str for c in CATEGORICAL + HASHED}, keep_default_na=False)
    df = packets_frame(df)
    if (df["length"] < 0).any() or (df["inter_arrival"] < 0).any():
        raise ConfigError(f"{path}: negative length or inter-arrival")
    return df


class SymbolEncoder:
    """Packet feature encoding plus the symbol-class codebook.

    Width is the sum of the categorical vocabulary sizes (each with one reserved
    unknown slot), 64 hash buckets each for destination and source, plus the two
    scaled reals.
    """

    def __init__(self, encoder: Encoder, codebook: dict, length_edges):
        self.encoder = encoder
        self.codebook = codebook
        self.length_edges = np.asarray(length_edges, dtype=float)

    @classmethod
    def fit(cls, packets, max_classes: int = 64, length_bins: int = 3) -> "SymbolEncoder":
        df = packets_frame(packets)
        enc = Encoder.fit(df, categorical=CATEGORICAL, hashed=HASHED, numeric=NUMERIC)
        qs = np.linspace(0, 1, length_bins + 1)[1:-1]
        edges = np.unique(np.quantile(df["length"].to_numpy(float), qs)) if len(df) else np.array([])
        keys = _symbol_keys(df, edges)
        counts = pd.Series(keys).value_counts(sort=False)
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[: max_classes - 1]
        codebook = {k: i + 1 for i, (k, _) in enumerate(ordered)}
        return cls(enc, codebook, edges)

    @property
    def width(self) -> int:
        return self.encoder.width

    @property
    def n_classes(self) -> int:
        return len(self.codebook) + 1

    def encode(self, packets) -> np.ndarray:
        return self.encoder.transform(packets_frame(packets))

    def classes(self, packets) -> np.ndarray:
        keys = _symbol_keys(packets_frame(packets), self.length_edges)
        return np.fromiter((self.codebook.get(k, 0) for k in keys), dtype=np.int64, count=len(keys))

    def to_dict(self):
        return {"encoder": self.encoder.to_dict(), "codebook": self.codebook,
                "length_edges": self.length_edges.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(Encoder.from_dict(d["encoder"]), dict(d["codebook"]), d["length_edges"])

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def _symbol_keys(df: pd.DataFrame, edges) -> list:
    bins = np.searchsorted(edges, df["length"].to_numpy(float), side="right")
    return [f"{a}|{d}|{p}|{b}" for a, d, p, b in
            zip(df["application"].astype(str), df["direction"].astype(str),
                df["protocol"].astype(str), bins)]


def encode(sv: SymbolVector, vocab: SymbolEncoder) -> np.ndarray:
    return vocab.encode([sv])[0]


@dataclass
class FlowWindow:
    packets: pd.DataFrame
    window_id: int = 0
    span: tuple = (0.0, 0.0)
    expected_size: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def partial(self) -> bool:
        return len(self.packets) < self.expected_size

    def __len__(self):
        return len(self.packets)


def make_windows(packets, ts: int = 100, start_id: int = 0) -> list[FlowWindow]:
    """Cut a packet stream into consecutive windows of ``ts`` packets.

    The final window may be short; it is kept and reports ``partial``.
    """
    if ts < 1:
        raise ConfigError("window size must be >= 1")
    df = packets_frame(packets).reset_index(drop=True)
    t = np.cumsum(df["inter_arrival"].to_numpy(float)) if len(df) else np.array([])
    out = []
    for k, i in enumerate(range(0, len(df), ts)):
        chunk = df.iloc[i : i + ts].reset_index(drop=True)
        out.append(FlowWindow(chunk, start_id + k, (float(t[i]), float(t[min(i + ts, len(df)) - 1])), ts))
    return out


def context_windows(x: np.ndarray, l: int) -> np.ndarray:
    """``(n - l, l, D)`` stack of the ``l`` rows preceding each scored row."""
    n = x.shape[0]
    if n <= l:
        raise nn.InputError(f"window of {n} packets is too short for context length {l}")
    view = np.lib.stride_tricks.sliding_window_view(x, l, axis=0)  # (n-l+1, D, l)
    return np.ascontiguousarray(view[: n - l].transpose(0, 2, 1))


def score_sequence(model: nn.GruModel, x: np.ndarray, classes: np.ndarray, l: int = 5) -> np.ndarray:
    """Probability the model gives each packet's observed class from its ``l`` predecessors.

    ``x`` is the encoded window ``(n, D)``; the first ``l`` packets get no score,
    so the result has ``n - l`` entries.
    """
    ctx = context_windows(np.asarray(x, dtype=float), l)
    probs = nn.predict_proba_last(model, ctx)
    return probs[np.arange(len(ctx)), np.asarray(classes)[l:]]


def symbol_training_set(x: np.ndarray, classes: np.ndarray, l: int):
    """Next-symbol training pairs: contexts of ``l`` packets, loss only on the last step."""
    ctx = context_windows(x, l)
    labels = np.full(ctx.shape[:2], nn.IGNORE, dtype=np.int64)
    labels[:, -1] = np.asarray(classes)[l:]
    return ctx, labels


@dataclass
class BaselineProfile:
    deltas: list
    q: float
    context_length: int = 5
    gamma: float = 0.2
    window_size: int = 100
    layout_id: str = ""
    per_position: bool = False

    def __post_init__(self):
        if not self.deltas or not all(0.0 < d < 1.0 for d in self.deltas):
            raise ConfigError("every threshold must lie in (0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must lie in (0, 1)")
        if self.context_length < 1 or self.window_size < 1:
            raise ConfigError("context length and window size must be >= 1")

    def thresholds(self, n: int) -> np.ndarray:
        d = np.asarray(self.deltas, dtype=float)
        if not self.per_position:
            return np.full(n, d[0])
        if n > len(d):
            d = np.concatenate([d, np.full(n - len(d), d[-1])])
        return d[:n]

    def save(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=1))

    @classmethod
    def load(cls, path):
        return cls(**json.loads(Path(path).read_text()))


def nearest_rank(values, q: float) -> float:
    """Smallest value with at least a ``q`` share of the sample at or below it."""
    v = np.sort(np.asarray(values, dtype=float))
    k = max(1, math.ceil(q * len(v)))
    return float(v[k - 1])


def build_baseline(benign_scores, q: float = 0.05, context_length: int = 5, gamma: float = 0.2,
                   window_size: int = 100, layout_id: str = "", per_position: bool = False,
                   floor: float = 1e-12) -> BaselineProfile:
    """Thresholds from benign per-packet scores.

    ``benign_scores`` is a list of per-window score arrays. The pooled threshold
    is the nearest-rank ``q``-quantile; per-position mode takes the quantile of
    each scored position across windows.
    """
    if not 0.0 <= q < 1.0:
        raise ConfigError("q must lie in [0, 1)")
    windows = [np.asarray(s, dtype=float) for s in benign_scores if len(s)]
    if not windows:
        raise ConfigError("no benign scores to build a baseline from")
    clip = lambda d: float(min(max(d, floor), 1.0 - floor))
    if per_position:
        width = max(len(w) for w in windows)
        deltas = []
        for j in range(width):
            col = [w[j] for w in windows if len(w) > j]
            deltas.append(clip(nearest_rank(col, q)))
    else:
        deltas = [clip(nearest_rank(np.concatenate(windows), q))]
    return BaselineProfile(deltas, q, context_length, gamma, window_size, layout_id, per_position)


@dataclass(frozen=True)
class WindowVerdict:
    anomaly: bool
    flagged_fraction: float
    scored: int
    low_confidence: bool = False


def classify_window(scores, profile: BaselineProfile, layout_id: str | None = None,
                    low_confidence: bool = False) -> WindowVerdict:
    """Anomalous iff (packets with score < threshold) / scored packets > gamma."""
    if layout_id is not None and profile.layout_id and layout_id != profile.layout_id:
        raise ConfigError(f"model layout {layout_id} does not match profile {profile.layout_id}")
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        return WindowVerdict(False, 0.0, 0, True)
    flagged = int(np.count_nonzero(s < profile.thresholds(s.size)))
    frac = flagged / s.size
    return WindowVerdict(frac > profile.gamma, frac, int(s.size), low_confidence)


def classify_supervised(model: nn.GruModel, x) -> np.ndarray:
    """Binary attack/benign labels for encoded records; ties go to benign (0).

    ``x`` may be one record ``(D,)``, records ``(N, D)``, or sequences ``(N, T, D)``
    (classified on their last step).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if x.ndim == 1:
        x = x[None, None]
    elif x.ndim == 2:
        x = x[:, None]
    p = nn.predict_proba_last(model, x)
    out = (p[:, 1] > p[:, 0]).astype(np.int64)
    return out[0] if single else out


def label_from_distribution(p) -> int:
    p = np.asarray(p, dtype=float)
    return int(p[1] > p[0])


class Detector:
    """Trained symbol model with its encoder, context length and baseline."""

    def __init__(self, model: nn.GruModel, symbols: SymbolEncoder, context_length: int = 5,
                 profile: BaselineProfile | None = None):
        if model.input_dim != symbols.width or model.n_classes != symbols.n_classes:
            raise ConfigError("model layout does not match the symbol encoder")
        self.model = model
        self.symbols = symbols
        self.l = context_length
        self.profile = profile

    def score(self, window) -> np.ndarray:
        df = window.packets if isinstance(window, FlowWindow) else packets_frame(window)
        return score_sequence(self.model, self.symbols.encode(df), self.symbols.classes(df), self.l)

    def score_many(self, windows) -> list[np.ndarray]:
        """Score several windows with one batched forward pass."""
        frames = [w.packets if isinstance(w, FlowWindow) else packets_frame(w) for w in windows]
        if not frames:
            return []
        big = pd.concat(frames, ignore_index=True)
        x, cls = self.symbols.encode(big), self.symbols.classes(big)
        ctxs, targets, sizes, pos = [], [], [], 0
        for f in frames:
            n = len(f)
            if n > self.l:
                ctxs.append(context_windows(x[pos : pos + n], self.l))
                targets.append(cls[pos + self.l : pos + n])
            sizes.append(max(0, n - self.l))
            pos += n
        if not ctxs:
            return [np.empty(0) for _ in frames]
        probs = nn.predict_proba_last(self.model, np.concatenate(ctxs))
        flat = probs[np.arange(len(probs)), np.concatenate(targets)]
        return np.split(flat, np.cumsum(sizes)[:-1])

    def fit_baseline(self, benign_windows, q: float = 0.05, gamma: float = 0.2,
                     per_position: bool = False) -> BaselineProfile:
        scores = self.score_many(benign_windows)
        ts = max((len(w) for w in benign_windows), default=100)
        self.profile = build_baseline(scores, q, self.l, gamma, ts, self.model.layout_id, per_position)
        return self.profile

    def classify(self, window) -> WindowVerdict:
        if self.profile is None:
            raise ConfigError("no baseline profile; call fit_baseline first")
        low = isinstance(window, FlowWindow) and window.partial
        return classify_window(self.score(window), self.profile, self.model.layout_id, low)

    def classify_many(self, windows) -> list[WindowVerdict]:
        if self.profile is None:
            raise ConfigError("no baseline profile; call fit_baseline first")
        return [
            classify_window(s, self.profile, self.model.layout_id,
                            isinstance(w, FlowWindow) and w.partial)
            for w, s in zip(windows, self.score_many(windows))
        ]


def train_symbol_model(packets, hidden_dim: int = 32, context_length: int = 5,
                       config: nn.TrainConfig | None = None, max_classes: int = 64,
                       symbols: SymbolEncoder | None = None):
    """Fit encoder + GRU next-symbol model on a benign packet stream. Returns a ``Detector``."""
    config = config or nn.TrainConfig(learning_rate=0.1, batch_size=64, epochs=5)
    df = packets_frame(packets)
    symbols = symbols or SymbolEncoder.fit(df, max_classes=max_classes)
    xs, ys = symbol_training_set(symbols.encode(df), symbols.classes(df), context_length)
    model = nn.GruModel.initialize(symbols.width, hidden_dim, symbols.n_classes, seed=config.seed)
    model = nn.train(model, xs, ys, config)
    return Detector(model, symbols, context_length)
