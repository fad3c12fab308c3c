"""GRU sequence classifier with hand-written backpropagation and plain SGD.

Arrays are batch-first: an input batch has shape ``(N, T, D)`` and labels have
shape ``(N, T)`` where ``-1`` marks a step that carries no loss.
"""

from __future__ import annotations

import hashlib
import logging
import struct
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

IGNORE = -1
_PARAM_ORDER = ("w_update", "b_update", "w_reset", "b_reset", "w_cand", "b_cand", "w_out", "b_out")
_MAGIC = b"FLGRU001"


class LayoutError(ValueError):
    """Shapes or layouts do not agree."""


class InputError(ValueError):
    """Malformed input sequence or labels."""


def layout_id(input_dim: int, hidden_dim: int, n_classes: int) -> str:
    key = f"gru:{input_dim}:{hidden_dim}:{n_classes}".encode()
    return hashlib.sha256(key).hexdigest()[:16]


def param_shapes(input_dim: int, hidden_dim: int, n_classes: int) -> dict[str, tuple[int, ...]]:
    cat = hidden_dim + input_dim
    return {
        "w_update": (hidden_dim, cat),
        "b_update": (hidden_dim,),
        "w_reset": (hidden_dim, cat),
        "b_reset": (hidden_dim,),
        "w_cand": (hidden_dim, cat),
        "b_cand": (hidden_dim,),
        "w_out": (n_classes, hidden_dim),
        "b_out": (n_classes,),
    }


def n_params(input_dim: int, hidden_dim: int, n_classes: int) -> int:
    return sum(int(np.prod(s)) for s in param_shapes(input_dim, hidden_dim, n_classes).values())


@dataclass
class ParamVector:
    values: np.ndarray
    layout_id: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def compatible(self, other: "ParamVector") -> bool:
        return self.layout_id == other.layout_id and self.values.shape == other.values.shape

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), self.layout_id)


@dataclass
class GruModel:
    """Single-layer GRU followed by a softmax output layer.

    Each gate matrix acts on the concatenation ``[h_prev, x]``.
    """

    input_dim: int
    hidden_dim: int
    n_classes: int
    w_update: np.ndarray = field(repr=False, default=None)
    b_update: np.ndarray = field(repr=False, default=None)
    w_reset: np.ndarray = field(repr=False, default=None)
    b_reset: np.ndarray = field(repr=False, default=None)
    w_cand: np.ndarray = field(repr=False, default=None)
    b_cand: np.ndarray = field(repr=False, default=None)
    w_out: np.ndarray = field(repr=False, default=None)
    b_out: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.input_dim <= 0 or self.hidden_dim <= 0 or self.n_classes < 2:
            raise LayoutError(
                f"invalid layout ({self.input_dim}, {self.hidden_dim}, {self.n_classes})"
            )
        for name, shape in param_shapes(self.input_dim, self.hidden_dim, self.n_classes).items():
            arr = getattr(self, name)
            if arr is None:
                arr = np.zeros(shape)
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != shape:
                raise LayoutError(f"{name} has shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int, n_classes: int = 2) -> "GruModel":
        return cls(input_dim, hidden_dim, n_classes)

    @classmethod
    def initialize(cls, input_dim: int, hidden_dim: int, n_classes: int = 2, seed: int = 0) -> "GruModel":
        """Uniform init in +-1/sqrt(fan_in) for every array, biases included."""
        rng = np.random.default_rng(seed)
        arrays = {}
        shapes = param_shapes(input_dim, hidden_dim, n_classes)
        fan_in = {"w_out": hidden_dim, "b_out": hidden_dim}
        for name in _PARAM_ORDER:
            bound = 1.0 / np.sqrt(fan_in.get(name, hidden_dim + input_dim))
            arrays[name] = rng.uniform(-bound, bound, size=shapes[name])
        return cls(input_dim, hidden_dim, n_classes, **arrays)

    @property
    def layout_id(self) -> str:
        return layout_id(self.input_dim, self.hidden_dim, self.n_classes)

    @property
    def size(self) -> int:
        return n_params(self.input_dim, self.hidden_dim, self.n_classes)

    def flatten(self) -> ParamVector:
        return ParamVector(
            np.concatenate([getattr(self, n).ravel() for n in _PARAM_ORDER]), self.layout_id
        )

    def unflatten(self, pv: ParamVector) -> "GruModel":
        """New model with this model's layout and ``pv``'s values."""
        if pv.layout_id != self.layout_id or pv.values.size != self.size:
            raise LayoutError(f"layout {pv.layout_id} does not match model {self.layout_id}")
        arrays, pos = {}, 0
        for name, shape in param_shapes(self.input_dim, self.hidden_dim, self.n_classes).items():
            k = int(np.prod(shape))
            arrays[name] = pv.values[pos : pos + k].reshape(shape).copy()
            pos += k
        return GruModel(self.input_dim, self.hidden_dim, self.n_classes, **arrays)

    def copy(self) -> "GruModel":
        return self.unflatten(self.flatten())

    def _view(self, values: np.ndarray) -> "GruModel":
        # arrays alias ``values``; in-place updates to it show through
        arrays, pos = {}, 0
        for name, shape in param_shapes(self.input_dim, self.hidden_dim, self.n_classes).items():
            k = int(np.prod(shape))
            arrays[name] = values[pos : pos + k].reshape(shape)
            pos += k
        m = GruModel.__new__(GruModel)
        m.input_dim, m.hidden_dim, m.n_classes = self.input_dim, self.hidden_dim, self.n_classes
        for name, arr in arrays.items():
            setattr(m, name, arr)
        return m

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.flatten().values)))

    def __eq__(self, other):
        if not isinstance(other, GruModel):
            return NotImplemented
        return self.layout_id == other.layout_id and np.array_equal(
            self.flatten().values, other.flatten().values
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 32
    epochs: int = 20
    lam: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")

    def replace(self, **kw) -> "TrainConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(kw)
        return TrainConfig(**vals)


def sigmoid(x):
    # split form avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_x(model: GruModel, x: np.ndarray):
    if x.shape[-1] != model.input_dim:
        raise LayoutError(f"input width {x.shape[-1]} != model input_dim {model.input_dim}")


def gru_step(model: GruModel, h_prev, x_t):
    """One GRU transition. Works on single vectors or on ``(N, dim)`` batches."""
    h_prev = np.asarray(h_prev, dtype=np.float64)
    x_t = np.asarray(x_t, dtype=np.float64)
    _check_x(model, x_t)
    if h_prev.shape[-1] != model.hidden_dim:
        raise LayoutError(f"hidden width {h_prev.shape[-1]} != {model.hidden_dim}")
    return _step(model, h_prev, x_t)[0]


def _step(m: GruModel, h, x):
    hx = np.concatenate([h, x], axis=-1)
    z = sigmoid(hx @ m.w_update.T + m.b_update)
    r = sigmoid(hx @ m.w_reset.T + m.b_reset)
    rhx = np.concatenate([r * h, x], axis=-1)
    c = np.tanh(rhx @ m.w_cand.T + m.b_cand)
    h_new = (1.0 - z) * h + z * c
    return h_new, (h, hx, z, r, rhx, c)


def _as_batch(model: GruModel, xs) -> tuple[np.ndarray, bool]:
    xs = np.asarray(xs, dtype=np.float64)
    single = xs.ndim == 2
    if single:
        xs = xs[None]
    if xs.ndim != 3:
        raise InputError(f"expected (T, D) or (N, T, D) input, got shape {xs.shape}")
    if xs.shape[1] == 0:
        raise InputError("empty sequence")
    _check_x(model, xs)
    return xs, single


def forward_sequence(model: GruModel, xs):
    """Run the GRU over ``xs`` from a zero state.

    Returns per-step class distributions and the final hidden state. A ``(T, D)``
    input gives ``(T, C)`` probabilities; a batch ``(N, T, D)`` gives ``(N, T, C)``.
    """
    xs, single = _as_batch(model, xs)
    probs, h, _ = _forward(model, xs, keep=False)
    if single:
        return probs[0], h[0]
    return probs, h


def _forward(m: GruModel, xs, keep: bool):
    n, T, _ = xs.shape
    h = np.zeros((n, m.hidden_dim))
    hs = np.empty((n, T, m.hidden_dim))
    cache = []
    for t in range(T):
        h, c = _step(m, h, xs[:, t])
        hs[:, t] = h
        if keep:
            cache.append(c)
    probs = softmax(hs @ m.w_out.T + m.b_out)
    return probs, h, (hs, cache)


def predict_proba_last(model: GruModel, xs, batch: int = 4096) -> np.ndarray:
    """Class distribution after the last step for each sequence in a batch."""
    xs, _ = _as_batch(model, xs)
    out = []
    for i in range(0, xs.shape[0], batch):
        probs, _, _ = _forward(model, xs[i : i + batch], keep=False)
        out.append(probs[:, -1])
    return np.concatenate(out) if out else np.empty((0, model.n_classes))


def _labels(model: GruModel, labels, shape) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim == 1 and len(shape) == 2:
        y = y[None]
    if y.shape != shape:
        raise InputError(f"labels shape {y.shape} does not align with sequence {shape}")
    y = y.astype(np.int64)
    bad = (y != IGNORE) & ((y < 0) | (y >= model.n_classes))
    if bad.any():
        raise InputError(f"label out of range [0, {model.n_classes})")
    return y


def loss_and_grad(model: GruModel, xs, labels, lam: float = 0.0) -> tuple[ParamVector, float]:
    """Mean cross-entropy over labelled steps plus ``lam * ||w||^2 / 2``."""
    xs, _ = _as_batch(model, xs)
    y = _labels(model, labels, xs.shape[:2])
    n, T, _ = xs.shape
    H = model.hidden_dim
    omega = model.flatten().values

    mask = y != IGNORE
    count = int(mask.sum())
    reg = 0.5 * lam * float(omega @ omega) if lam else 0.0

    grads = {name: np.zeros_like(getattr(model, name)) for name in _PARAM_ORDER}
    if count == 0:
        flat = np.concatenate([grads[k].ravel() for k in _PARAM_ORDER]) + lam * omega
        return ParamVector(flat, model.layout_id), reg

    probs, _, (hs, cache) = _forward(model, xs, keep=True)
    yi = np.where(mask, y, 0)
    picked = np.take_along_axis(probs, yi[..., None], axis=-1)[..., 0]
    ce = -np.log(np.maximum(picked[mask], 1e-300)).sum() / count

    dlogits = probs.copy()
    np.put_along_axis(dlogits, yi[..., None], np.take_along_axis(dlogits, yi[..., None], -1) - 1.0, axis=-1)
    dlogits *= (mask / count)[..., None]

    grads["w_out"] = np.einsum("ntc,nth->ch", dlogits, hs)
    grads["b_out"] = dlogits.sum(axis=(0, 1))
    dhs = dlogits @ model.w_out

    wz_h, wr_h, wc_h = model.w_update[:, :H], model.w_reset[:, :H], model.w_cand[:, :H]
    dh_next = np.zeros((n, H))
    for t in range(T - 1, -1, -1):
        h_prev, hx, z, r, rhx, c = cache[t]
        dh = dhs[:, t] + dh_next
        dc = dh * z
        dz = dh * (c - h_prev)
        dh_prev = dh * (1.0 - z)

        da_c = dc * (1.0 - c * c)
        grads["w_cand"] += da_c.T @ rhx
        grads["b_cand"] += da_c.sum(0)
        drh = da_c @ wc_h
        dr = drh * h_prev
        dh_prev += drh * r

        da_z = dz * z * (1.0 - z)
        grads["w_update"] += da_z.T @ hx
        grads["b_update"] += da_z.sum(0)
        dh_prev += da_z @ wz_h

        da_r = dr * r * (1.0 - r)
        grads["w_reset"] += da_r.T @ hx
        grads["b_reset"] += da_r.sum(0)
        dh_prev += da_r @ wr_h
        dh_next = dh_prev

    flat = np.concatenate([grads[k].ravel() for k in _PARAM_ORDER])
    if lam:
        flat = flat + lam * omega
    return ParamVector(flat, model.layout_id), float(ce + reg)


def backward(model: GruModel, xs, labels, lam: float = 0.0) -> tuple[ParamVector, float]:
    return loss_and_grad(model, xs, labels, lam)


def mean_loss(model: GruModel, xs, labels, lam: float = 0.0, batch: int = 4096) -> float:
    """Dataset-level loss: cross-entropy averaged over all labelled steps."""
    xs, _ = _as_batch(model, xs)
    y = _labels(model, labels, xs.shape[:2])
    total, count = 0.0, 0
    for i in range(0, xs.shape[0], batch):
        probs, _, _ = _forward(model, xs[i : i + batch], keep=False)
        yb = y[i : i + batch]
        mask = yb != IGNORE
        yi = np.where(mask, yb, 0)
        picked = np.take_along_axis(probs, yi[..., None], axis=-1)[..., 0]
        total += float(-np.log(np.maximum(picked[mask], 1e-300)).sum())
        count += int(mask.sum())
    omega = model.flatten().values
    ce = total / count if count else 0.0
    return ce + (0.5 * lam * float(omega @ omega) if lam else 0.0)


def sgd_step(model: GruModel, xs, labels, config: TrainConfig) -> tuple[GruModel, float]:
    grad, loss = loss_and_grad(model, xs, labels, config.lam)
    pv = model.flatten()
    new = ParamVector(pv.values - config.learning_rate * grad.values, pv.layout_id)
    return model.unflatten(new), loss


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    """Seeded permutation for one pass (numpy's shuffle is Fisher-Yates)."""
    rng = np.random.default_rng([seed, epoch])
    order = np.arange(n)
    rng.shuffle(order)
    return order


def sgd_epoch(model: GruModel, xs, labels, config: TrainConfig, epoch: int = 0) -> tuple[GruModel, float]:
    """One shuffled pass of minibatch SGD over a shard.

    Returns the updated model (the input is not modified) and the mean batch loss.
    An empty shard is a no-op and returns ``nan`` as the loss.
    """
    xs = np.asarray(xs, dtype=np.float64)
    labels = np.asarray(labels)
    n = xs.shape[0]
    if n == 0:
        log.warning("sgd_epoch called on an empty shard; model unchanged")
        return model.copy(), float("nan")
    order = epoch_order(n, config.seed, epoch)
    B = config.batch_size
    w = model.flatten().values.copy()
    work = model._view(w)
    losses = []
    for start in range(0, n, B):
        idx = order[start : start + B]
        grad, loss = loss_and_grad(work, xs[idx], labels[idx], config.lam)
        w -= config.learning_rate * grad.values
        losses.append(loss)
    if not np.all(np.isfinite(w)):
        raise FloatingPointError("non-finite parameters after SGD epoch; lower the learning rate")
    return model.unflatten(ParamVector(w, model.layout_id)), float(np.mean(losses))


def train(model: GruModel, xs, labels, config: TrainConfig, callback=None) -> GruModel:
    """Run ``config.epochs`` epochs; ``callback(epoch, model, loss)`` after each."""
    for e in range(config.epochs):
        model, loss = sgd_epoch(model, xs, labels, config, epoch=e)
        if callback is not None:
            callback(e, model, loss)
    return model


def save_checkpoint(model: GruModel, path) -> None:
    """Header (magic, dims, layout id, count) followed by little-endian float64 params."""
    values = model.flatten().values
    header = _MAGIC + struct.pack(
        "<qqq16sq", model.input_dim, model.hidden_dim, model.n_classes,
        model.layout_id.encode("ascii"), values.size,
    )
    Path(path).write_bytes(header + values.astype("<f8").tobytes())


def load_checkpoint(path) -> GruModel:
    raw = Path(path).read_bytes()
    if raw[:8] != _MAGIC:
        raise LayoutError(f"{path}: not a model checkpoint")
    hsize = struct.calcsize("<qqq16sq")
    d, h, c, lid, count = struct.unpack("<qqq16sq", raw[8 : 8 + hsize])
    lid = lid.decode("ascii")
    if lid != layout_id(d, h, c):
        raise LayoutError(f"{path}: layout id {lid} does not match dims ({d}, {h}, {c})")
    values = np.frombuffer(raw[8 + hsize :], dtype="<f8", count=count).astype(np.float64)
    return GruModel.zeros(d, h, c).unflatten(ParamVector(values, lid))
