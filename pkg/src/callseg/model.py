"""The convolutional-recurrent classifier.

Four conv blocks (3x3 same conv -> activation -> ceil-mode max pool ->
dropout) collapse the 96-band spectrogram's frequency axis to 1; the
surviving (channels, time) map is read as a sequence, passed through two
recurrent layers (full sequence, then final state only), and a dense
softmax head produces class probabilities.

With the default configuration a (96, 1000) input reaches the recurrent
layers as 42 time steps of 32 features.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError, ConfigError, ShapeError, StateError
from .features import MelSpectrogram
from .layers import Activation, Conv2d, DenseSoftmax, Dropout, MaxPool2d, cross_entropy
from .recurrent import GRULayer, LSTMLayer

LABELS_2 = ("customer", "agent")
LABELS_4 = ("female customer", "male customer", "female agent", "male agent")

_CKPT_MAGIC = b"CSEGCKP1"


def label_names(n_classes: int):
    """Class index -> name mapping for the 2- and 4-class problems."""
    if n_classes == 2:
        return LABELS_2
    if n_classes == 4:
        return LABELS_4
    raise ConfigError(f"n_classes must be 2 or 4, got {n_classes}")


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass
class ModelConfig:
    conv_filters: tuple = (64, 64, 64, 32)
    pool_kernels: tuple = ((2, 2), (3, 3), (4, 2), (4, 2))
    dropout_p: float = 0.1
    rnn_kind: str = "gru"
    rnn_hidden: tuple = (84, 84)
    n_classes: int = 2
    input_shape: tuple = (96, 1000)
    conv_activation: str = "elu"

    def __post_init__(self):
        self.conv_filters = tuple(int(f) for f in self.conv_filters)
        self.pool_kernels = tuple((int(kh), int(kw)) for kh, kw in self.pool_kernels)
        self.rnn_hidden = tuple(int(h) for h in self.rnn_hidden)
        self.input_shape = tuple(int(s) for s in self.input_shape)
        self.validate()

    def validate(self):
        if len(self.conv_filters) != 4 or any(f < 1 for f in self.conv_filters):
            raise ConfigError(f"need four positive conv filter counts, got {self.conv_filters}")
        if len(self.pool_kernels) != 4:
            raise ConfigError(f"need four pool kernels, got {self.pool_kernels}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.rnn_kind not in ("gru", "lstm"):
            raise ConfigError(f"rnn_kind must be 'gru' or 'lstm', got {self.rnn_kind!r}")
        if len(self.rnn_hidden) != 2 or any(h < 1 for h in self.rnn_hidden):
            raise ConfigError(f"need two positive hidden sizes, got {self.rnn_hidden}")
        if self.n_classes not in (2, 4):
            raise ConfigError(f"n_classes must be 2 or 4, got {self.n_classes}")
        if len(self.input_shape) != 2 or any(s < 1 for s in self.input_shape):
            raise ConfigError(f"bad input_shape {self.input_shape}")
        channels, freq, time = self.conv_output_shape()
        if freq != 1:
            raise ConfigError(
                f"pool kernels {self.pool_kernels} leave frequency axis at {freq}, "
                f"must collapse {self.input_shape[0]} bands to 1"
            )
        if time < 1:
            raise ConfigError("time axis collapsed to zero")

    def conv_output_shape(self):
        """(channels, freq, time) after the four conv/pool blocks."""
        freq, time = self.input_shape
        for kh, kw in self.pool_kernels:
            freq = _ceil_div(freq, kh)
            time = _ceil_div(time, kw)
        return self.conv_filters[-1], freq, time

    def to_dict(self) -> dict:
        return {
            "conv_filters": list(self.conv_filters),
            "pool_kernels": [list(k) for k in self.pool_kernels],
            "dropout_p": self.dropout_p,
            "rnn_kind": self.rnn_kind,
            "rnn_hidden": list(self.rnn_hidden),
            "n_classes": self.n_classes,
            "input_shape": list(self.input_shape),
            "conv_activation": self.conv_activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


class CrnnModel:
    """Built via build_crnn or load_checkpoint; owns parameters and caches."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator, dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        self.normalization: tuple[float, float] | None = None

        channels_in = 1
        self.blocks = []
        for filters, pool in zip(config.conv_filters, config.pool_kernels):
            conv = Conv2d(channels_in, filters, rng, dtype=self.dtype)
            self.blocks.append(
                (conv, Activation(config.conv_activation), MaxPool2d(pool), Dropout(config.dropout_p))
            )
            channels_in = filters

        rnn_cls = GRULayer if config.rnn_kind == "gru" else LSTMLayer
        seq_features = config.conv_filters[-1]
        self.rnn1 = rnn_cls(seq_features, config.rnn_hidden[0], rng, dtype=self.dtype)
        self.rnn2 = rnn_cls(config.rnn_hidden[0], config.rnn_hidden[1], rng, dtype=self.dtype)
        self.head = DenseSoftmax(config.rnn_hidden[1], config.n_classes, rng, dtype=self.dtype)
        self._ready = False

    # -- parameter bookkeeping ---------------------------------------------

    def _layers(self):
        out = []
        for i, (conv, _act, _pool, _drop) in enumerate(self.blocks):
            out.append((f"conv{i + 1}", conv))
        out.append(("rnn1", self.rnn1))
        out.append(("rnn2", self.rnn2))
        out.append(("head", self.head))
        return out

    def named_params(self):
        """Ordered (name, array) pairs; order defines the checkpoint layout."""
        return [
            (f"{lname}.{pname}", getattr(layer, pname))
            for lname, layer in self._layers()
            for pname in layer.param_names
        ]

    def param_arrays(self):
        return [arr for _name, arr in self.named_params()]

    def grad_arrays(self):
        return [
            layer.grads[pname]
            for _lname, layer in self._layers()
            for pname in layer.param_names
        ]

    def zero_grads(self):
        for grad in self.grad_arrays():
            grad[...] = 0.0

    def count_params(self) -> int:
        return sum(arr.size for arr in self.param_arrays())

    def set_params(self, arrays):
        own = self.param_arrays()
        if len(arrays) != len(own):
            raise ShapeError("parameter list length mismatch")
        for dst, src in zip(own, arrays):
            if dst.shape != src.shape:
                raise ShapeError(f"param shape {src.shape} does not match {dst.shape}")
            dst[...] = src.astype(dst.dtype)

    def copy_params(self):
        return [arr.copy() for arr in self.param_arrays()]

    # -- forward / backward --------------------------------------------------

    def _prepare_input(self, features):
        values = features.values if isinstance(features, MelSpectrogram) else np.asarray(features)
        if values.shape != self.config.input_shape:
            raise ShapeError(
                f"features shape {values.shape} does not match model input {self.config.input_shape}"
            )
        x = values.astype(self.dtype)
        if self.normalization is not None:
            mean, std = self.normalization
            x = (x - self.dtype.type(mean)) / self.dtype.type(std)
        return x

    def _conv_pass(self, x, training, rng):
        out = x[None, :, :]
        for conv, act, pool, drop in self.blocks:
            out = drop.forward(pool.forward(act.forward(conv.forward(out))), training, rng)
        return out

    def forward(self, features, training: bool = False, rng: np.random.Generator | None = None):
        """Class probabilities for one spectrogram; dropout only when training."""
        x = self._prepare_input(features)
        out = self._conv_pass(x, training, rng)
        seq = out[:, 0, :].T  # (time, channels)
        hs1 = self.rnn1.forward(seq)
        hs2 = self.rnn2.forward(hs1)
        probs = self.head.forward(hs2[-1])
        self._seq_len = seq.shape[0]
        self._ready = True
        return probs

    def conv_stack_output(self, features):
        """The (channels, time) map the recurrent layers see, dropout off."""
        x = self._prepare_input(features)
        out = self._conv_pass(x, training=False, rng=None)
        return out[:, 0, :]

    def backward(self, label: int):
        """Accumulate gradients of the cross-entropy loss at ``label``.

        Must follow a forward pass; each forward permits one backward.
        Returns the ordered gradient list (aliasing the layers' .grads).
        """
        if not self._ready:
            raise StateError("backward called without a completed forward pass")
        self._ready = False
        dlast = self.head.backward_from_label(int(label))
        grad_hs2 = np.zeros((self._seq_len, self.config.rnn_hidden[1]), dtype=self.dtype)
        grad_hs2[-1] = dlast
        grad_hs1 = self.rnn2.backward(grad_hs2)
        grad_seq = self.rnn1.backward(grad_hs1)
        g = np.ascontiguousarray(grad_seq.T)[:, None, :]
        for conv, act, pool, drop in reversed(self.blocks):
            g = conv.backward(act.backward(pool.backward(drop.backward(g))))
        return self.grad_arrays()

    def loss(self, features, label: int, training: bool = False, rng=None) -> float:
        """Cross-entropy of one sample (forward only)."""
        return cross_entropy(self.forward(features, training=training, rng=rng), label)


def build_crnn(config: ModelConfig, seed: int, dtype=np.float32) -> CrnnModel:
    """Deterministically initialize a model: same seed, same bits."""
    return CrnnModel(config, np.random.default_rng(seed), dtype=dtype)


# ---------------------------------------------------------------------------
# checkpoint container: magic, JSON header, raw <f4 blocks, CRC-32 of blocks

def save_checkpoint(model: CrnnModel, path: str) -> None:
    named = model.named_params()
    header = {
        "format_version": 1,
        "config": model.config.to_dict(),
        "label_convention": {str(i): n for i, n in enumerate(label_names(model.config.n_classes))},
        "normalization": (
            None
            if model.normalization is None
            else {"mean": float(model.normalization[0]), "std": float(model.normalization[1])}
        ),
        "params": [[name, list(arr.shape)] for name, arr in named],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = b"".join(np.ascontiguousarray(arr, dtype="<f4").tobytes() for _n, arr in named)
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(blob)
        fh.write(struct.pack("<I", zlib.crc32(blob)))


def load_checkpoint(path: str, dtype=np.float32) -> CrnnModel:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    if len(raw) < len(_CKPT_MAGIC) + 4 or raw[: len(_CKPT_MAGIC)] != _CKPT_MAGIC:
        raise CheckpointError(f"{path}: not a model checkpoint")
    offset = len(_CKPT_MAGIC)
    (header_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if offset + header_len > len(raw):
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header: {exc}") from exc
    offset += header_len

    if header.get("format_version") != 1:
        raise CheckpointError(f"{path}: unsupported format version {header.get('format_version')}")

    config = ModelConfig.from_dict(header["config"])
    param_spec = header["params"]
    blob_len = sum(int(np.prod(shape)) for _name, shape in param_spec) * 4
    if len(raw) != offset + blob_len + 4:
        raise CheckpointError(f"{path}: truncated or oversized parameter section")
    blob = raw[offset : offset + blob_len]
    (crc_stored,) = struct.unpack_from("<I", raw, offset + blob_len)
    if zlib.crc32(blob) != crc_stored:
        raise CheckpointError(f"{path}: parameter checksum mismatch")

    model = build_crnn(config, seed=0, dtype=dtype)
    names = [name for name, _arr in model.named_params()]
    if names != [name for name, _shape in param_spec]:
        raise CheckpointError(f"{path}: parameter layout does not match the configuration")

    cursor = 0
    arrays = []
    for _name, shape in param_spec:
        n = int(np.prod(shape))
        arrays.append(np.frombuffer(blob, dtype="<f4", count=n, offset=cursor).reshape(shape))
        cursor += n * 4
    model.set_params(arrays)

    norm = header.get("normalization")
    model.normalization = None if norm is None else (float(norm["mean"]), float(norm["std"]))
    return model
