"""Feed-forward layers with hand-written forward and backward passes.

Everything operates on single samples (no batch axis): convolution input is
(C, H, W), recurrent input is (T, F). Batching is a loop plus gradient
accumulation in the trainer, which keeps shapes exactly as the architecture
diagrams read and makes runs bit-deterministic.

Each layer caches what its backward pass needs during forward; backward
accumulates into ``self.grads`` so a batch can sum gradients before the
optimizer step.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, LabelError, NumericError, ShapeError, StateError

CE_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# initializers

def glorot_uniform(shape, fan_in, fan_out, rng, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def orthogonal(n, rng, dtype):
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    # sign fix makes the decomposition unique, hence seed-deterministic
    return (q * np.sign(np.diag(r))).astype(dtype)


# ---------------------------------------------------------------------------
# functional ops

def _im2col3(x: np.ndarray) -> np.ndarray:
    """Unfold (C, H, W) into (C*9, H*W) columns for 3x3 same convolution."""
    c, h, w = x.shape
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    view = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(1, 2))
    return view.transpose(0, 3, 4, 1, 2).reshape(c * 9, h * w)


def conv2d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Same-convolve (C_in, H, W) with (C_out, C_in, 3, 3) kernels, zero padding."""
    if kernels.ndim != 4 or kernels.shape[2:] != (3, 3):
        raise ShapeError(f"kernels must be (C_out, C_in, 3, 3), got {kernels.shape}")
    if x.ndim != 3 or x.shape[0] != kernels.shape[1]:
        raise ShapeError(f"input {x.shape} does not match kernels {kernels.shape}")
    c_out = kernels.shape[0]
    if bias.shape != (c_out,):
        raise ShapeError(f"bias must be ({c_out},), got {bias.shape}")
    _, h, w = x.shape
    cols = _im2col3(x)
    out = kernels.reshape(c_out, -1) @ cols + bias[:, None]
    return out.reshape(c_out, h, w)


def maxpool2d(x: np.ndarray, kernel: tuple[int, int]):
    """Ceil-mode max pooling; returns (output, argmax) for gradient routing.

    Partial windows at the right/bottom edge pool over their valid elements.
    argmax is the row-major first-occurrence index within each window.
    """
    kh, kw = kernel
    if kh < 1 or kw < 1:
        raise ConfigError(f"pool kernel must be >= 1, got {kernel}")
    c, h, w = x.shape
    h_out, w_out = -(-h // kh), -(-w // kw)
    padded = np.full((c, h_out * kh, w_out * kw), -np.inf, dtype=x.dtype)
    padded[:, :h, :w] = x
    windows = (
        padded.reshape(c, h_out, kh, w_out, kw)
        .transpose(0, 1, 3, 2, 4)
        .reshape(c, h_out, w_out, kh * kw)
    )
    arg = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]
    return out, arg


def maxpool2d_backward(grad_out, arg, kernel, input_shape):
    """Route each output gradient to the recorded argmax position."""
    kh, kw = kernel
    c, h, w = input_shape
    h_out, w_out = grad_out.shape[1], grad_out.shape[2]
    scatter = np.zeros((c, h_out, w_out, kh * kw), dtype=grad_out.dtype)
    np.put_along_axis(scatter, arg[..., None], grad_out[..., None], axis=-1)
    padded = (
        scatter.reshape(c, h_out, w_out, kh, kw)
        .transpose(0, 1, 3, 2, 4)
        .reshape(c, h_out * kh, w_out * kw)
    )
    return padded[:, :h, :w]


def dropout(x: np.ndarray, p: float, training: bool, rng: np.random.Generator | None):
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p).

    Returns (output, mask); mask is None in inference mode.
    """
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x, None
    if rng is None:
        raise StateError("training-mode dropout needs a seeded generator")
    mask = (rng.random(x.shape) >= p).astype(x.dtype)
    return x * mask / (1.0 - p), mask


def elu(x: np.ndarray) -> np.ndarray:
    # expm1 argument capped at 0 so the unused branch cannot overflow
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_backward(grad_out, x, y):
    return grad_out * np.where(x > 0, 1.0, y + 1.0).astype(x.dtype)


def dense_softmax(h: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map to K >= 2 logits followed by a max-subtracted softmax."""
    if weights.ndim != 2 or weights.shape[1] < 2:
        raise ConfigError(f"softmax head needs K >= 2 output nodes, got {weights.shape}")
    if h.shape != (weights.shape[0],) or bias.shape != (weights.shape[1],):
        raise ShapeError(
            f"dense shapes disagree: h {h.shape}, weights {weights.shape}, bias {bias.shape}"
        )
    with np.errstate(invalid="ignore", over="ignore"):  # finiteness checked below
        logits = h @ weights + bias
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits in softmax head")
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """Negative log-likelihood of the true class, floored at 1e-12."""
    label = int(label)
    if not 0 <= label < probs.shape[0]:
        raise LabelError(f"label {label} out of range for {probs.shape[0]} classes")
    return float(-np.log(max(float(probs[label]), CE_FLOOR)))


# ---------------------------------------------------------------------------
# layer classes

class Conv2d:
    """3x3 same convolution, Glorot-uniform kernels, zero bias."""

    param_names = ("kernels", "bias")

    def __init__(self, in_channels, out_channels, rng, dtype=np.float32):
        fan = 9 * in_channels, 9 * out_channels
        self.kernels = glorot_uniform((out_channels, in_channels, 3, 3), *fan, rng, dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)
        self.grads = {n: np.zeros_like(getattr(self, n)) for n in self.param_names}
        self._cache = None

    def forward(self, x):
        out = conv2d(x, self.kernels, self.bias)
        self._cache = (x.shape, _im2col3(x))
        return out

    def backward(self, grad_out):
        if self._cache is None:
            raise StateError("conv backward called before forward")
        in_shape, cols = self._cache
        c_out = self.kernels.shape[0]
        g = grad_out.reshape(c_out, -1)
        self.grads["kernels"] += (g @ cols.T).reshape(self.kernels.shape)
        self.grads["bias"] += g.sum(axis=1)
        # input gradient = same-conv of grad_out with channel-swapped, flipped kernels
        flipped = self.kernels.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1]
        dx = flipped.reshape(in_shape[0], -1) @ _im2col3(grad_out)
        return dx.reshape(in_shape)


class Activation:
    """Pointwise nonlinearity after each convolution: elu, relu or linear."""

    param_names = ()

    def __init__(self, kind: str = "elu"):
        if kind not in ("elu", "relu", "linear"):
            raise ConfigError(f"unknown activation {kind!r}")
        self.kind = kind
        self.grads = {}
        self._cache = None

    def forward(self, x):
        if self.kind == "elu":
            y = elu(x)
        elif self.kind == "relu":
            y = np.maximum(x, 0)
        else:
            y = x
        self._cache = (x, y)
        return y

    def backward(self, grad_out):
        if self._cache is None:
            raise StateError("activation backward called before forward")
        x, y = self._cache
        if self.kind == "elu":
            return elu_backward(grad_out, x, y)
        if self.kind == "relu":
            return grad_out * (x > 0)
        return grad_out


class MaxPool2d:
    param_names = ()

    def __init__(self, kernel: tuple[int, int]):
        self.kernel = (int(kernel[0]), int(kernel[1]))
        self.grads = {}
        self._cache = None

    def forward(self, x):
        out, arg = maxpool2d(x, self.kernel)
        self._cache = (x.shape, arg)
        return out

    def backward(self, grad_out):
        if self._cache is None:
            raise StateError("pool backward called before forward")
        in_shape, arg = self._cache
        return maxpool2d_backward(grad_out, arg, self.kernel, in_shape)


class Dropout:
    param_names = ()

    def __init__(self, p: float):
        if not 0.0 <= p < 1.0:
            raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p
        self.grads = {}
        self._cache = None

    def forward(self, x, training=False, rng=None):
        out, mask = dropout(x, self.p, training, rng)
        self._cache = mask
        return out

    def backward(self, grad_out):
        if self._cache is None:  # inference or p == 0: identity
            return grad_out
        return grad_out * self._cache / (1.0 - self.p)


class DenseSoftmax:
    """Dense layer into K classes with the softmax fused in.

    backward_from_label uses the combined softmax + cross-entropy gradient
    (probs - onehot), which is both faster and numerically exact.
    """

    param_names = ("weights", "bias")

    def __init__(self, in_features, n_classes, rng, dtype=np.float32):
        self.weights = glorot_uniform((in_features, n_classes), in_features, n_classes, rng, dtype)
        self.bias = np.zeros(n_classes, dtype=dtype)
        self.grads = {n: np.zeros_like(getattr(self, n)) for n in self.param_names}
        self._cache = None

    def forward(self, h):
        probs = dense_softmax(h, self.weights, self.bias)
        self._cache = (h, probs)
        return probs

    def backward_from_label(self, label: int):
        if self._cache is None:
            raise StateError("head backward called before forward")
        h, probs = self._cache
        dlogits = probs.astype(self.weights.dtype).copy()
        dlogits[label] -= 1.0
        self.grads["weights"] += np.outer(h, dlogits)
        self.grads["bias"] += dlogits
        return dlogits @ self.weights.T
