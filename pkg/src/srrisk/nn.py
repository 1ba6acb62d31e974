"""Dense ReLU networks with hand-written reverse-mode gradients.

Weights are stored ``(out, in)``. Inputs may be a single vector ``(d,)`` or a
batch ``(B, d)``. Hidden layers use ReLU with subgradient 0 at 0; the last
layer is affine and yields logits.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, FormatError, LengthError, NumericError, ShapeError
from .metrics import LossSpec, loss_and_logit_grad
from .rng import Purpose, branch

# Fixed row-block height for evaluation. BLAS results for a row depend on the
# shape of the gemm call, so padding every call to this height makes per-row
# outputs independent of how a dataset is partitioned.
EVAL_BLOCK = 256


@dataclass
class Network:
    weights: list
    biases: list

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("need one bias per weight matrix and at least one layer")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"layer {k}: weight {w.shape} incompatible with bias {b.shape}")
            if k and w.shape[1] != self.weights[k - 1].shape[0]:
                raise ShapeError(f"layer {k} expects {w.shape[1]} inputs, previous layer gives {self.weights[k - 1].shape[0]}")

    @property
    def layer_sizes(self) -> list:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def dtype(self):
        return self.weights[0].dtype

    def params(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "Network":
        return Network([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def astype(self, dtype) -> "Network":
        return Network([w.astype(dtype) for w in self.weights], [b.astype(dtype) for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.params())

    def same_params(self, other: "Network") -> bool:
        """Bit-level equality of all parameters."""
        a, b = self.params(), other.params()
        return len(a) == len(b) and all(
            x.dtype == y.dtype and x.shape == y.shape and x.tobytes() == y.tobytes() for x, y in zip(a, b)
        )


@dataclass
class ParamGrads:
    weights: list
    biases: list

    def params(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


@dataclass
class SgdState:
    lr: float = 0.1
    momentum: float = 0.9
    velocity: list = field(default=None)

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.lr}")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError(f"momentum must lie in [0, 1), got {self.momentum}")


def init_network(layer_sizes, seed: int, dtype=np.float64) -> Network:
    """He-initialised network; biases start at zero."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ConfigurationError(f"need at least input and output sizes, got {sizes}")
    if any(s < 1 for s in sizes):
        raise ConfigurationError(f"layer sizes must be positive, got {sizes}")
    rng = branch(seed, Purpose.INIT)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
        weights.append(w.astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return Network(weights, biases)


def _as_batch(net: Network, x):
    x = np.asarray(x)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != net.weights[0].shape[1]:
        raise ShapeError(f"input shape {x.shape} does not match network input size {net.weights[0].shape[1]}")
    if not np.isfinite(xb).all():
        raise NumericError("non-finite network input")
    return xb.astype(net.dtype, copy=False), single


def _forward_cache(net: Network, xb):
    pre, acts = [], [xb]
    a = xb
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        pre.append(z)
        a = z if k == last else np.maximum(z, 0)
        if k != last:
            acts.append(a)
    return pre, acts


def _blocked(fn, xb, block):
    """Apply ``fn`` row-blockwise with zero padding to exactly ``block`` rows."""
    n = xb.shape[0]
    outs = []
    for start in range(0, n, block):
        chunk = xb[start:start + block]
        m = chunk.shape[0]
        if m < block:
            pad = np.zeros((block - m, xb.shape[1]), dtype=xb.dtype)
            chunk = np.concatenate([chunk, pad])
        outs.append(fn(chunk)[:m])
    if not outs:
        return fn(xb)
    return np.concatenate(outs)


def forward(net: Network, x, block: int = None):
    """Logits for one input or a batch.

    With ``block`` set, rows are evaluated in fixed-height padded blocks so the
    result for a row is the same whatever batch it arrives in.
    """
    xb, single = _as_batch(net, x)
    if block:
        out = _blocked(lambda c: _forward_cache(net, c)[0][-1], xb, block)
    else:
        out = _forward_cache(net, xb)[0][-1]
    return out[0] if single else out


def softmax(logits):
    z = np.asarray(logits, dtype=float)
    if not np.isfinite(z).all():
        raise NumericError("non-finite logits")
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _backprop(net, pre, acts, dlogits, want_params=True):
    dz = dlogits
    gw, gb = [None] * len(net.weights), [None] * len(net.weights)
    dx = None
    for k in range(len(net.weights) - 1, -1, -1):
        if want_params:
            gw[k] = dz.T @ acts[k]
            gb[k] = dz.sum(axis=0)
        da = dz @ net.weights[k]
        if k == 0:
            dx = da
        else:
            dz = da * (pre[k - 1] > 0)
    return gw, gb, dx


def backward_params(net: Network, x, y, loss: LossSpec):
    """Loss and exact parameter gradients.

    For a batch, both are averaged over rows.
    """
    xb, single = _as_batch(net, x)
    yb = np.atleast_1d(y)
    pre, acts = _forward_cache(net, xb)
    values, dlogits = loss_and_logit_grad(loss, pre[-1], yb)
    n = xb.shape[0]
    dlogits = (dlogits / n).astype(net.dtype, copy=False)
    gw, gb, _ = _backprop(net, pre, acts, dlogits)
    return float(values.mean()), ParamGrads(gw, gb)


def grad_input(net: Network, x, y, loss: LossSpec, block: int = None):
    """Gradient of each row's own loss with respect to that row's input."""
    xb, single = _as_batch(net, x)
    yb = np.atleast_1d(y)
    if yb.shape != (xb.shape[0],):
        raise ShapeError(f"{xb.shape[0]} inputs but {yb.shape} labels")

    def rows(chunk, ychunk):
        pre, acts = _forward_cache(net, chunk)
        _, dlogits = loss_and_logit_grad(loss, pre[-1], ychunk)
        return _backprop(net, pre, acts, dlogits.astype(net.dtype, copy=False), want_params=False)[2]

    if block:
        outs = []
        for start in range(0, xb.shape[0], block):
            chunk, ychunk = xb[start:start + block], yb[start:start + block]
            m = chunk.shape[0]
            if m < block:
                chunk = np.concatenate([chunk, np.zeros((block - m, xb.shape[1]), dtype=xb.dtype)])
                ychunk = np.concatenate([ychunk, np.zeros(block - m, dtype=ychunk.dtype)])
            outs.append(rows(chunk, ychunk)[:m])
        g = np.concatenate(outs) if outs else rows(xb, yb)
    else:
        g = rows(xb, yb)
    return g[0] if single else g


def sgd_step(net: Network, grads: ParamGrads, state: SgdState):
    """Momentum SGD in place: ``v <- mu v + g``, ``theta <- theta - lr v``."""
    params, gparams = net.params(), grads.params()
    if len(params) != len(gparams) or any(p.shape != g.shape for p, g in zip(params, gparams)):
        raise ShapeError("gradient shapes do not match the network")
    if not all(np.isfinite(g).all() for g in gparams):
        raise NumericError("non-finite gradient")
    if state.velocity is None:
        state.velocity = [np.zeros_like(p) for p in params]
    elif any(v.shape != p.shape for v, p in zip(state.velocity, params)):
        raise ShapeError("velocity buffers do not match the network")
    for p, g, v in zip(params, gparams, state.velocity):
        v *= state.momentum
        v += g
        p -= state.lr * v
    return net, state


_MAGIC = b"SRRNET"
_VERSION = 1
_DTYPES = {np.dtype("<f8"): 8, np.dtype("<f4"): 4}


def dumps_network(net: Network) -> bytes:
    """Versioned binary container: header, layer sizes, row-major weights and biases."""
    dt = np.dtype(net.dtype).newbyteorder("<")
    if dt not in _DTYPES:
        raise ConfigurationError(f"cannot serialise dtype {net.dtype}")
    sizes = net.layer_sizes
    head = _MAGIC + struct.pack("<HBI", _VERSION, _DTYPES[dt], len(sizes)) + struct.pack(f"<{len(sizes)}I", *sizes)
    body = b"".join(np.ascontiguousarray(p, dtype=dt).tobytes() for p in net.params())
    return head + body


def loads_network(data: bytes) -> Network:
    if not data.startswith(_MAGIC):
        raise FormatError("not a serialised network")
    off = len(_MAGIC)
    try:
        version, width, n = struct.unpack_from("<HBI", data, off)
        off += struct.calcsize("<HBI")
        sizes = struct.unpack_from(f"<{n}I", data, off)
    except struct.error as exc:
        raise LengthError("truncated network header") from exc
    if version != _VERSION:
        raise FormatError(f"unsupported network format version {version}")
    off += 4 * n
    dt = {8: np.dtype("<f8"), 4: np.dtype("<f4")}.get(width)
    if dt is None:
        raise FormatError(f"unknown element width {width}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        for shape, bucket in (((fan_out, fan_in), weights), ((fan_out,), biases)):
            count = int(np.prod(shape))
            end = off + count * width
            if end > len(data):
                raise LengthError("truncated network body")
            bucket.append(np.frombuffer(data, dtype=dt, count=count, offset=off).reshape(shape).astype(dt.newbyteorder("=")))
            off = end
    if off != len(data):
        raise FormatError("trailing bytes after network body")
    return Network(weights, biases)


def save_network(net: Network, path) -> None:
    with open(path, "wb") as f:
        f.write(dumps_network(net))


def load_network(path) -> Network:
    with open(path, "rb") as f:
        return loads_network(f.read())
