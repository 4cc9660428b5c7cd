"""Dense float64 tensors with reverse-mode differentiation, Adam and checkpoints.

A :class:`Tensor` produced by an op remembers its parents and a closure that
pushes its gradient back to them. :meth:`Tensor.backward` orders the recorded
graph topologically (the tape) and replays it in reverse. Ops never mutate
their inputs.
"""

from __future__ import annotations

import json
import struct
import threading
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import kernels


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, value, requires_grad=False, name=None):
        self.value = np.array(value, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self.name = name

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def T(self):
        return transpose(self)

    def numpy(self):
        return self.value.copy()

    def item(self):
        return float(self.value)

    def detach(self):
        return Tensor(self.value)

    def zero_grad(self):
        self.grad = None

    __add__ = lambda self, other: add(self, other)  # noqa: E731
    __radd__ = lambda self, other: add(other, self)  # noqa: E731
    __sub__ = lambda self, other: sub(self, other)  # noqa: E731
    __rsub__ = lambda self, other: sub(other, self)  # noqa: E731
    __mul__ = lambda self, other: mul(self, other)  # noqa: E731
    __rmul__ = lambda self, other: mul(other, self)  # noqa: E731
    __truediv__ = lambda self, other: div(self, other)  # noqa: E731
    __rtruediv__ = lambda self, other: div(other, self)  # noqa: E731
    __matmul__ = lambda self, other: matmul(self, other)  # noqa: E731
    __neg__ = lambda self: scale(self, -1.0)  # noqa: E731

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into ``.grad`` of every leaf that requires it."""
        if grad is None:
            if self.value.size != 1:
                raise ValueError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.value)
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.shape:
            raise ValueError(f"seed gradient shape {grad.shape} does not match {self.shape}")

        order = _topological(self)
        grads = {id(self): grad}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg


def _topological(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in reversed(node._parents):
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


_state = threading.local()


@contextmanager
def no_grad():
    """Evaluate without recording the tape (per thread)."""
    prev = getattr(_state, "disabled", False)
    _state.disabled = True
    try:
        yield
    finally:
        _state.disabled = prev


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(value, parents, backward):
    out = Tensor(value)
    if not getattr(_state, "disabled", False) and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a, b, op):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}") from None


# ---------------------------------------------------------------------------
# elementwise arithmetic (numpy broadcasting)
# ---------------------------------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")
    return _make(a.value + b.value, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")
    return _make(a.value - b.value, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")
    av, bv = a.value, b.value
    return _make(av * bv, (a, b), lambda g: (_unbroadcast(g * bv, a.shape), _unbroadcast(g * av, b.shape)))


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "div")
    av, bv = a.value, b.value
    out = av / bv
    return _make(out, (a, b), lambda g: (_unbroadcast(g / bv, a.shape), _unbroadcast(-g * out / bv, b.shape)))


def scale(a, alpha: float):
    a = as_tensor(a)
    alpha = float(alpha)
    return _make(a.value * alpha, (a,), lambda g: (g * alpha,))


def broadcast_add_row(x, row):
    """``x + row`` where ``row`` has shape ``(d,)`` or ``(1, d)`` and ``x`` is ``(n, d)``."""
    x, row = as_tensor(x), as_tensor(row)
    if x.ndim != 2 or row.value.reshape(-1).shape[0] != x.shape[1] or row.ndim > 2:
        raise ValueError(f"broadcast_add_row: shape mismatch {x.shape} vs {row.shape}")
    return add(x, row)


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------


def relu(a):
    a = as_tensor(a)
    mask = a.value > 0
    return _make(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softplus(a):
    """``log(1 + exp(a))`` evaluated without overflow."""
    a = as_tensor(a)
    x = a.value
    return _make(np.logaddexp(0.0, x), (a,), lambda g: (g * _sigmoid(x),))


def log(a):
    a = as_tensor(a)
    x = a.value
    return _make(np.log(x), (a,), lambda g: (g / x,))


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.value)
    return _make(out, (a,), lambda g: (g * out,))


def square(a):
    a = as_tensor(a)
    x = a.value
    return _make(x * x, (a,), lambda g: (2.0 * g * x,))


def clip_min(a, floor: float):
    """``max(a, floor)``; gradient passes only where ``a > floor``."""
    a = as_tensor(a)
    mask = a.value > floor
    return _make(np.where(mask, a.value, floor), (a,), lambda g: (g * mask,))


# ---------------------------------------------------------------------------
# reductions and shape ops
# ---------------------------------------------------------------------------


def sum(a, axis=None, keepdims=False):  # noqa: A001
    a = as_tensor(a)
    out = a.value.sum(axis=axis, keepdims=keepdims)
    shape = a.shape

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _make(out, (a,), backward)


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    count = a.value.size if axis is None else a.shape[axis]
    return scale(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: shape mismatch {a.shape} @ {b.shape}")
    av, bv = a.value, b.value
    return _make(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def transpose(a):
    a = as_tensor(a)
    if a.ndim != 2:
        raise ValueError("transpose expects a matrix")
    return _make(a.value.T.copy(), (a,), lambda g: (g.T.copy(),))


def reshape(a, shape):
    a = as_tensor(a)
    old = a.shape
    return _make(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.value for t in tensors], axis=axis)
    except ValueError as exc:
        raise ValueError(f"concat: {exc}") from None
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g):
        index = [slice(None)] * g.ndim
        pieces = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            index[axis] = slice(lo, hi)
            pieces.append(g[tuple(index)].copy())
        return tuple(pieces)

    return _make(out, tensors, backward)


def concat_rows(tensors):
    return concat(tensors, axis=0)


def concat_cols(tensors):
    return concat(tensors, axis=1)


def segment_sum(a, segment_ids, num_segments: int):
    """Row ``s`` of the result is the sum of rows of ``a`` with ``segment_ids == s``."""
    a = as_tensor(a)
    ids = np.asarray(segment_ids, dtype=np.int64)
    if a.ndim != 2 or ids.shape != (a.shape[0],):
        raise ValueError("segment_sum: need a matrix and one segment id per row")
    if len(ids) and (ids.min() < 0 or ids.max() >= num_segments):
        raise IndexError("segment id out of range")
    out = kernels.segment_sum(a.value, ids, num_segments)
    return _make(out, (a,), lambda g: (g[ids],))


def gather_rows(a, index):
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.int64)
    n = a.shape[0]

    def backward(g):
        return (kernels.segment_sum(g, index, n),)

    return _make(a.value[index], (a,), backward)


def self_neighbor_sum(a, indptr, indices):
    """``out[v] = a[v] + sum of a[u] over neighbours u``; adjacency must be symmetric."""
    a = as_tensor(a)
    if a.ndim != 2 or len(indptr) != a.shape[0] + 1:
        raise ValueError("self_neighbor_sum: adjacency does not match the node matrix")
    out = kernels.csr_self_neighbor_sum(indptr, indices, a.value)
    return _make(out, (a,), lambda g: (kernels.csr_self_neighbor_sum(indptr, indices, g),))


# ---------------------------------------------------------------------------
# optimisation
# ---------------------------------------------------------------------------


class Adam:
    """Adam with bias-corrected moments (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params.values()) if isinstance(params, dict) else list(params)
        self.lr = float(lr)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        for p in self.params:
            if p.grad is not None and not np.all(np.isfinite(p.grad)):
                label = p.name or repr(p)
                raise FloatingPointError(f"non-finite gradient in {label}; aborting")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            p.value = p.value - self.lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps)
            p.grad = None

    def zero_grad(self):
        for p in self.params:
            p.grad = None


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

MAGIC = b"DGLCCKPT"
_HEADER_LEN = struct.Struct("<Q")


class CheckpointError(ValueError):
    pass


def save_arrays(path, arrays: dict, meta: dict | None = None) -> Path:
    """Write named float64 arrays.

    Layout: 8-byte magic ``DGLCCKPT``, little-endian uint64 header length, a
    UTF-8 JSON header ``{"format": 1, "tensors": [{"name", "shape", "offset",
    "nbytes"}], "meta": {...}}``, then the raw little-endian float64 payloads in header order.
    Offsets count from the start of the payload section.
    """
    path = Path(path)
    entries, blobs, offset = [], [], 0
    for name, arr in arrays.items():
        data = np.ascontiguousarray(np.asarray(arr, dtype="<f8"))
        blob = data.tobytes()
        entries.append({"name": name, "shape": list(data.shape), "offset": offset, "nbytes": len(blob)})
        blobs.append(blob)
        offset += len(blob)
    header = {"format": 1, "dtype": "<f8", "tensors": entries, "meta": meta or {}}
    header = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER_LEN.pack(len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)
    return path


def load_arrays(path, expected_shapes: dict | None = None) -> dict:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + _HEADER_LEN.size or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    (hlen,) = _HEADER_LEN.unpack_from(raw, len(MAGIC))
    start = len(MAGIC) + _HEADER_LEN.size
    if start + hlen > len(raw):
        raise CheckpointError("truncated checkpoint header")
    try:
        header = json.loads(raw[start : start + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from None
    payload = memoryview(raw)[start + hlen :]
    out = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        lo, n = entry["offset"], entry["nbytes"]
        if n != 8 * int(np.prod(shape, dtype=np.int64)) or lo + n > len(payload):
            raise CheckpointError(f"truncated or inconsistent data for tensor {entry['name']!r}")
        out[entry["name"]] = np.frombuffer(payload[lo : lo + n], dtype="<f8").reshape(shape).astype(np.float64)
    if expected_shapes is not None:
        missing = sorted(set(expected_shapes) - set(out))
        if missing:
            raise CheckpointError(f"checkpoint lacks tensors {missing}")
        for name, shape in expected_shapes.items():
            if tuple(out[name].shape) != tuple(shape):
                raise CheckpointError(
                    f"shape mismatch for tensor {name!r}: checkpoint {out[name].shape}, expected {tuple(shape)}"
                )
    return out
