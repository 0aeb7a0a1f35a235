"""Minimal reverse-mode automatic differentiation over numpy arrays.

A :class:`Tensor` wraps an ndarray; operations executed while a
:class:`Tape` is active record backward closures, and
``Tape.gradient(scalar, inputs)`` replays them in reverse.  Ops executed
with no active tape are plain numpy calls, so inference pays no autodiff
overhead.

Backward closures capture the minimum state needed for input gradients:
a linear layer whose parameters do not require gradients never retains
its activations, ReLU keeps a boolean mask instead of its output, and
layer normalization keeps only the standardized values.  This keeps the
memory of a full batched-GNN gradient evaluation near the size of its
saved normalization states rather than the whole forward graph.

Also here: the temperature-weighted soft maximum, binary cross-entropy,
the Adam update rule, and a finite-difference gradient checker.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field

import numpy as np


class DiffcoreError(ValueError):
    """Base class for differentiable-core errors."""


class ShapeMismatchError(DiffcoreError):
    """Operand shapes are incompatible."""


class NotScalarOutputError(DiffcoreError):
    """Gradients require a scalar (size-1) output."""


class InputNotOnTapeError(DiffcoreError):
    """A gradient was requested for a tensor the tape never saw."""


class EmptyVectorError(DiffcoreError):
    """An operation requiring a non-empty tensor received an empty one."""


class NonPositiveTemperatureError(DiffcoreError):
    """The soft-maximum temperature must be strictly positive."""


_uid_counter = itertools.count()
_tls = threading.local()


def _tape_stack() -> list:
    stack = getattr(_tls, "stack", None)
    if stack is None:
        stack = []
        _tls.stack = stack
    return stack


def _active_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """A 64-bit (by default) ndarray participating in autodiff.

    ``requires_grad`` marks a leaf whose gradient may later be requested;
    derived tensors inherit the flag from their inputs.
    """

    __slots__ = ("data", "requires_grad", "_uid")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self._uid = next(_uid_counter)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(value, dtype=None) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value, dtype=dtype)


class Tape:
    """Records operations for one reverse-mode gradient computation.

    Use as a context manager; ops run inside the block are recorded (on
    the innermost active tape only).  A tape belongs to a single thread.
    """

    def __init__(self):
        self._ops: list[tuple[int, object]] = []
        self._seen: set[int] = set()

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _tape_stack().pop()
        assert popped is self
        return False

    def _record(self, out: Tensor, grad_inputs: list[Tensor], backward) -> None:
        self._ops.append((out._uid, backward))
        self._seen.add(out._uid)
        for t in grad_inputs:
            self._seen.add(t._uid)

    def gradient(self, output: Tensor, inputs):
        """Gradients of a recorded scalar with respect to ``inputs``.

        Args:
            output: Scalar tensor computed under this tape.
            inputs: One tensor or a sequence of tensors.

        Returns:
            One ndarray (or a list matching ``inputs``), each shaped like
            the corresponding input.  An input that was recorded but does
            not influence the output gets a zero gradient.

        Raises:
            NotScalarOutputError: ``output`` is not size-1.
            InputNotOnTapeError: an input never appeared on this tape
                (typically it was created without ``requires_grad``).
        """
        single = isinstance(inputs, Tensor)
        wanted = [inputs] if single else list(inputs)
        if output.size != 1:
            raise NotScalarOutputError(f"output has shape {output.shape}; expected a scalar")

        grads: dict[int, np.ndarray] = {output._uid: np.ones_like(output.data)}
        for i in range(len(self._ops) - 1, -1, -1):
            uid, backward = self._ops[i]
            g = grads.pop(uid, None)
            if g is None:
                continue
            for in_uid, gin in backward(g):
                acc = grads.get(in_uid)
                grads[in_uid] = gin if acc is None else acc + gin

        results = []
        for t in wanted:
            if t._uid == output._uid:
                results.append(np.ones_like(t.data))
                continue
            if t._uid not in self._seen:
                raise InputNotOnTapeError(
                    "input was never recorded on this tape; create it with "
                    "requires_grad=True and use it inside the tape context"
                )
            g = grads.get(t._uid)
            results.append(np.zeros_like(t.data) if g is None else np.asarray(g))
        return results[0] if single else results


def _finish(out_data, grad_inputs: list[Tensor], make_backward) -> Tensor:
    """Wraps op output; records backward only when needed."""
    tracked = [t for t in grad_inputs if t.requires_grad]
    out = Tensor(out_data, requires_grad=bool(tracked))
    tape = _active_tape()
    if tape is not None and tracked:
        tape._record(out, tracked, make_backward(out))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sums a gradient over axes that were broadcast in the forward op."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def backward(out):
        def run(g):
            pairs = []
            if a.requires_grad:
                pairs.append((a._uid, _unbroadcast(g, a.shape)))
            if b.requires_grad:
                pairs.append((b._uid, _unbroadcast(g, b.shape)))
            return pairs

        return run

    return _finish(data, [a, b], backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data - b.data

    def backward(out):
        def run(g):
            pairs = []
            if a.requires_grad:
                pairs.append((a._uid, _unbroadcast(g, a.shape)))
            if b.requires_grad:
                pairs.append((b._uid, _unbroadcast(-g, b.shape)))
            return pairs

        return run

    return _finish(data, [a, b], backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def backward(out):
        a_data = a.data if b.requires_grad else None
        b_data = b.data if a.requires_grad else None

        def run(g):
            pairs = []
            if a.requires_grad:
                pairs.append((a._uid, _unbroadcast(g * b_data, a.shape)))
            if b.requires_grad:
                pairs.append((b._uid, _unbroadcast(g * a_data, b.shape)))
            return pairs

        return run

    return _finish(data, [a, b], backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data / b.data

    def backward(out):
        a_data, b_data = a.data, b.data

        def run(g):
            pairs = []
            if a.requires_grad:
                pairs.append((a._uid, _unbroadcast(g / b_data, a.shape)))
            if b.requires_grad:
                pairs.append((b._uid, _unbroadcast(-g * a_data / (b_data * b_data), b.shape)))
            return pairs

        return run

    return _finish(data, [a, b], backward)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _finish(-a.data, [a], lambda out: lambda g: [(a._uid, -g)])


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    p = float(exponent)
    data = a.data**p

    def backward(out):
        base = a.data

        def run(g):
            return [(a._uid, g * p * base ** (p - 1.0))]

        return run

    return _finish(data, [a], backward)


def exp(a) -> Tensor:
    a = as_tensor(a)
    data = np.exp(a.data)

    def backward(out):
        y = out.data
        return lambda g: [(a._uid, g * y)]

    return _finish(data, [a], backward)


def log(a) -> Tensor:
    a = as_tensor(a)
    data = np.log(a.data)

    def backward(out):
        x = a.data
        return lambda g: [(a._uid, g / x)]

    return _finish(data, [a], backward)


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    data = np.sqrt(a.data)

    def backward(out):
        y = out.data
        return lambda g: [(a._uid, g * 0.5 / y)]

    return _finish(data, [a], backward)


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp with straight-through gradient inside [lo, hi], zero outside."""
    a = as_tensor(a)
    data = np.clip(a.data, lo, hi)

    def backward(out):
        mask = (a.data > lo) & (a.data < hi)
        return lambda g: [(a._uid, g * mask)]

    return _finish(data, [a], backward)


# ---------------------------------------------------------------------------
# reductions and shape ops


def tensor_sum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(out):
        shape = a.shape

        def run(g):
            gx = g
            if axis is not None and not keepdims:
                gx = np.expand_dims(gx, axis)
            return [(a._uid, np.broadcast_to(gx, shape))]

        return run

    return _finish(data, [a], backward)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    data = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.size if axis is None else a.shape[axis]

    def backward(out):
        shape = a.shape

        def run(g):
            gx = g
            if axis is not None and not keepdims:
                gx = np.expand_dims(gx, axis)
            return [(a._uid, np.broadcast_to(gx, shape) / count)]

        return run

    return _finish(data, [a], backward)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    data = a.data.reshape(shape)

    def backward(out):
        orig = a.shape
        return lambda g: [(a._uid, g.reshape(orig))]

    return _finish(data, [a], backward)


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    data = a.data.transpose(axes)

    def backward(out):
        inv = None if axes is None else np.argsort(axes)
        return lambda g: [(a._uid, g.transpose(inv))]

    return _finish(data, [a], backward)


def concat(tensors, axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in ts], axis=axis)

    def backward(out):
        sizes = [t.shape[axis] for t in ts]
        splits = np.cumsum(sizes[:-1])

        def run(g):
            parts = np.split(g, splits, axis=axis)
            return [(t._uid, p) for t, p in zip(ts, parts) if t.requires_grad]

        return run

    return _finish(data, ts, backward)


def matmul(a, b) -> Tensor:
    """Matrix product with numpy batch-broadcast semantics (ndim >= 2)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeMismatchError("matmul operands must have ndim >= 2")
    data = a.data @ b.data

    def backward(out):
        a_data = a.data if b.requires_grad else None
        b_data = b.data if a.requires_grad else None

        def run(g):
            pairs = []
            if a.requires_grad:
                ga = g @ b_data.swapaxes(-1, -2)
                pairs.append((a._uid, _unbroadcast(ga, a.shape)))
            if b.requires_grad:
                gb = a_data.swapaxes(-1, -2) @ g
                pairs.append((b._uid, _unbroadcast(gb, b.shape)))
            return pairs

        return run

    return _finish(data, [a, b], backward)


# ---------------------------------------------------------------------------
# neural-network primitives


def affine(x, weights, bias=None) -> Tensor:
    """Dense layer ``y = x @ W.T + b`` over the trailing axis.

    Args:
        x: Input of shape ``[..., n_in]``.
        weights: ``[n_out, n_in]``.
        bias: ``[n_out]`` or None.

    The input activation is retained for backward only when the weight
    tensor itself requires a gradient.
    """
    x, weights = as_tensor(x), as_tensor(weights)
    bias = None if bias is None else as_tensor(bias)
    if weights.ndim != 2 or x.shape[-1] != weights.shape[1]:
        raise ShapeMismatchError(
            f"affine: x trailing dim {x.shape[-1:]} vs weights {weights.shape}"
        )
    if bias is not None and bias.shape != (weights.shape[0],):
        raise ShapeMismatchError(f"affine: bias shape {bias.shape} vs out dim {weights.shape[0]}")

    n_in = weights.shape[1]
    n_out = weights.shape[0]
    xm = x.data.reshape(-1, n_in)
    out_data = xm @ weights.data.T
    if bias is not None:
        out_data += bias.data
    out_data = out_data.reshape(x.shape[:-1] + (n_out,))

    def backward(out):
        w_data = weights.data
        x_saved = xm if weights.requires_grad else None

        def run(g):
            g2 = g.reshape(-1, n_out)
            pairs = []
            if x.requires_grad:
                pairs.append((x._uid, (g2 @ w_data).reshape(x.shape)))
            if weights.requires_grad:
                pairs.append((weights._uid, g2.T @ x_saved))
            if bias is not None and bias.requires_grad:
                pairs.append((bias._uid, g2.sum(axis=0)))
            return pairs

        return run

    inputs = [x, weights] + ([bias] if bias is not None else [])
    return _finish(out_data, inputs, backward)


def affine_sum(xs, weights, bias=None) -> Tensor:
    """Dense layer over the concatenation of several inputs.

    Equivalent to ``affine(concat(xs, -1), W, b)`` but never materializes
    the concatenation: the weight matrix is split along its input axis and
    each piece multiplies its input separately.  Inputs may broadcast
    against each other over leading axes.
    """
    xs = [as_tensor(x) for x in xs]
    weights = as_tensor(weights)
    bias = None if bias is None else as_tensor(bias)
    widths = [x.shape[-1] for x in xs]
    if weights.ndim != 2 or sum(widths) != weights.shape[1]:
        raise ShapeMismatchError(
            f"affine_sum: input widths {widths} do not tile weights {weights.shape}"
        )
    n_out = weights.shape[0]
    offsets = np.concatenate([[0], np.cumsum(widths)])

    out_data = None
    for x, lo, hi in zip(xs, offsets[:-1], offsets[1:]):
        w_part = weights.data[:, lo:hi]
        y = (x.data.reshape(-1, hi - lo) @ w_part.T).reshape(x.shape[:-1] + (n_out,))
        out_data = y if out_data is None else out_data + y
    if bias is not None:
        out_data = out_data + bias.data

    def backward(out):
        w_data = weights.data
        saved = [x.data if weights.requires_grad else None for x in xs]
        out_shape = out.shape

        def run(g):
            g2 = g.reshape(-1, n_out)
            pairs = []
            for x, x_data, lo, hi in zip(xs, saved, offsets[:-1], offsets[1:]):
                if x.requires_grad:
                    gx = (g2 @ w_data[:, lo:hi]).reshape(out_shape[:-1] + (hi - lo,))
                    pairs.append((x._uid, _unbroadcast(gx, x.shape)))
            if weights.requires_grad:
                gw = np.empty_like(w_data)
                for x_data, lo, hi in zip(saved, offsets[:-1], offsets[1:]):
                    xb = np.broadcast_to(x_data, out_shape[:-1] + (hi - lo,))
                    gw[:, lo:hi] = g2.T @ xb.reshape(-1, hi - lo)
                pairs.append((weights._uid, gw))
            if bias is not None and bias.requires_grad:
                pairs.append((bias._uid, g2.sum(axis=0)))
            return pairs

        return run

    inputs = xs + [weights] + ([bias] if bias is not None else [])
    return _finish(out_data, inputs, backward)


def relu(x) -> Tensor:
    x = as_tensor(x)
    data = np.maximum(x.data, 0.0)

    def backward(out):
        mask = x.data > 0.0
        return lambda g: [(x._uid, g * mask)]

    return _finish(data, [x], backward)


def sigmoid(x) -> Tensor:
    """Numerically stable logistic function: no overflow for any finite x."""
    x = as_tensor(x)
    e = np.exp(-np.abs(x.data))
    data = np.where(x.data >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))

    def backward(out):
        y = out.data
        return lambda g: [(x._uid, g * y * (1.0 - y))]

    return _finish(data, [x], backward)


LAYER_NORM_EPS = 1e-5


def layer_normalize(x, gain, bias) -> Tensor:
    """Per-vector standardization over the trailing feature axis.

    ``y = (x - mean) / sqrt(var + 1e-5) * gain + bias`` with population
    variance, computed independently for every leading index.
    """
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    f = x.shape[-1]
    if gain.shape != (f,) or bias.shape != (f,):
        raise ShapeMismatchError(
            f"layer_normalize: gain {gain.shape} / bias {bias.shape} vs features {f}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    istd = 1.0 / np.sqrt(var + LAYER_NORM_EPS)
    xhat = xc
    xhat *= istd  # xc is a private temporary
    out_data = xhat * gain.data + bias.data

    def backward(out):
        g_data = gain.data

        def run(g):
            pairs = []
            if x.requires_grad:
                h = g * g_data
                m1 = h.mean(axis=-1, keepdims=True)
                m2 = np.mean(h * xhat, axis=-1, keepdims=True)
                pairs.append((x._uid, (h - m1 - xhat * m2) * istd))
            if gain.requires_grad:
                gg = g * xhat
                pairs.append((gain._uid, gg.reshape(-1, f).sum(axis=0)))
            if bias.requires_grad:
                pairs.append((bias._uid, g.reshape(-1, f).sum(axis=0)))
            return pairs

        return run

    return _finish(out_data, [x, gain, bias], backward)


# ---------------------------------------------------------------------------
# row gather / segment reduction (graph plumbing)


def _segment_plan(idx: np.ndarray, n_segments: int):
    perm = np.argsort(idx, kind="stable")
    sorted_idx = idx[perm]
    starts = np.concatenate([[0], np.flatnonzero(np.diff(sorted_idx)) + 1])
    seg_ids = sorted_idx[starts]
    if seg_ids.size and seg_ids[-1] >= n_segments:
        raise ShapeMismatchError("segment index out of range")
    return perm, starts, seg_ids


def index_rows(x, idx) -> Tensor:
    """Row gather along axis -2: ``out[..., j, :] = x[..., idx[j], :]``."""
    x = as_tensor(x)
    idx = np.asarray(idx, dtype=np.int64)
    data = np.take(x.data, idx, axis=-2)

    def backward(out):
        n_src = x.shape[-2]
        perm, starts, seg_ids = _segment_plan(idx, n_src)

        def run(g):
            gathered = np.take(g, perm, axis=-2)
            sums = np.add.reduceat(gathered, starts, axis=-2)
            gx = np.zeros(g.shape[:-2] + (n_src, g.shape[-1]), dtype=g.dtype)
            gx[..., seg_ids, :] = sums
            return [(x._uid, gx)]

        return run

    return _finish(data, [x], backward)


def segment_sum(x, idx, n_segments: int) -> Tensor:
    """Sums rows of ``x`` (axis -2) into ``n_segments`` buckets by ``idx``.

    Buckets receiving no rows are zero vectors.
    """
    x = as_tensor(x)
    idx = np.asarray(idx, dtype=np.int64)
    if idx.shape != (x.shape[-2],):
        raise ShapeMismatchError(f"segment_sum: idx length {idx.shape} vs rows {x.shape[-2]}")
    perm, starts, seg_ids = _segment_plan(idx, n_segments)
    xs = np.take(x.data, perm, axis=-2)
    sums = np.add.reduceat(xs, starts, axis=-2)
    data = np.zeros(x.shape[:-2] + (n_segments, x.shape[-1]), dtype=x.dtype)
    data[..., seg_ids, :] = sums

    def backward(out):
        def run(g):
            return [(x._uid, np.take(g, idx, axis=-2))]

        return run

    return _finish(data, [x], backward)


# ---------------------------------------------------------------------------
# objectives


def soft_maximum(x, tau: float) -> Tensor:
    """Temperature-weighted smooth maximum of all elements.

    ``sum_i x_i * exp(x_i / tau) / sum_j exp(x_j / tau)``, evaluated with
    max-subtraction so large ``x / tau`` ratios cannot overflow.  Equals
    the mean for large tau and approaches the hard maximum as tau -> 0+.
    """
    x = as_tensor(x)
    if x.size == 0:
        raise EmptyVectorError("soft_maximum of an empty tensor")
    if not tau > 0.0:
        raise NonPositiveTemperatureError(f"temperature must be positive, got {tau}")
    # shifting by the (detached) max leaves both value and gradient intact
    shift = float(x.data.max())
    e = exp(mul(sub(x, shift), 1.0 / tau))
    return div(tensor_sum(mul(x, e)), tensor_sum(e))


BCE_CLAMP = 1e-7


def binary_cross_entropy(p, labels) -> Tensor:
    """Mean binary cross-entropy between probabilities and 0/1 labels.

    Probabilities are clamped to ``[1e-7, 1 - 1e-7]`` so confidently wrong
    predictions yield a large finite loss instead of infinity.
    """
    p = as_tensor(p)
    y = np.asarray(labels.data if isinstance(labels, Tensor) else labels, dtype=p.dtype)
    if y.shape != p.shape:
        raise ShapeMismatchError(f"labels shape {y.shape} vs predictions {p.shape}")
    pc = clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    term = add(mul(y, log(pc)), mul(1.0 - y, log(sub(1.0, pc))))
    return neg(mean(term))


# ---------------------------------------------------------------------------
# Adam optimizer


@dataclass
class AdamState:
    """First/second-moment accumulators for a named parameter set."""

    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params: dict) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            step=0,
        )


def adam_step(
    state: AdamState,
    params: dict,
    grads: dict,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[AdamState, dict]:
    """One Adam update with bias correction; parameters update in place."""
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatchError(f"grad shape {g.shape} vs param {p.shape} for {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state, params


# ---------------------------------------------------------------------------
# verification utility


def finite_difference_check(f, x: np.ndarray, h: float = 1e-5) -> float:
    """Max relative error of the taped gradient versus central differences.

    Args:
        f: Callable mapping one Tensor to a scalar Tensor.
        x: Point at which to compare, any shape.
        h: Central-difference step.

    Returns:
        ``max_i |analytic_i - fd_i| / (|analytic_i| + 1e-12)``.
    """
    x = np.asarray(x, dtype=np.float64)
    xt = Tensor(x.copy(), requires_grad=True)
    with Tape() as tape:
        y = f(xt)
    analytic = tape.gradient(y, xt)

    flat = x.copy()
    view = flat.ravel()
    fd = np.zeros_like(view)
    for i in range(view.size):
        orig = view[i]
        view[i] = orig + h
        fp = float(f(Tensor(flat.copy())).data)
        view[i] = orig - h
        fm = float(f(Tensor(flat.copy())).data)
        view[i] = orig
        fd[i] = (fp - fm) / (2.0 * h)
    fd = fd.reshape(x.shape)
    return float(np.max(np.abs(analytic - fd) / (np.abs(analytic) + 1e-12)))
