"""Reverse-mode automatic differentiation on numpy arrays.

Define-by-run: every operation records a closure that pulls the output
gradient back onto the operands that need it. ``backward`` on a scalar root
replays those closures in reverse creation order, which is a valid
topological order because an operation's output is always created after its
inputs. Gradients accumulate additively, so shared subexpressions just work.

All data is float64. Broadcasting is deliberately narrow: elementwise ops
accept equal shapes or scalar-with-tensor, nothing else; row-wise bias
addition has its own op. Anything outside the contract raises ShapeError
naming the offending shapes.
"""

import itertools

import numpy as np

from . import kernels

__all__ = [
    "Tensor", "ShapeError", "GraphError", "as_tensor", "backward",
    "zero_grads", "matmul", "add", "sub", "mul", "neg", "scale",
    "bias_add", "tanh", "sigmoid", "relu", "softplus", "cos", "sin",
    "square", "sqrt_eps", "reduce_sum", "reduce_mean", "ecf_pair",
    "make_op_output", "accumulate_grad",
]


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


class GraphError(RuntimeError):
    """Backward called on an invalid root or an exhausted graph."""


_ids = itertools.count()


class Tensor:
    """A float64 array plus the bookkeeping reverse mode needs.

    ``requires_grad`` on a leaf marks it as a parameter; on an interior node
    it means gradient flows through. ``grad`` is populated by ``backward``
    and holds an array of the same shape as ``data``.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward",
                 "_id", "_used")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self._id = next(_ids)
        self._used = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, shape is {self.shape}")
        return float(self.data.reshape(()))

    def detach(self):
        """A grad-stopping view of the same data (no copy)."""
        return Tensor(self.data)

    def backward(self):
        backward(self)

    def __repr__(self):
        tag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{tag})"

    # A few operators for readability; the rest are module functions.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def make_op_output(data, parents, backward_fn):
    """Wrap an op result, recording the graph edge only when needed.

    ``parents`` should already be filtered to operands with
    ``requires_grad``; an empty tuple yields a detached constant.
    """
    out = Tensor(data)
    if parents:
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def accumulate_grad(tensor, grad):
    if tensor.grad is None:
        tensor.grad = np.zeros_like(tensor.data)
    tensor.grad += grad


def zero_grads(tensors):
    for t in tensors:
        t.grad = None


def backward(root):
    """Populate ``grad`` on every tensor the scalar ``root`` depends on.

    Raises GraphError for a non-scalar root, a root with no recorded
    operations (nothing to differentiate), or a second call on the same root.
    """
    if root.data.size != 1:
        raise GraphError(f"backward needs a scalar root, got shape {root.shape}")
    if root._backward is None:
        raise GraphError("backward on a tensor with no recorded operations; "
                         "run a forward pass over grad-enabled inputs first")
    if root._used:
        raise GraphError("backward already consumed this graph; "
                         "rebuild the forward pass before differentiating again")

    nodes = []
    seen = {id(root)}
    stack = [root]
    while stack:
        node = stack.pop()
        nodes.append(node)
        for parent in node._parents:
            if id(parent) not in seen:
                seen.add(id(parent))
                stack.append(parent)
    nodes.sort(key=lambda t: t._id, reverse=True)

    root.grad = np.ones_like(root.data)
    for node in nodes:
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    root._used = True


# ---------------------------------------------------------------------------
# elementwise arithmetic

def _binary_shapes(a, b, op_name):
    """Enforce equal-shape or scalar-with-tensor; return the output shape."""
    if a.shape == b.shape:
        return a.shape
    if a.size == 1:
        return b.shape
    if b.size == 1:
        return a.shape
    raise ShapeError(f"{op_name} needs equal shapes or a scalar operand, "
                     f"got {a.shape} and {b.shape}")


def _reduce_to(grad, shape):
    """Sum a broadcast gradient back down to an operand's shape."""
    if grad.shape == shape:
        return grad
    return np.sum(grad).reshape(shape)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _binary_shapes(a, b, "add")
    data = a.data + b.data
    parents = tuple(t for t in (a, b) if t.requires_grad)
    if not parents:
        return Tensor(data)

    def _bwd(g):
        if a.requires_grad:
            accumulate_grad(a, _reduce_to(g, a.shape))
        if b.requires_grad:
            accumulate_grad(b, _reduce_to(g, b.shape))

    return make_op_output(data, parents, _bwd)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _binary_shapes(a, b, "sub")
    data = a.data - b.data
    parents = tuple(t for t in (a, b) if t.requires_grad)
    if not parents:
        return Tensor(data)

    def _bwd(g):
        if a.requires_grad:
            accumulate_grad(a, _reduce_to(g, a.shape))
        if b.requires_grad:
            accumulate_grad(b, _reduce_to(-g, b.shape))

    return make_op_output(data, parents, _bwd)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _binary_shapes(a, b, "mul")
    data = a.data * b.data
    parents = tuple(t for t in (a, b) if t.requires_grad)
    if not parents:
        return Tensor(data)

    def _bwd(g):
        if a.requires_grad:
            accumulate_grad(a, _reduce_to(g * b.data, a.shape))
        if b.requires_grad:
            accumulate_grad(b, _reduce_to(g * a.data, b.shape))

    return make_op_output(data, parents, _bwd)


def neg(a):
    a = as_tensor(a)
    if not a.requires_grad:
        return Tensor(-a.data)

    def _bwd(g):
        accumulate_grad(a, -g)

    return make_op_output(-a.data, (a,), _bwd)


def scale(a, factor):
    """Multiply by a python constant (no gradient for the constant)."""
    a = as_tensor(a)
    factor = float(factor)
    if not a.requires_grad:
        return Tensor(a.data * factor)

    def _bwd(g):
        accumulate_grad(a, g * factor)

    return make_op_output(a.data * factor, (a,), _bwd)


def bias_add(mat, bias):
    """Add a length-d bias vector to every row of an (n, d) matrix."""
    mat, bias = as_tensor(mat), as_tensor(bias)
    if mat.ndim != 2 or bias.ndim != 1 or mat.shape[1] != bias.shape[0]:
        raise ShapeError(f"bias_add needs (n, d) and (d,), "
                         f"got {mat.shape} and {bias.shape}")
    data = mat.data + bias.data[None, :]
    parents = tuple(t for t in (mat, bias) if t.requires_grad)
    if not parents:
        return Tensor(data)

    def _bwd(g):
        if mat.requires_grad:
            accumulate_grad(mat, g)
        if bias.requires_grad:
            accumulate_grad(bias, g.sum(axis=0))

    return make_op_output(data, parents, _bwd)


# ---------------------------------------------------------------------------
# matrix product

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} vs {b.shape}")
    data = a.data @ b.data
    parents = tuple(t for t in (a, b) if t.requires_grad)
    if not parents:
        return Tensor(data)

    def _bwd(g):
        if a.requires_grad:
            accumulate_grad(a, g @ b.data.T)
        if b.requires_grad:
            accumulate_grad(b, a.data.T @ g)

    return make_op_output(data, parents, _bwd)


# ---------------------------------------------------------------------------
# nonlinearities and pointwise functions

def _unary(a, data, local_grad_fn):
    if not a.requires_grad:
        return Tensor(data)

    def _bwd(g):
        accumulate_grad(a, g * local_grad_fn())

    return make_op_output(data, (a,), _bwd)


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _unary(a, out, lambda: 1.0 - out * out)


def sigmoid(a):
    a = as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.data))
    return _unary(a, out, lambda: out * (1.0 - out))


def relu(a):
    a = as_tensor(a)
    out = np.maximum(a.data, 0.0)
    return _unary(a, out, lambda: (a.data > 0.0).astype(np.float64))


def softplus(a):
    """log(1 + exp(x)), computed stably for large |x|."""
    a = as_tensor(a)
    out = np.logaddexp(0.0, a.data)
    return _unary(a, out, lambda: 1.0 / (1.0 + np.exp(-a.data)))


def cos(a):
    a = as_tensor(a)
    return _unary(a, np.cos(a.data), lambda: -np.sin(a.data))


def sin(a):
    a = as_tensor(a)
    return _unary(a, np.sin(a.data), lambda: np.cos(a.data))


def square(a):
    a = as_tensor(a)
    return _unary(a, a.data * a.data, lambda: 2.0 * a.data)


def sqrt_eps(a, eps=1e-12):
    """sqrt(x + eps): the stabilized square root used inside the CF loss.

    The offset keeps the gradient 1 / (2 sqrt(x + eps)) finite at x = 0.
    """
    a = as_tensor(a)
    if eps <= 0.0:
        raise ValueError(f"sqrt_eps needs eps > 0, got {eps}")
    out = np.sqrt(a.data + eps)
    return _unary(a, out, lambda: 0.5 / out)


def clip_box(a, lo=None, hi=None):
    """Elementwise clip to [lo, hi]; either bound may be None.

    The gradient is the identity strictly inside the box and zero at or
    beyond a bound (the usual subgradient choice).
    """
    a = as_tensor(a)
    if lo is None and hi is None:
        raise ValueError("clip_box needs at least one bound")
    if lo is not None and hi is not None and not lo < hi:
        raise ValueError(f"clip_box needs lo < hi, got [{lo}, {hi}]")
    out = np.clip(a.data, lo, hi)
    inside = np.ones(a.shape, dtype=bool)
    if lo is not None:
        inside &= a.data > lo
    if hi is not None:
        inside &= a.data < hi
    return _unary(a, out, lambda: inside.astype(np.float64))


# ---------------------------------------------------------------------------
# reductions

def _reduction(a, data, axis, grad_expand):
    if not a.requires_grad:
        return Tensor(data)

    def _bwd(g):
        accumulate_grad(a, grad_expand(g))

    return make_op_output(data, (a,), _bwd)


def _check_axis(a, axis):
    if axis is not None and not (-a.ndim <= axis < a.ndim):
        raise ShapeError(f"axis {axis} out of range for shape {a.shape}")


def reduce_sum(a, axis=None):
    a = as_tensor(a)
    _check_axis(a, axis)
    data = a.data.sum(axis=axis)
    if axis is None:
        return _reduction(a, data, axis,
                          lambda g: np.broadcast_to(g, a.shape).copy())
    return _reduction(a, data, axis,
                      lambda g: np.broadcast_to(np.expand_dims(g, axis),
                                                a.shape).copy())


def reduce_mean(a, axis=None):
    a = as_tensor(a)
    _check_axis(a, axis)
    data = a.data.mean(axis=axis)
    count = a.size if axis is None else a.shape[axis]
    if axis is None:
        return _reduction(a, data, axis,
                          lambda g: np.broadcast_to(g / count, a.shape).copy())
    return _reduction(a, data, axis,
                      lambda g: np.broadcast_to(np.expand_dims(g / count, axis),
                                                a.shape).copy())


# ---------------------------------------------------------------------------
# fused ECF op (dispatches to the compiled kernel when built)

def ecf_pair(samples, freqs):
    """Empirical characteristic function of ``samples`` at ``freqs``.

    samples: (n, m), freqs: (k, m). Returns a (2, k) tensor, row 0 the real
    part and row 1 the imaginary part, each a mean over the n samples.
    Differentiable in both operands.
    """
    samples, freqs = as_tensor(samples), as_tensor(freqs)
    if samples.ndim != 2 or freqs.ndim != 2:
        raise ShapeError(f"ecf_pair needs 2-D operands, got {samples.shape} "
                         f"and {freqs.shape}")
    if samples.shape[1] != freqs.shape[1]:
        raise ShapeError(f"ecf_pair dimension mismatch: samples {samples.shape} "
                         f"vs freqs {freqs.shape}")
    if samples.shape[0] == 0:
        raise ShapeError("ecf_pair needs at least one sample")
    if freqs.shape[0] == 0:
        raise ShapeError("ecf_pair needs at least one frequency")

    x, t = samples.data, freqs.data
    re, im, cache = kernels.ecf_forward(x, t)
    data = np.stack([re, im])
    parents = tuple(p for p in (samples, freqs) if p.requires_grad)
    if not parents:
        return Tensor(data)

    def _bwd(g):
        g_re = np.ascontiguousarray(g[0])
        g_im = np.ascontiguousarray(g[1])
        g_samples, g_freqs = kernels.ecf_backward(
            x, t, cache, g_re, g_im,
            samples.requires_grad, freqs.requires_grad)
        if samples.requires_grad:
            accumulate_grad(samples, g_samples)
        if freqs.requires_grad:
            accumulate_grad(freqs, g_freqs)

    return make_op_output(data, parents, _bwd)
