"""Define-by-run reverse-mode differentiation over dense 2-D float arrays.

Every forward pass records onto a fresh :class:`Tape`. Values are always
2-D; scalars are ``(1, 1)``. Shapes must match exactly except for
:func:`add_bias` (row or column broadcast) and :func:`scale` (multiply by a
``(1, 1)`` value).

>>> tape = Tape()
>>> x = tape.variable(np.ones((2, 3)))
>>> loss = sum_all(sigmoid(x))
>>> grads = tape.backward(loss)
"""

import numpy as np
from scipy.special import expit

from .exceptions import NumericalError, StructuralError

__all__ = [
    "Tape", "Value", "add", "add_bias", "clamp", "concat_cols", "exp",
    "finite_diff_check", "log", "masked", "matmul", "mul", "neg", "relu",
    "scale", "sigmoid", "softplus", "square", "sub", "sum_all", "sum_cols",
    "sum_rows", "take_cols", "transpose", "ACTIVATIONS",
]


class Value:
    """A node on a tape: forward data plus the rule to push adjoints back."""

    __slots__ = ("data", "tape", "parents", "backward_fn", "index",
                 "requires_grad")

    def __init__(self, data, tape=None, parents=(), backward_fn=None,
                 requires_grad=False):
        self.data = data
        self.tape = tape
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad
        self.index = -1

    @property
    def shape(self):
        return self.data.shape

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)

    @property
    def T(self):
        return transpose(self)

    def __repr__(self):
        return f"Value(shape={self.shape}, requires_grad={self.requires_grad})"


def _as_2d(data):
    arr = np.array(data, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise StructuralError(f"values must be at most 2-D, got {arr.ndim}-D")
    return arr


class Tape:
    """Records values in creation order; :meth:`backward` replays it reversed."""

    def __init__(self):
        self.nodes = []
        self.leaves = []

    def _record(self, value):
        value.tape = self
        value.index = len(self.nodes)
        self.nodes.append(value)
        return value

    def variable(self, data):
        """A tracked leaf (a parameter)."""
        data = _as_2d(data)
        _check_finite(data, "variable")
        v = self._record(Value(data, requires_grad=True))
        self.leaves.append(v)
        return v

    def constant(self, data):
        """An untracked leaf (inputs, frozen noise)."""
        return self._record(Value(_as_2d(data)))

    def backward(self, loss):
        """Adjoint of the scalar ``loss`` with respect to every variable.

        Returns a dict keyed by the leaf :class:`Value`; leaves that do not
        influence ``loss`` get zero adjoints.
        """
        if loss.tape is not self:
            raise StructuralError("loss was not recorded on this tape")
        if loss.shape != (1, 1):
            raise StructuralError(f"loss must be scalar, got shape {loss.shape}")
        adjoints = {loss.index: np.ones((1, 1))}
        for node in reversed(self.nodes[:loss.index + 1]):
            adj = adjoints.pop(node.index, None)
            if adj is None or node.backward_fn is None:
                if adj is not None:
                    adjoints[node.index] = adj
                continue
            parent_grads = node.backward_fn(adj)
            for parent, g in zip(node.parents, parent_grads):
                if g is None or not parent.requires_grad:
                    continue
                if parent.index in adjoints:
                    adjoints[parent.index] = adjoints[parent.index] + g
                else:
                    adjoints[parent.index] = g
        grads = {}
        for leaf in self.leaves:
            g = adjoints.get(leaf.index)
            if g is None:
                g = np.zeros_like(leaf.data)
            elif not np.all(np.isfinite(g)):
                raise NumericalError("non-finite adjoint encountered")
            grads[leaf] = g
        return grads

    def clear(self):
        """Drop recorded nodes, breaking reference cycles so memory is freed now."""
        for node in self.nodes:
            node.tape = None
            node.parents = ()
            node.backward_fn = None
        self.nodes = []
        self.leaves = []


def _check_finite(data, name):
    if not np.all(np.isfinite(data)):
        raise NumericalError(f"{name} produced a non-finite value")


def _tape_of(*values):
    for v in values:
        if v.tape is not None:
            return v.tape
    return None


def _make(data, name, parents, backward_fn):
    _check_finite(data, name)
    requires_grad = any(p.requires_grad for p in parents)
    out = Value(data, parents=parents,
                backward_fn=backward_fn if requires_grad else None,
                requires_grad=requires_grad)
    tape = _tape_of(*parents)
    if tape is not None:
        tape._record(out)
    return out


def _same_shape(a, b, name):
    if a.shape != b.shape:
        raise StructuralError(f"{name}: shape mismatch {a.shape} vs {b.shape}")


# -- binary primitives -------------------------------------------------------

def add(a, b):
    _same_shape(a, b, "add")
    return _make(a.data + b.data, "add", (a, b), lambda g: (g, g))


def sub(a, b):
    _same_shape(a, b, "sub")
    return _make(a.data - b.data, "sub", (a, b), lambda g: (g, -g))


def mul(a, b):
    """Elementwise (Hadamard) product."""
    _same_shape(a, b, "mul")
    return _make(a.data * b.data, "mul", (a, b),
                 lambda g: (g * b.data, g * a.data))


def matmul(a, b):
    if a.shape[1] != b.shape[0]:
        raise StructuralError(f"matmul: shape mismatch {a.shape} @ {b.shape}")
    return _make(a.data @ b.data, "matmul", (a, b),
                 lambda g: (g @ b.data.T, a.data.T @ g))


def add_bias(a, bias):
    """``a + bias`` with ``bias`` of shape ``(1, cols)`` or ``(rows, 1)``."""
    rows, cols = a.shape
    if bias.shape == (1, cols):
        axis = 0
    elif bias.shape == (rows, 1):
        axis = 1
    else:
        raise StructuralError(
            f"add_bias: bias shape {bias.shape} does not broadcast to {a.shape}")
    return _make(a.data + bias.data, "add_bias", (a, bias),
                 lambda g: (g, g.sum(axis=axis, keepdims=True)))


def scale(a, s):
    """Multiply every entry of ``a`` by the scalar value ``s``."""
    if s.shape != (1, 1):
        raise StructuralError(f"scale: factor must be (1, 1), got {s.shape}")
    return _make(a.data * s.data[0, 0], "scale", (a, s),
                 lambda g: (g * s.data[0, 0],
                            np.array([[np.sum(g * a.data)]])))


def masked(a, mask):
    """Zero ``a`` outside the boolean ``mask`` (a fixed array, not a value)."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != a.shape:
        raise StructuralError(f"masked: mask {mask.shape} vs value {a.shape}")
    return _make(np.where(mask, a.data, 0.0), "masked", (a,),
                 lambda g: (np.where(mask, g, 0.0),))


def take_cols(a, idx):
    """Columns ``idx`` of ``a`` (indices may repeat)."""
    idx = np.asarray(idx, dtype=np.intp)
    n_cols = a.shape[1]

    def backward(g):
        out = np.zeros((g.shape[0], n_cols))
        # column scatter-add; bincount per row is much faster than np.add.at
        for i in range(g.shape[0]):
            out[i] = np.bincount(idx, weights=g[i], minlength=n_cols)
        return (out,)

    return _make(a.data[:, idx], "take_cols", (a,), backward)


def concat_cols(values):
    values = tuple(values)
    rows = values[0].shape[0]
    for v in values:
        if v.shape[0] != rows:
            raise StructuralError("concat_cols: row count mismatch")
    bounds = np.cumsum([0] + [v.shape[1] for v in values])

    def backward(g):
        return tuple(g[:, lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]))

    return _make(np.concatenate([v.data for v in values], axis=1),
                 "concat_cols", values, backward)


# -- unary primitives --------------------------------------------------------

def neg(a):
    return _make(-a.data, "neg", (a,), lambda g: (-g,))


def transpose(a):
    return _make(a.data.T.copy(), "transpose", (a,), lambda g: (g.T,))


def square(a):
    return _make(a.data * a.data, "square", (a,), lambda g: (2.0 * g * a.data,))


def relu(a):
    on = a.data > 0
    return _make(np.where(on, a.data, 0.0), "relu", (a,),
                 lambda g: (np.where(on, g, 0.0),))


def sigmoid(a):
    out = expit(a.data)
    return _make(out, "sigmoid", (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a):
    x = a.data
    # log(1 + e^x) = max(x, 0) + log1p(e^-|x|)
    out = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    return _make(out, "softplus", (a,), lambda g: (g * expit(x),))


def exp(a):
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    return _make(out, "exp", (a,), lambda g: (g * out,))


def log(a):
    if np.any(a.data <= 0):
        raise NumericalError("log of a nonpositive value")
    return _make(np.log(a.data), "log", (a,), lambda g: (g / a.data,))


def identity(a):
    return a


def clamp(a, lo=-np.inf, hi=np.inf):
    """Clip to ``[lo, hi]``; the gradient is zero where clipping is active."""
    inside = (a.data >= lo) & (a.data <= hi)
    return _make(np.clip(a.data, lo, hi), "clamp", (a,),
                 lambda g: (np.where(inside, g, 0.0),))


def sum_all(a):
    return _make(np.array([[a.data.sum()]]), "sum", (a,),
                 lambda g: (np.full(a.shape, g[0, 0]),))


def sum_cols(a):
    """Row sums, shape ``(rows, 1)``."""
    return _make(a.data.sum(axis=1, keepdims=True), "sum_cols", (a,),
                 lambda g: (np.broadcast_to(g, a.shape).copy(),))


def sum_rows(a):
    """Column sums, shape ``(1, cols)``."""
    return _make(a.data.sum(axis=0, keepdims=True), "sum_rows", (a,),
                 lambda g: (np.broadcast_to(g, a.shape).copy(),))


ACTIVATIONS = {
    "sigmoid": sigmoid,
    "relu": relu,
    "linear": identity,
    "softplus": softplus,
}


# -- gradient checking --------------------------------------------------------

def finite_diff_check(f, params, eps=1e-5):
    """Compare reverse-mode gradients of ``f`` against central differences.

    Parameters
    ----------
    f : callable
        ``f(tape, variables) -> Value`` building a scalar on ``tape`` from a
        dict of tracked variables with the same keys as ``params``.
    params : dict of str -> ndarray
    eps : float

    Returns
    -------
    float
        ``max |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|)`` over all entries.
    """
    if eps <= 0:
        raise StructuralError("eps must be positive")
    params = {k: _as_2d(v) for k, v in params.items()}

    tape = Tape()
    variables = {k: tape.variable(v) for k, v in params.items()}
    grads = tape.backward(f(tape, variables))

    def evaluate(values):
        t = Tape()
        out = f(t, {k: t.variable(v) for k, v in values.items()}).data[0, 0]
        if not np.isfinite(out):
            raise NumericalError("function is non-finite at a probe point")
        return out

    worst = 0.0
    for name, base in params.items():
        g_ad = grads[variables[name]]
        for idx in np.ndindex(base.shape):
            probe = dict(params)
            shifted = base.copy()
            shifted[idx] = base[idx] + eps
            probe[name] = shifted
            f_plus = evaluate(probe)
            shifted = base.copy()
            shifted[idx] = base[idx] - eps
            probe[name] = shifted
            f_minus = evaluate(probe)
            g_fd = (f_plus - f_minus) / (2.0 * eps)
            err = abs(g_ad[idx] - g_fd) / max(1e-8, abs(g_ad[idx]) + abs(g_fd))
            worst = max(worst, err)
    return worst
