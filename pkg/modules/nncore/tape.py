"""
Reverse-mode tape: mỗi forward pass ghi lại các phép toán, backward đi ngược tape.

Ops accept either plain numpy arrays or Vars. When at least one input is a Var
the result is recorded on that Var's tape; otherwise the op is a plain numpy
computation and returns an ndarray.
"""
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from modules.errors import ShapeError, TapeStateError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Var:
    """Tensor value living on a Tape"""
    __slots__ = ('value', 'grad', 'tape', 'parents', 'backward_fn', 'name')

    def __init__(self, value: np.ndarray, tape: 'Tape', parents: Tuple = (),
                 backward_fn: Optional[BackwardFn] = None, name: Optional[str] = None):
        self.value = value
        self.grad: Optional[np.ndarray] = None
        self.tape = tape
        self.parents = parents
        self.backward_fn = backward_fn
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def dtype(self):
        return self.value.dtype

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Var{label}(shape={self.shape}, dtype={self.dtype})"


Tensorish = Union[np.ndarray, Var]


def value_of(x: Tensorish) -> np.ndarray:
    return x.value if isinstance(x, Var) else np.asarray(x)


def _find_tape(inputs: Iterable) -> Optional['Tape']:
    tape = None
    for x in inputs:
        if isinstance(x, Var):
            if tape is None:
                tape = x.tape
            elif x.tape is not tape:
                raise TapeStateError("inputs belong to different tapes")
    return tape


class Tape:
    """
    Ghi lại đồ thị tính toán của một lần forward.
    Sau backward() đồ thị bị huỷ; chỉ còn lại .grad trên các Var.
    """

    def __init__(self):
        self._nodes: List[Var] = []
        self._consumed = False

    def __len__(self) -> int:
        return len(self._nodes)

    def variable(self, value, name: Optional[str] = None) -> Var:
        """Register a leaf (parameter or input) whose gradient is wanted"""
        if self._consumed:
            raise TapeStateError("tape already consumed by backward()")
        var = Var(np.asarray(value), self, name=name)
        self._nodes.append(var)
        return var

    def record(self, value: np.ndarray, parents: Tuple, backward_fn: BackwardFn) -> Var:
        if self._consumed:
            raise TapeStateError("tape already consumed by backward()")
        var = Var(value, self, parents, backward_fn)
        self._nodes.append(var)
        return var

    def backward(self, output: Var, grad: Optional[np.ndarray] = None) -> None:
        """
        Lan truyền gradient ngược từ output về mọi leaf.
        Args:
            output: Var kết quả (scalar nếu grad không được truyền)
            grad: gradient của output, mặc định là 1
        """
        if not self._nodes or not any(n.backward_fn is not None for n in self._nodes):
            raise TapeStateError("backward() called before any forward op was recorded")
        if self._consumed:
            raise TapeStateError("tape already consumed by backward()")
        if not isinstance(output, Var) or output.tape is not self:
            raise TapeStateError("output was not recorded on this tape")

        if grad is None:
            if output.value.size != 1:
                raise ShapeError(f"implicit gradient needs a scalar output, got shape {output.shape}")
            grad = np.ones_like(output.value)
        grad = np.asarray(grad, dtype=output.value.dtype)
        if grad.shape != output.shape:
            raise ShapeError(f"output gradient shape {grad.shape} does not match output shape {output.shape}")
        output.grad = grad

        for node in reversed(self._nodes):
            if node.grad is None or node.backward_fn is None:
                continue
            parent_grads = node.backward_fn(node.grad)
            for parent, g in zip(node.parents, parent_grads):
                if not isinstance(parent, Var) or g is None:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g

        self._consumed = True
        for node in self._nodes:
            node.backward_fn = None
            node.parents = ()


def grad_of(var: Var) -> np.ndarray:
    """Gradient of a leaf, zeros when the output does not depend on it"""
    return var.grad if var.grad is not None else np.zeros_like(var.value)


def make_op(value: np.ndarray, inputs: Sequence, backward_fn: BackwardFn) -> Tensorish:
    tape = _find_tape(inputs)
    if tape is None:
        return value
    return tape.record(value, tuple(inputs), backward_fn)


# ---------------------------------------------------------------------------
# Elementwise / reshaping ops
# ---------------------------------------------------------------------------

def _same_shape(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def add(a: Tensorish, b: Tensorish) -> Tensorish:
    av, bv = value_of(a), value_of(b)
    _same_shape(av, bv, 'add')
    return make_op(av + bv, (a, b), lambda g: (g, g))


def sub(a: Tensorish, b: Tensorish) -> Tensorish:
    av, bv = value_of(a), value_of(b)
    _same_shape(av, bv, 'sub')
    return make_op(av - bv, (a, b), lambda g: (g, -g))


def mul(a: Tensorish, b: Tensorish) -> Tensorish:
    av, bv = value_of(a), value_of(b)
    _same_shape(av, bv, 'mul')
    return make_op(av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(a: Tensorish, c: float) -> Tensorish:
    av = value_of(a)
    return make_op(av * c, (a,), lambda g: (g * c,))


def exp(a: Tensorish) -> Tensorish:
    out = np.exp(value_of(a))
    return make_op(out, (a,), lambda g: (g * out,))


def reshape(a: Tensorish, shape: Tuple[int, ...]) -> Tensorish:
    av = value_of(a)
    try:
        out = av.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"cannot reshape {av.shape} into {shape}") from e
    return make_op(out, (a,), lambda g: (g.reshape(av.shape),))


def total(a: Tensorish) -> Tensorish:
    """Sum of all elements (0-d result)"""
    av = value_of(a)
    return make_op(np.asarray(av.sum()), (a,), lambda g: (np.full_like(av, g),))


def mean(a: Tensorish) -> Tensorish:
    av = value_of(a)
    n = av.size
    return make_op(np.asarray(av.mean()), (a,), lambda g: (np.full_like(av, g / n),))


# ---------------------------------------------------------------------------
# Fused likelihood terms
# ---------------------------------------------------------------------------

def bernoulli_log_likelihood(logits: Tensorish, targets: np.ndarray) -> Tensorish:
    """
    Per-sample sum of x*ln(p) + (1-x)*ln(1-p) with p = sigmoid(logits),
    computed as x*l - softplus(l). Batch axis is axis 0.
    """
    lv = value_of(logits)
    x = np.asarray(targets, dtype=lv.dtype)
    _same_shape(lv, x, 'bernoulli_log_likelihood')
    axes = tuple(range(1, lv.ndim))
    out = (x * lv - np.logaddexp(0.0, lv)).sum(axis=axes)

    def backward(g):
        p = 0.5 * (1.0 + np.tanh(0.5 * lv))
        return (g.reshape(g.shape + (1,) * len(axes)) * (x - p),)

    return make_op(out, (logits,), backward)


def gaussian_kl(mu: Tensorish, log_var: Tensorish) -> Tensorish:
    """Per-sample KL(N(mu, exp(log_var)) || N(0, I)) in nats, batch axis 0"""
    mv, lv = value_of(mu), value_of(log_var)
    _same_shape(mv, lv, 'gaussian_kl')
    axes = tuple(range(1, mv.ndim))
    var = np.exp(lv)
    out = 0.5 * (mv * mv + var - 1.0 - lv).sum(axis=axes)

    def backward(g):
        gb = g.reshape(g.shape + (1,) * len(axes))
        return gb * mv, gb * 0.5 * (var - 1.0)

    return make_op(out, (mu, log_var), backward)
