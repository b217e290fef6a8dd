"""
nncore package - numeric core tối giản cho CVAE (forward/backward, Adam, gradcheck)
"""
from .tape import (
    Tape, Var, value_of, grad_of, add, sub, mul, scale, exp, reshape, total, mean,
    bernoulli_log_likelihood, gaussian_kl,
)
from .layers import (
    LayerKind, LayerParams, conv3d, convtranspose3d, linear, relu, sigmoid, activation,
    apply_layer, init_layer, conv_output_size, convtranspose_output_size,
)
from .optim import Adam, AdamState, adam_step
from .gradcheck import finite_diff_check, analytic_gradient, numeric_gradient


def backward(tape: Tape, output: Var, grad=None) -> None:
    """Run reverse mode over a recorded forward pass"""
    tape.backward(output, grad)


__all__ = [
    'Tape', 'Var', 'value_of', 'grad_of', 'add', 'sub', 'mul', 'scale', 'exp', 'reshape',
    'total', 'mean', 'bernoulli_log_likelihood', 'gaussian_kl',
    'LayerKind', 'LayerParams', 'conv3d', 'convtranspose3d', 'linear', 'relu', 'sigmoid',
    'activation', 'apply_layer', 'init_layer', 'conv_output_size', 'convtranspose_output_size',
    'Adam', 'AdamState', 'adam_step',
    'finite_diff_check', 'analytic_gradient', 'numeric_gradient', 'backward',
]
