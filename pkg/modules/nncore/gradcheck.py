"""
Central finite differences để kiểm tra gradient của tape (64-bit).
"""
from typing import Callable, Dict, Mapping

import numpy as np

from modules.nncore.tape import Tape, Tensorish, Var, grad_of, value_of

GraphFn = Callable[[Mapping[str, Tensorish]], Tensorish]


def analytic_gradient(fn: GraphFn, point: Mapping[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """Reverse-mode gradient of the scalar fn at point"""
    tape = Tape()
    inputs = {name: tape.variable(np.array(value, dtype=np.float64), name=name)
              for name, value in point.items()}
    out = fn(inputs)
    if not isinstance(out, Var):
        # output does not depend on any input
        return {name: np.zeros(np.shape(value)) for name, value in point.items()}
    tape.backward(out)
    return {name: grad_of(var) for name, var in inputs.items()}


def numeric_gradient(fn: GraphFn, point: Mapping[str, np.ndarray], h: float = 1e-5) -> Dict[str, np.ndarray]:
    base = {name: np.array(value, dtype=np.float64) for name, value in point.items()}
    grads = {}
    for name, value in base.items():
        g = np.zeros_like(value)
        flat = value.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(value_of(fn(base)))
            flat[i] = orig - h
            f_minus = float(value_of(fn(base)))
            flat[i] = orig
            g.reshape(-1)[i] = (f_plus - f_minus) / (2.0 * h)
        grads[name] = g
    return grads


def finite_diff_check(fn: GraphFn, point: Mapping[str, np.ndarray], h: float = 1e-5,
                      floor: float = 1e-6) -> float:
    """
    Max elementwise relative error |a - n| / max(|a|, |n|, floor) between the
    tape gradient a and the central-difference gradient n.
    """
    analytic = analytic_gradient(fn, point)
    numeric = numeric_gradient(fn, point, h)
    worst = 0.0
    for name in point:
        a, n = analytic[name], numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        if a.size:
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
