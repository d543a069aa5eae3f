# modules/differentiation/dual.py
"""Dual numbers a + bε (ε² = 0) for per-column forward differentiation

Both parts may be numpy arrays, so one dual pass differentiates a whole
batch of factors with respect to one input column. The module-level math
functions accept plain values as well as duals, which lets a single
residual function serve value evaluation and differentiation.
"""
from typing import Any, Callable, List, Sequence, Tuple

import numpy as np


class DualScalar:
    __slots__ = ('value', 'deriv')

    # Keep numpy from hijacking reflected operators on ndarray ⊕ dual
    __array_ufunc__ = None

    def __init__(self, value: Any, deriv: Any = 0.0):
        self.value = value
        self.deriv = deriv

    def __repr__(self) -> str:
        return f"DualScalar({self.value!r} + {self.deriv!r}ε)"

    def __add__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(self.value + other.value, self.deriv + other.deriv)
        return DualScalar(self.value + other, self.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(self.value - other.value, self.deriv - other.deriv)
        return DualScalar(self.value - other, self.deriv)

    def __rsub__(self, other):
        return DualScalar(other - self.value, -self.deriv)

    def __mul__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(self.value * other.value,
                              self.value * other.deriv + self.deriv * other.value)
        return DualScalar(self.value * other, self.deriv * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(self.value / other.value,
                              (self.deriv * other.value - self.value * other.deriv)
                              / (other.value * other.value))
        return DualScalar(self.value / other, self.deriv / other)

    def __rtruediv__(self, other):
        return DualScalar(other / self.value, -other * self.deriv / (self.value * self.value))

    def __neg__(self):
        return DualScalar(-self.value, -self.deriv)

    def __pos__(self):
        return self

    def __pow__(self, exponent):
        if isinstance(exponent, DualScalar):
            return exp(exponent * log(self))
        return DualScalar(self.value ** exponent,
                          exponent * self.value ** (exponent - 1) * self.deriv)

    def __rpow__(self, base):
        return exp(self * np.log(base))


def value_of(x: Any) -> Any:
    return x.value if isinstance(x, DualScalar) else x


def sqrt(x):
    if isinstance(x, DualScalar):
        root = np.sqrt(x.value)
        return DualScalar(root, x.deriv / (2 * root))
    return np.sqrt(x)


def sin(x):
    if isinstance(x, DualScalar):
        return DualScalar(np.sin(x.value), np.cos(x.value) * x.deriv)
    return np.sin(x)


def cos(x):
    if isinstance(x, DualScalar):
        return DualScalar(np.cos(x.value), -np.sin(x.value) * x.deriv)
    return np.cos(x)


def exp(x):
    if isinstance(x, DualScalar):
        e = np.exp(x.value)
        return DualScalar(e, e * x.deriv)
    return np.exp(x)


def log(x):
    if isinstance(x, DualScalar):
        return DualScalar(np.log(x.value), x.deriv / x.value)
    return np.log(x)


def atan2(y, x):
    if isinstance(y, DualScalar) or isinstance(x, DualScalar):
        yv, xv = value_of(y), value_of(x)
        dy = y.deriv if isinstance(y, DualScalar) else 0.0
        dx = x.deriv if isinstance(x, DualScalar) else 0.0
        denom = xv * xv + yv * yv
        return DualScalar(np.arctan2(yv, xv), (xv * dy - yv * dx) / denom)
    return np.arctan2(y, x)


def abs_(x):
    # Ties at 0 take the derivative of the non-negative branch
    if isinstance(x, DualScalar):
        sign = np.where(np.asarray(x.value) < 0, -1.0, 1.0).astype(np.result_type(x.value))
        return DualScalar(np.abs(x.value), sign * x.deriv)
    return np.abs(x)


def where(condition, a, b):
    """Element-wise select that carries derivatives of the chosen branch"""
    if isinstance(a, DualScalar) or isinstance(b, DualScalar):
        return DualScalar(
            np.where(condition, value_of(a), value_of(b)),
            np.where(condition, _deriv_of(a), _deriv_of(b)),
        )
    return np.where(condition, a, b)


def minimum(a, b):
    # Ties take the left argument
    return where(np.asarray(value_of(a)) <= np.asarray(value_of(b)), a, b)


def maximum(a, b):
    # Ties take the left argument
    return where(np.asarray(value_of(a)) >= np.asarray(value_of(b)), a, b)


def _deriv_of(x):
    return x.deriv if isinstance(x, DualScalar) else 0.0


def dual_eval(f: Callable[[List[Any]], Sequence[Any]], x: Sequence[float],
              seed_index: int) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate f and ∂f/∂x[seed_index] in one dual pass

    f receives the input components as a list and returns a scalar or a
    sequence of output components.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if not 0 <= seed_index < x.size:
        raise IndexError(f"seed_index {seed_index} out of range for input of size {x.size}")
    duals = [DualScalar(x[i], 1.0 if i == seed_index else 0.0) for i in range(x.size)]
    with np.errstate(all='ignore'):
        out = f(duals)
    if isinstance(out, DualScalar) or np.isscalar(out):
        out = [out]
    values = np.array([float(np.asarray(value_of(o))) for o in out])
    derivs = np.array([float(np.asarray(_deriv_of(o))) for o in out])
    return values, derivs
