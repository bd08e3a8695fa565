"""Truncated univariate Taylor series ("jets").

A :class:`Jet` of order ``N`` at base point ``x0`` stores the Taylor
coefficients ``c0 .. cN`` of a function, so that::

    f(x) = c0 + c1*(x - x0) + ... + cN*(x - x0)**N + O((x - x0)**(N+1))

The i-th derivative at ``x0`` is therefore ``i! * c[i]``.  Coefficients are
stored instead of raw derivatives so that orders around 10 do not overflow
and composition stays cheap.

The functional entry points (:func:`arith`, :func:`compose`, :func:`revert`,
:func:`rpow`) are strict about orders.  The arithmetic operators on
:class:`Jet` are the convenient form: mixing orders truncates the result to
the lower order, which is what formulas containing total derivatives need
(``D`` lowers the order by one).

Batches: a jet whose base point is an array carries one coefficient column
per base point (``coeffs`` has shape ``(N+1, B)``).  Every operation acts
column-wise.  Batched jets never raise on domain problems; the affected
columns become NaN, so one bad point does not spoil a whole grid.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Real

import numpy as np

from .errors import (
    BasePointMismatch,
    DivisionByZeroConstantTerm,
    DomainError,
    NonInvertibleJet,
    OrderMismatch,
    OrderTooLow,
)

__all__ = [
    "DEFAULT_ORDER",
    "Jet",
    "arith",
    "compose",
    "revert",
    "rpow",
    "jabs",
    "ipow",
    "exp",
    "log",
    "sin",
    "cos",
    "tan",
    "sinh",
    "cosh",
    "tanh",
    "sqrt",
]

DEFAULT_ORDER = 8


def _same_point(x, y):
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        return x == y or abs(x - y) <= 1e-12 * max(1.0, abs(x), abs(y))
    x, y = np.asarray(x), np.asarray(y)
    scale = np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))
    with np.errstate(invalid="ignore"):
        ok = (x == y) | (np.abs(x - y) <= 1e-12 * scale) | np.isnan(x) | np.isnan(y)
    return bool(np.all(ok))


def _as_base_point(x):
    if np.ndim(x) == 0:
        return float(x)
    b = np.array(x, dtype=float)
    b.setflags(write=False)
    return b


def _column(v, ndim):
    """Reshape a length-(N+1) vector so it broadcasts against (N+1, B) arrays."""
    return v.reshape((-1,) + (1,) * (ndim - 1))


class Jet:
    """Immutable truncated Taylor expansion at ``base_point``."""

    __slots__ = ("base_point", "coeffs")

    def __init__(self, coeffs, base_point=0.0):
        base_point = _as_base_point(base_point)
        c = np.array(coeffs, dtype=float)
        if c.ndim == 0:
            c = c.reshape(1)
        if c.ndim == 1 and np.ndim(base_point) > 0:
            c = np.repeat(c[:, None], base_point.size, axis=1)
        if c.shape[0] == 0:
            raise ValueError("a jet needs at least one coefficient")
        if c.ndim == 1 and not np.all(np.isfinite(c)):
            raise DomainError("jet coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "base_point", base_point)

    @classmethod
    def _wrap(cls, c, base_point):
        """Adopt a freshly computed float array without copying."""
        if c.ndim == 1 and not math.isfinite(c.sum()):
            raise DomainError("jet coefficients must be finite")
        c.setflags(write=False)
        j = object.__new__(cls)
        object.__setattr__(j, "coeffs", c)
        object.__setattr__(j, "base_point", base_point)
        return j

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value, base_point=0.0, order=DEFAULT_ORDER):
        base_point = _as_base_point(base_point)
        c = np.zeros((order + 1,) + np.shape(base_point))
        c[0] = value
        return cls._wrap(c, base_point)

    @classmethod
    def variable(cls, base_point=0.0, order=DEFAULT_ORDER):
        """The identity function ``x`` expanded at ``base_point``."""
        base_point = _as_base_point(base_point)
        c = np.zeros((order + 1,) + np.shape(base_point))
        c[0] = base_point
        if order >= 1:
            c[1] = 1.0
        return cls._wrap(c, base_point)

    @classmethod
    def from_derivatives(cls, derivs, base_point=0.0):
        d = np.asarray(derivs, dtype=float)
        fact = np.array([math.factorial(i) for i in range(d.shape[0])], dtype=float)
        return cls(d / _column(fact, d.ndim), base_point)

    # -- inspection -------------------------------------------------------

    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    @property
    def batched(self):
        return self.coeffs.ndim > 1

    @property
    def value(self):
        """Constant term: a float, or an array for batched jets."""
        if self.coeffs.ndim == 1:
            return float(self.coeffs[0])
        return self.coeffs[0]

    def derivative(self, i):
        """The i-th derivative at the base point."""
        if i > self.order:
            raise OrderTooLow(f"derivative {i} requested from a jet of order {self.order}")
        if self.coeffs.ndim == 1:
            return math.factorial(i) * float(self.coeffs[i])
        return math.factorial(i) * self.coeffs[i]

    def derivatives(self):
        return np.array([self.derivative(i) for i in range(self.order + 1)])

    def column(self, k):
        """The k-th member of a batch as an ordinary jet."""
        return Jet(self.coeffs[:, k], self.base_point[k])

    def __call__(self, x):
        """Evaluate the Taylor polynomial at ``x``."""
        t = x - self.base_point
        acc = 0.0
        for c in self.coeffs[::-1]:
            acc = acc * t + c
        return acc

    def __len__(self):
        return self.coeffs.shape[0]

    def __repr__(self):
        if self.batched:
            return f"Jet(order={self.order}, batch={self.coeffs.shape[1:]})"
        return f"Jet({[float(c) for c in self.coeffs]}, base_point={self.base_point!r})"

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (bool(np.all(self.base_point == other.base_point))
                and self.coeffs.shape == other.coeffs.shape
                and bool(np.all(self.coeffs == other.coeffs)))

    def __hash__(self):
        return hash((np.asarray(self.base_point).tobytes(), self.coeffs.tobytes()))

    def allclose(self, other, rtol=1e-12, atol=0.0):
        return (_same_point(self.base_point, other.base_point)
                and self.order == other.order
                and bool(np.allclose(self.coeffs, other.coeffs, rtol=rtol, atol=atol)))

    # -- order manipulation -----------------------------------------------

    def truncate(self, order):
        if order > self.order:
            raise OrderTooLow(f"cannot raise jet order from {self.order} to {order}")
        if order == self.order:
            return self
        return Jet._wrap(self.coeffs[: order + 1].copy(), self.base_point)

    def deriv(self):
        """Total derivative ``D/Dx``: coefficient shift, lowers the order by one."""
        if self.order < 1:
            raise OrderTooLow("cannot differentiate a jet of order 0")
        n = _column(np.arange(1.0, self.order + 1), self.coeffs.ndim)
        return Jet._wrap(self.coeffs[1:] * n, self.base_point)

    # -- operators --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if not _same_point(self.base_point, other.base_point):
                raise BasePointMismatch(
                    f"base points differ: {self.base_point} vs {other.base_point}")
            n = min(self.order, other.order)
            return self.coeffs[: n + 1], other.coeffs[: n + 1]
        if isinstance(other, Real):
            c = np.zeros(self.coeffs.shape)
            c[0] = float(other)
            return self.coeffs, c
        return None

    def _base(self, other):
        if isinstance(other, Jet) and other.batched and not self.batched:
            return other.base_point
        return self.base_point

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return Jet._wrap(pair[0] + pair[1], self._base(other))

    __radd__ = __add__

    def __sub__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return Jet._wrap(pair[0] - pair[1], self._base(other))

    def __rsub__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return Jet._wrap(pair[1] - pair[0], self._base(other))

    def __neg__(self):
        return Jet._wrap(-self.coeffs, self.base_point)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Real):
            return Jet._wrap(self.coeffs * float(other), self.base_point)
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return Jet._wrap(_mul(*pair), self._base(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Real):
            if other == 0:
                raise DivisionByZeroConstantTerm("division by zero")
            return Jet._wrap(self.coeffs / float(other), self.base_point)
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return Jet._wrap(_div(*pair), self._base(other))

    def __rtruediv__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        return Jet._wrap(_div(pair[1], pair[0]), self._base(other))

    def __pow__(self, m):
        if isinstance(m, (int, np.integer)):
            return ipow(self, int(m))
        if isinstance(m, Fraction):
            return rpow(self, m.numerator, m.denominator)
        return NotImplemented

    def __abs__(self):
        return jabs(self)


# -- coefficient kernels ----------------------------------------------------
# All kernels take arrays of shape (N+1,) or (N+1, B).

def _mul(a, b):
    if a.ndim == 1 and b.ndim == 1:
        return np.convolve(a, b)[: a.size]
    n = a.shape[0]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    with np.errstate(all="ignore"):
        for i in range(n):
            out[i:] += a[i] * b[: n - i]
    return out


def _div(a, b):
    b0 = b[0]
    if a.ndim == 1 and b.ndim == 1:
        if b0 == 0:
            raise DivisionByZeroConstantTerm("divisor has zero constant term")
        q = np.empty_like(a)
        for n in range(a.size):
            q[n] = (a[n] - np.dot(b[1: n + 1], q[n - 1:: -1][:n])) / b0
        return q
    q = np.empty(np.broadcast_shapes(a.shape, b.shape))
    b = np.broadcast_to(b, q.shape)
    with np.errstate(all="ignore"):
        for n in range(q.shape[0]):
            acc = a[n] - (b[1: n + 1] * q[n - 1:: -1][:n]).sum(axis=0) if n else a[n]
            q[n] = acc / b0
    return q


def _real_power(w, r):
    """Series of ``w**r`` for ``w[0] > 0`` (J.C.P. Miller recurrence)."""
    v = np.empty_like(w)
    w0 = w[0]
    with np.errstate(all="ignore"):
        v[0] = w0 ** r
        for n in range(1, w.shape[0]):
            k = np.arange(1, n + 1)
            weights = (r + 1.0) * k - n
            if w.ndim == 1:
                v[n] = np.dot(weights * w[1: n + 1], v[n - k]) / (n * w0)
            else:
                v[n] = (_column(weights, w.ndim) * w[1: n + 1] * v[n - k]).sum(axis=0) / (n * w0)
    return v


# -- strict functional API ---------------------------------------------------

def _check_pair(a, b):
    if not _same_point(a.base_point, b.base_point):
        raise BasePointMismatch(f"base points differ: {a.base_point} vs {b.base_point}")
    if a.order != b.order:
        raise OrderMismatch(f"orders differ: {a.order} vs {b.order}")


def arith(op, a, b):
    """Strict ring operation ``op`` in {'add', 'sub', 'mul', 'div'}."""
    _check_pair(a, b)
    if op == "add":
        return Jet(a.coeffs + b.coeffs, a.base_point)
    if op == "sub":
        return Jet(a.coeffs - b.coeffs, a.base_point)
    if op == "mul":
        return Jet(_mul(a.coeffs, b.coeffs), a.base_point)
    if op == "div":
        return Jet(_div(a.coeffs, b.coeffs), a.base_point)
    raise ValueError(f"unknown operation {op!r}")


def compose(outer, inner):
    """Taylor coefficients of ``outer(inner(x))`` at ``inner.base_point``.

    ``outer`` must be expanded at the value of ``inner``.
    """
    if not _same_point(outer.base_point, inner.value):
        raise BasePointMismatch(
            f"outer expanded at {outer.base_point}, inner takes value {inner.value}")
    if outer.order != inner.order:
        raise OrderMismatch(f"orders differ: {outer.order} vs {inner.order}")
    t = inner.coeffs.copy()
    t[0] = 0.0
    o = outer.coeffs
    acc = np.zeros(np.broadcast_shapes(t.shape, o.shape))
    acc[0] = o[-1]
    for c in o[-2::-1]:
        acc = _mul(acc, t)
        acc[0] += c
    return Jet._wrap(acc, inner.base_point)


def revert(j):
    """Compositional inverse: ``compose(revert(j), j)`` is the identity jet.

    Uses Lagrange inversion, ``k_n = [t^(n-1)] (t/T(t))^n / n``.
    """
    n_order = j.order
    if n_order < 1 or (not j.batched and j.coeffs[1] == 0):
        raise NonInvertibleJet("linear coefficient vanishes")
    out = np.zeros(j.coeffs.shape)
    out[0] = j.base_point
    # phi = t / (j(x0 + t) - j(x0)) as a series of order N-1
    shifted = j.coeffs[1:]
    one = np.zeros(shifted.shape)
    one[0] = 1.0
    phi = _div(one, shifted)
    power = one
    for n in range(1, n_order + 1):
        power = _mul(power, phi)
        out[n] = power[n - 1] / n
    return Jet._wrap(out, _as_base_point(j.value))


def ipow(j, m):
    """Integer power."""
    if m < 0:
        return 1.0 / ipow(j, -m)
    if m == 0:
        return Jet.constant(1.0, j.base_point, j.order)
    result = None
    base = j
    while m:
        if m & 1:
            result = base if result is None else result * base
        m >>= 1
        if m:
            base = base * base
    return result


def rpow(j, m, n):
    """Real-branch power ``j**(m/n)``.

    For odd ``n`` this is ``sign(u)**m * |u|**(m/n)`` (so the cube root of a
    negative series is negative); for even ``n`` the positive branch, which
    needs a positive constant term.
    """
    if n <= 0:
        raise ValueError("root index must be positive")
    frac = Fraction(m, n)
    m, n = frac.numerator, frac.denominator
    if j.batched:
        u0 = j.coeffs[0]
        sign = np.sign(u0)
        bad = (u0 == 0) | ((n % 2 == 0) & (u0 < 0))
        w = np.where(bad, np.nan, sign * j.coeffs)
        v = _real_power(w, m / n)
        if m % 2:
            v = v * sign
        return Jet._wrap(v, j.base_point)
    u0 = j.value
    if u0 == 0:
        raise DomainError("fractional power of a series with zero constant term")
    if n % 2 == 0 and u0 < 0:
        raise DomainError(f"even root of a negative constant term ({u0})")
    sign = 1.0 if u0 > 0 else -1.0
    v = _real_power(sign * j.coeffs, m / n)
    if sign < 0 and m % 2:
        v = -v
    return Jet._wrap(v, j.base_point)


def jabs(j):
    """``|j|``, defined when the constant term is nonzero."""
    if j.batched:
        s = np.sign(j.coeffs[0])
        return Jet._wrap(j.coeffs * np.where(s == 0, np.nan, s), j.base_point)
    if j.value == 0:
        raise DomainError("abs is not differentiable at a zero constant term")
    return j if j.value > 0 else -j


# -- elementary functions -----------------------------------------------------

_FACT = np.array([1.0 / math.factorial(i) for i in range(171)])


def _outer(u0, derivs):
    """Jet at ``u0`` of a function with the given derivatives there."""
    d = np.array(derivs, dtype=float)
    return Jet._wrap(d * _column(_FACT[: d.shape[0]], d.ndim), _as_base_point(u0))


def _cycle(values, order):
    return [values[i % len(values)] for i in range(order + 1)]


def _check_domain(j, ok, message):
    """Scalar jets raise on a domain violation; batched columns turn NaN."""
    if j.batched:
        return np.where(ok, j.coeffs[0], np.nan)
    if not ok:
        raise DomainError(message)
    return j.value


def exp(j):
    u0 = j.value
    with np.errstate(all="ignore"):
        e = np.exp(u0)
    if not j.batched and not math.isfinite(e):
        raise DomainError(f"exp overflows at {u0}")
    return compose(_outer(u0, [e] * (j.order + 1)), j)


def log(j):
    u0 = _check_domain(j, j.value > 0, f"log of non-positive value {j.value}")
    with np.errstate(all="ignore"):
        c = [np.log(u0)] + [(-1) ** (i + 1) / (i * u0 ** i) for i in range(1, j.order + 1)]
    return compose(Jet._wrap(np.array(c, dtype=float), _as_base_point(j.value)), j)


def sin(j):
    u0 = j.value
    cyc = [np.sin(u0), np.cos(u0), -np.sin(u0), -np.cos(u0)]
    return compose(_outer(u0, _cycle(cyc, j.order)), j)


def cos(j):
    u0 = j.value
    cyc = [np.cos(u0), -np.sin(u0), -np.cos(u0), np.sin(u0)]
    return compose(_outer(u0, _cycle(cyc, j.order)), j)


def tan(j):
    c = cos(j)
    _check_domain(c, np.abs(c.value) >= 1e-300, "tan at a pole")
    return sin(j) / c


def sinh(j):
    u0 = j.value
    with np.errstate(all="ignore"):
        cyc = [np.sinh(u0), np.cosh(u0)]
    return compose(_outer(u0, _cycle(cyc, j.order)), j)


def cosh(j):
    u0 = j.value
    with np.errstate(all="ignore"):
        cyc = [np.cosh(u0), np.sinh(u0)]
    return compose(_outer(u0, _cycle(cyc, j.order)), j)


def tanh(j):
    return sinh(j) / cosh(j)


def sqrt(j):
    _check_domain(j, j.value > 0, f"square root of non-positive value {j.value}")
    return rpow(j, 1, 2)
