"""Univariate truncated Taylor-series (jet) arithmetic.

A jet stores the scaled derivatives ``coeffs[k] = f^(k)(anchor)/k!`` of a
function at a fixed anchor point.  Every elementary operation propagates the
coefficients exactly to the truncation order; this is the mechanism the rest
of the library uses to obtain high-order derivatives of scale functions,
Wronskians and weighted-derivative chains without symbolic differentiation.

Values are plain doubles.  Operations are pure and reentrant.
"""

from __future__ import annotations

import math

from .errors import DivisionByZeroJet, DomainErrorJet, EvaluationError, OrderExceeded

# Below this magnitude a value coefficient counts as zero for division.  The
# jet layer stays policy-free: near-zero values propagate and callers apply
# their own degeneracy tolerances.
DIV_EPS = 1e-300


class Jet:
    """Truncated Taylor expansion at ``anchor`` with ``order+1`` coefficients."""

    __slots__ = ("anchor", "coeffs")

    def __init__(self, anchor, coeffs):
        self.anchor = float(anchor)
        self.coeffs = tuple(float(c) for c in coeffs)
        if not self.coeffs:
            raise EvaluationError("a jet needs at least the value coefficient")

    @property
    def order(self):
        return len(self.coeffs) - 1

    @property
    def value(self):
        return self.coeffs[0]

    def __repr__(self):
        return f"Jet(anchor={self.anchor!r}, coeffs={list(self.coeffs)!r})"

    def __eq__(self, other):
        return (
            isinstance(other, Jet)
            and self.anchor == other.anchor
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.anchor, self.coeffs))

    # -- coercion helpers ---------------------------------------------------

    def _like(self, coeffs):
        return Jet(self.anchor, coeffs)

    def _coerce(self, other):
        """Promote a scalar to a constant jet; truncate both to a common order."""
        if isinstance(other, Jet):
            if other.anchor != self.anchor:
                raise EvaluationError(
                    f"jet anchors differ: {self.anchor} vs {other.anchor}"
                )
            m = min(self.order, other.order)
            return self.coeffs[: m + 1], other.coeffs[: m + 1]
        if isinstance(other, (int, float)):
            c = [0.0] * (self.order + 1)
            c[0] = float(other)
            return self.coeffs, tuple(c)
        return NotImplemented

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        a, b = pair
        return self._like([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __sub__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        a, b = pair
        return self._like([x - y for x, y in zip(a, b)])

    def __rsub__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        a, b = pair
        return self._like([y - x for x, y in zip(a, b)])

    def __neg__(self):
        return self._like([-x for x in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            f = float(other)
            return self._like([f * x for x in self.coeffs])
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        a, b = pair
        m = len(a)
        out = [0.0] * m
        for k in range(m):
            s = 0.0
            for j in range(k + 1):
                s += a[j] * b[k - j]
            out[k] = s
        return self._like(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if abs(other) < DIV_EPS:
                raise DivisionByZeroJet("division by (near-)zero scalar")
            inv = 1.0 / float(other)
            return self._like([inv * x for x in self.coeffs])
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        a, b = pair
        return self._like(_div_coeffs(a, b))

    def __rtruediv__(self, other):
        if isinstance(other, (int, float)):
            c = [0.0] * (self.order + 1)
            c[0] = float(other)
            return self._like(_div_coeffs(tuple(c), self.coeffs))
        return NotImplemented


def _div_coeffs(a, b):
    if abs(b[0]) < DIV_EPS:
        raise DivisionByZeroJet("jet division by value ~ 0")
    m = len(a)
    out = [0.0] * m
    inv = 1.0 / b[0]
    for k in range(m):
        s = a[k]
        for j in range(1, k + 1):
            s -= b[j] * out[k - j]
        out[k] = s * inv
    return out


# -- constructors ------------------------------------------------------------


def jet_variable(anchor, order):
    """Jet of the identity function x -> x at ``anchor``."""
    if order < 0:
        raise EvaluationError("order must be nonnegative")
    coeffs = [0.0] * (order + 1)
    coeffs[0] = float(anchor)
    if order >= 1:
        coeffs[1] = 1.0
    return Jet(anchor, coeffs)


def jet_constant(value, anchor, order):
    coeffs = [0.0] * (order + 1)
    coeffs[0] = float(value)
    return Jet(anchor, coeffs)


# -- analytic functions ------------------------------------------------------


def jexp(j):
    u = j.coeffs
    m = len(u)
    v = [0.0] * m
    v[0] = math.exp(u[0])
    for k in range(1, m):
        s = 0.0
        for i in range(1, k + 1):
            s += i * u[i] * v[k - i]
        v[k] = s / k
    return j._like(v)


def jlog(j):
    u = j.coeffs
    if u[0] <= 0.0:
        raise DomainErrorJet(f"log of nonpositive value {u[0]}")
    m = len(u)
    v = [0.0] * m
    v[0] = math.log(u[0])
    for k in range(1, m):
        s = k * u[k]
        for i in range(1, k):
            s -= (k - i) * u[i] * v[k - i]
        v[k] = s / (k * u[0])
    return j._like(v)


def jsqrt(j):
    u = j.coeffs
    if u[0] <= 0.0:
        raise DomainErrorJet(f"sqrt of nonpositive value {u[0]}")
    m = len(u)
    v = [0.0] * m
    v[0] = math.sqrt(u[0])
    inv = 0.5 / v[0]
    for k in range(1, m):
        s = u[k]
        for i in range(1, k):
            s -= v[i] * v[k - i]
        v[k] = s * inv
    return j._like(v)


def jsin(j):
    return _sincos(j)[0]


def jcos(j):
    return _sincos(j)[1]


def _sincos(j):
    u = j.coeffs
    m = len(u)
    s = [0.0] * m
    c = [0.0] * m
    s[0] = math.sin(u[0])
    c[0] = math.cos(u[0])
    for k in range(1, m):
        as_ = 0.0
        ac = 0.0
        for i in range(1, k + 1):
            as_ += i * u[i] * c[k - i]
            ac += i * u[i] * s[k - i]
        s[k] = as_ / k
        c[k] = -ac / k
    return j._like(s), j._like(c)


def jpow(j, exponent):
    """j**exponent for a constant real exponent.

    Integer exponents use the direct multiplication recurrence (any base);
    real exponents go through exp(c*log(.)) and need a positive value.
    """
    c = float(exponent)
    if abs(c - round(c)) < 1e-12 and abs(c) <= 1024:
        n = int(round(c))
        if n == 0:
            return jet_constant(1.0, j.anchor, j.order)
        base = j if n > 0 else 1.0 / j
        n = abs(n)
        out = None
        acc = base
        while n:
            if n & 1:
                out = acc if out is None else out * acc
            n >>= 1
            if n:
                acc = acc * acc
        return out
    if j.value <= 0.0:
        raise DomainErrorJet(f"real power of nonpositive value {j.value}")
    return jexp(jlog(j) * c)


# -- calculus ----------------------------------------------------------------


def derivative(j, times=1):
    """The ``times``-th derivative of a jet, as a jet of lower order."""
    if times < 0:
        raise EvaluationError("derivative count must be nonnegative")
    if times > j.order:
        raise OrderExceeded(f"derivative {times} exceeds jet order {j.order}")
    if times == 0:
        return j
    m = j.order - times
    coeffs = [0.0] * (m + 1)
    for k in range(m + 1):
        coeffs[k] = j.coeffs[k + times] * (math.factorial(k + times) / math.factorial(k))
    return Jet(j.anchor, coeffs)


def antiderivative(j, value=0.0):
    """The antiderivative of a jet with prescribed value at the anchor."""
    coeffs = [0.0] * (j.order + 2)
    coeffs[0] = float(value)
    for k in range(j.order + 1):
        coeffs[k + 1] = j.coeffs[k] / (k + 1)
    return Jet(j.anchor, coeffs)


def jet_derivative(j, k):
    """The plain k-th derivative value ``k! * coeffs[k]``."""
    if k < 0 or k > j.order:
        raise OrderExceeded(f"derivative {k} exceeds jet order {j.order}")
    return math.factorial(k) * j.coeffs[k]


def truncate(j, order):
    """Drop coefficients beyond ``order`` (no-op if already short enough)."""
    if j.order <= order:
        return j
    return Jet(j.anchor, j.coeffs[: order + 1])


# -- tagged dispatch (public elementary-operation interface) -----------------

_UNARY = {
    "neg": lambda j: -j,
    "exp": jexp,
    "log": jlog,
    "sqrt": jsqrt,
    "sin": jsin,
    "cos": jcos,
}

_BINARY = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def jet_apply(op, operands, exponent=None):
    """Apply an elementary-operation tag to jets sharing anchor and order.

    ``pow-const`` takes one jet operand plus the ``exponent`` keyword.
    """
    ops = list(operands)
    if not ops:
        raise EvaluationError("jet_apply needs at least one operand")
    anchor, order = ops[0].anchor, ops[0].order
    for o in ops[1:]:
        if o.anchor != anchor or o.order != order:
            raise EvaluationError("operands must share anchor and order")
    if op == "pow-const":
        if len(ops) != 1 or exponent is None:
            raise EvaluationError("pow-const takes one operand and an exponent")
        return jpow(ops[0], exponent)
    if op in _UNARY:
        if len(ops) != 1:
            raise EvaluationError(f"{op} takes exactly one operand")
        return _UNARY[op](ops[0])
    if op in _BINARY:
        if len(ops) != 2:
            raise EvaluationError(f"{op} takes exactly two operands")
        return _BINARY[op](ops[0], ops[1])
    raise EvaluationError(f"unknown elementary operation {op!r}")
