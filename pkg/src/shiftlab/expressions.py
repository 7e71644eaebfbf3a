"""Entire functions as immutable expression trees.

The node catalog is deliberately small: constants, the coordinate
variable, sums, products, nonnegative integer powers, composition,
sin and exp. Symbolic differentiation is total on the catalog and
returns trees built from the same catalog (the derivative of sin is
expressed as a shifted sin, so no extra node kind is needed).

Evaluation accepts python complex scalars and numpy complex arrays.
Scalar evaluation raises EvaluationRangeError when the result
overflows to a non-finite value; array evaluation leaves non-finite
entries in place for the caller to mask.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

_HALF_PI = 0.5 * math.pi
_TWO_PI = 2.0 * math.pi
# Value of sin at the points where d/dz (z + sin(2 pi z)) vanishes.
_CRITICAL_SINE_VALUE = math.sqrt(1.0 - 1.0 / (4.0 * math.pi**2))


class EvaluationRangeError(ArithmeticError):
    """Evaluation overflowed to a non-finite value."""


class EntireFunction:
    """Base class for expression nodes. Instances are immutable."""

    def derivative(self) -> "EntireFunction":
        raise NotImplementedError

    def _ev(self, z):
        raise NotImplementedError

    def __call__(self, z: complex) -> complex:
        return evaluate(self, z)

    # Operator sugar so tests and configs can write 4 * var() ** 2.
    def __add__(self, other):
        return Sum(self, _coerce(other))

    def __radd__(self, other):
        return Sum(_coerce(other), self)

    def __mul__(self, other):
        return Product(self, _coerce(other))

    def __rmul__(self, other):
        return Product(_coerce(other), self)

    def __sub__(self, other):
        return Sum(self, Product(Constant(-1.0 + 0.0j), _coerce(other)))

    def __rsub__(self, other):
        return Sum(_coerce(other), Product(Constant(-1.0 + 0.0j), self))

    def __neg__(self):
        return Product(Constant(-1.0 + 0.0j), self)

    def __pow__(self, k):
        return Power(self, k)


def _coerce(x) -> EntireFunction:
    if isinstance(x, EntireFunction):
        return x
    if isinstance(x, (int, float, complex)):
        return Constant(complex(x))
    raise TypeError(f"cannot use {type(x).__name__} as an entire function")


@dataclass(frozen=True)
class Constant(EntireFunction):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))

    def derivative(self):
        return Constant(0j)

    def _ev(self, z):
        return self.value


@dataclass(frozen=True)
class Var(EntireFunction):
    """The coordinate variable, i.e. the identity function."""

    def derivative(self):
        return Constant(1.0 + 0j)

    def _ev(self, z):
        return z


@dataclass(frozen=True)
class Sum(EntireFunction):
    left: EntireFunction
    right: EntireFunction

    def derivative(self):
        return _sum(self.left.derivative(), self.right.derivative())

    def _ev(self, z):
        return self.left._ev(z) + self.right._ev(z)


@dataclass(frozen=True)
class Product(EntireFunction):
    left: EntireFunction
    right: EntireFunction

    def derivative(self):
        return _sum(
            _prod(self.left.derivative(), self.right),
            _prod(self.left, self.right.derivative()),
        )

    def _ev(self, z):
        return self.left._ev(z) * self.right._ev(z)


@dataclass(frozen=True)
class Power(EntireFunction):
    base: EntireFunction
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError("power exponent must be a nonnegative integer")

    def derivative(self):
        k = self.exponent
        if k == 0:
            return Constant(0j)
        return _prod(
            _prod(Constant(complex(k)), _pow(self.base, k - 1)),
            self.base.derivative(),
        )

    def _ev(self, z):
        return self.base._ev(z) ** self.exponent


@dataclass(frozen=True)
class Composition(EntireFunction):
    outer: EntireFunction
    inner: EntireFunction

    def derivative(self):
        return _prod(
            Composition(self.outer.derivative(), self.inner),
            self.inner.derivative(),
        )

    def _ev(self, z):
        return self.outer._ev(self.inner._ev(z))


@dataclass(frozen=True)
class Sine(EntireFunction):
    arg: EntireFunction

    def derivative(self):
        # cos u written as sin(u + pi/2) to stay inside the catalog.
        shifted = Sine(Sum(self.arg, Constant(complex(_HALF_PI))))
        return _prod(shifted, self.arg.derivative())

    def _ev(self, z):
        w = self.arg._ev(z)
        # One transcendental kernel: sin via the exponential identity.
        return (np.exp(1j * w) - np.exp(-1j * w)) / 2j


@dataclass(frozen=True)
class Exp(EntireFunction):
    arg: EntireFunction

    def derivative(self):
        return _prod(Exp(self.arg), self.arg.derivative())

    def _ev(self, z):
        return np.exp(self.arg._ev(z))


def _is_const(f: EntireFunction, value: complex) -> bool:
    return isinstance(f, Constant) and f.value == value


def _sum(a: EntireFunction, b: EntireFunction) -> EntireFunction:
    if _is_const(a, 0j):
        return b
    if _is_const(b, 0j):
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value + b.value)
    return Sum(a, b)


def _prod(a: EntireFunction, b: EntireFunction) -> EntireFunction:
    if _is_const(a, 0j) or _is_const(b, 0j):
        return Constant(0j)
    if _is_const(a, 1.0 + 0j):
        return b
    if _is_const(b, 1.0 + 0j):
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value * b.value)
    return Product(a, b)


def _pow(base: EntireFunction, k: int) -> EntireFunction:
    if k == 0:
        return Constant(1.0 + 0j)
    if k == 1:
        return base
    return Power(base, k)


def var() -> Var:
    return Var()


def const(w) -> Constant:
    return Constant(complex(w))


def evaluate(f: EntireFunction, z) -> complex:
    """Evaluate f at a finite complex point.

    Raises ValueError for a non-finite argument and
    EvaluationRangeError when the result overflows.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError("evaluation point must be finite")
    with np.errstate(all="ignore"):
        v = complex(f._ev(z))
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise EvaluationRangeError(f"evaluation overflowed at {z!r}")
    return v


def evaluate_grid(f: EntireFunction, zs: np.ndarray) -> np.ndarray:
    """Vectorized evaluation; non-finite outputs are left for the caller."""
    zs = np.asarray(zs, dtype=complex)
    with np.errstate(all="ignore"):
        out = np.asarray(f._ev(zs), dtype=complex)
    if out.shape != zs.shape:
        out = np.broadcast_to(out, zs.shape).copy()
    return out


def evaluate_derivative(f: EntireFunction, z) -> complex:
    return evaluate(f.derivative(), z)


def rescale(f: EntireFunction, n: int) -> EntireFunction:
    """The rescaled member f_n(z) = f(n z) / n of the dilation family."""
    if not isinstance(n, int) or n < 1:
        raise ValueError("rescale index must be a positive integer")
    inner = Composition(f, Product(Constant(complex(n)), Var()))
    return Product(Constant(complex(1.0 / n)), inner)


def conjugate_by_shift(f: EntireFunction, offset) -> EntireFunction:
    """Conjugate f by the translation z -> z - offset.

    Returns the function z -> f(z + offset) - offset, which has the
    same dynamics as f in coordinates moved by the offset.
    """
    w = complex(offset)
    shifted = Composition(f, Sum(Var(), Constant(w)))
    return Sum(shifted, Constant(-w))


def wandering_base_function() -> EntireFunction:
    """The one-variable map z + sin(2 pi z) + 1 - sqrt(1 - 1/(4 pi^2)).

    Its critical points closest to the integers form a ladder that the
    map translates by one step; conjugating by the critical offset
    (see solve_critical_offset) turns that ladder into the integers.
    """
    z = Var()
    wave = Sine(Product(Constant(complex(_TWO_PI)), z))
    return Sum(Sum(z, wave), Constant(complex(1.0 - _CRITICAL_SINE_VALUE)))


@dataclass(frozen=True)
class CriticalOffset:
    """Root of sin(2 pi x) = sqrt(1 - 1/(4 pi^2)) in (1/4, 1/2)."""

    value: float
    residual: float


def solve_critical_offset() -> CriticalOffset:
    """Bisect for the critical offset of the wandering base function.

    The target equation sin(2 pi x) = sqrt(1 - 1/(4 pi^2)) has exactly
    one root in (1/4, 1/2) because sin(2 pi x) is strictly decreasing
    there; at the root the derivative of z + sin(2 pi z) vanishes.
    """
    target = _CRITICAL_SINE_VALUE

    def g(x: float) -> float:
        return math.sin(_TWO_PI * x) - target

    lo, hi = 0.25, 0.5
    assert g(lo) > 0.0 > g(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    return CriticalOffset(value=root, residual=abs(g(root)))


# Text form: prefix notation such as add(var, sin(mul(c(6.28), var))).

_TOKEN = re.compile(
    r"\s*(?:(?P<name>[a-z]+)|(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<punct>[(),]))"
)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def to_text(f: EntireFunction) -> str:
    """Serialize an expression to its prefix text form."""
    if isinstance(f, Constant):
        if f.value.imag == 0.0:
            return f"c({_fmt_float(f.value.real)})"
        return f"c({_fmt_float(f.value.real)},{_fmt_float(f.value.imag)})"
    if isinstance(f, Var):
        return "var"
    if isinstance(f, Sum):
        return f"add({to_text(f.left)},{to_text(f.right)})"
    if isinstance(f, Product):
        return f"mul({to_text(f.left)},{to_text(f.right)})"
    if isinstance(f, Power):
        return f"pow({to_text(f.base)},{f.exponent})"
    if isinstance(f, Composition):
        return f"comp({to_text(f.outer)},{to_text(f.inner)})"
    if isinstance(f, Sine):
        return f"sin({to_text(f.arg)})"
    if isinstance(f, Exp):
        return f"exp({to_text(f.arg)})"
    raise TypeError(f"unknown node {type(f).__name__}")


class _Parser:
    def __init__(self, text: str):
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ValueError(f"bad token at position {pos}: {text[pos:pos+10]!r}")
            self.tokens.append(m)
            pos = m.end()
        self.i = 0

    def _next(self):
        if self.i >= len(self.tokens):
            raise ValueError("unexpected end of expression")
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _expect(self, punct: str):
        tok = self._next()
        if tok.group("punct") != punct:
            raise ValueError(f"expected {punct!r} at position {tok.start()}")

    def parse(self) -> EntireFunction:
        node = self._expr()
        if self.i != len(self.tokens):
            tok = self.tokens[self.i]
            raise ValueError(f"trailing input at position {tok.start()}")
        return node

    def _number(self) -> float:
        tok = self._next()
        if tok.group("num") is None:
            raise ValueError(f"expected a number at position {tok.start()}")
        return float(tok.group("num"))

    def _expr(self) -> EntireFunction:
        tok = self._next()
        name = tok.group("name")
        if name is None:
            raise ValueError(f"expected a name at position {tok.start()}")
        if name == "var":
            return Var()
        self._expect("(")
        if name == "c":
            re_part = self._number()
            tok = self._next()
            if tok.group("punct") == ",":
                im_part = self._number()
                self._expect(")")
                return Constant(complex(re_part, im_part))
            if tok.group("punct") == ")":
                return Constant(complex(re_part))
            raise ValueError(f"expected ',' or ')' at position {tok.start()}")
        if name in ("add", "mul", "comp"):
            a = self._expr()
            self._expect(",")
            b = self._expr()
            self._expect(")")
            cls = {"add": Sum, "mul": Product, "comp": Composition}[name]
            return cls(a, b)
        if name == "pow":
            base = self._expr()
            self._expect(",")
            k = self._number()
            self._expect(")")
            if k != int(k):
                raise ValueError("power exponent must be an integer")
            return Power(base, int(k))
        if name in ("sin", "exp"):
            arg = self._expr()
            self._expect(")")
            return (Sine if name == "sin" else Exp)(arg)
        raise ValueError(f"unknown function name {name!r}")


def parse_text(text: str) -> EntireFunction:
    """Parse the prefix text form produced by to_text."""
    return _Parser(text).parse()
