"""Exact dyadic rationals and polynomials with dyadic coefficients.

A dyadic rational is ``num / 2**exp``.  Every probability in the protocol
model is uniform over a power-of-two space and every reward is a finite
binary fraction, so this type is closed under everything the solvers do.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Sequence, Union

__all__ = ["Dyadic", "DyadicPolynomial", "dyadic_arith", "poly_eval", "ONE", "ZERO", "HALF"]

_TEXT = re.compile(r"^\s*(-?\d+)\s*(?:/\s*2\s*\^\s*(\d+))?\s*$")


class Dyadic:
    """Immutable exact value ``num / 2**exp`` kept in canonical form.

    Canonical form: ``exp == 0`` or ``num`` is odd.  Two equal values
    therefore have identical fields, which keeps hashing cheap.

    >>> Dyadic(3, 3) * 2
    Dyadic(3, 2)
    >>> str(Dyadic(1, 1) + Dyadic(1, 2))
    '3/2^2'
    """

    __slots__ = ("num", "exp")

    num: int
    exp: int

    def __new__(cls, num: Union[int, "Dyadic", str] = 0, exp: int = 0) -> "Dyadic":
        if isinstance(num, Dyadic):
            if exp == 0:
                return num
            num, exp = num.num, num.exp + exp
        elif isinstance(num, str):
            return cls.parse(num)
        elif not isinstance(num, int) or isinstance(num, bool):
            raise TypeError(f"Dyadic numerator must be int, got {type(num).__name__}")
        if exp < 0:
            num, exp = num << -exp, 0
        if num == 0:
            exp = 0
        elif exp:
            tz = (num & -num).bit_length() - 1
            if tz:
                shift = min(tz, exp)
                num >>= shift
                exp -= shift
        self = object.__new__(cls)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)
        return self

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    def __reduce__(self):
        return (Dyadic, (self.num, self.exp))

    # -- construction -----------------------------------------------------

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse ``"num/2^exp"`` (or a bare integer)."""
        m = _TEXT.match(text)
        if not m:
            raise ValueError(f"not a dyadic literal: {text!r}")
        return cls(int(m.group(1)), int(m.group(2) or 0))

    @classmethod
    def from_fraction(cls, value: Fraction) -> "Dyadic":
        den = value.denominator
        if den & (den - 1):
            raise ValueError(f"{value} is not a dyadic rational")
        return cls(value.numerator, den.bit_length() - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    # -- helpers ----------------------------------------------------------

    def scale(self, k: int) -> "Dyadic":
        """Return ``self * 2**-k``."""
        return Dyadic(self.num, self.exp + k)

    def numerator_at(self, bits: int) -> int:
        """Integer ``self * 2**bits``; raises if the value is not on that grid."""
        if self.exp > bits:
            raise ValueError(f"{self} is not a multiple of 2^-{bits}")
        return self.num << (bits - self.exp)

    def is_integer(self) -> bool:
        return self.exp == 0

    # -- arithmetic -------------------------------------------------------

    @staticmethod
    def _coerce(other) -> "Dyadic | None":
        if isinstance(other, Dyadic):
            return other
        if isinstance(other, int) and not isinstance(other, bool):
            return Dyadic(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.exp >= o.exp:
            return Dyadic(self.num + (o.num << (self.exp - o.exp)), self.exp)
        return Dyadic((self.num << (o.exp - self.exp)) + o.num, o.exp)

    __radd__ = __add__

    def __neg__(self):
        return Dyadic(-self.num, self.exp)

    def __pos__(self):
        return self

    def __abs__(self):
        return self if self.num >= 0 else -self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Dyadic(self.num * o.num, self.exp + o.exp)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        return Dyadic(self.num**k, self.exp * k)

    # -- comparison -------------------------------------------------------

    def _cmp(self, other) -> int:
        o = self._coerce(other)
        if o is None:
            raise TypeError
        e = max(self.exp, o.exp)
        a = self.num << (e - self.exp)
        b = o.num << (e - o.exp)
        return (a > b) - (a < b)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.num == o.num and self.exp == o.exp

    def __hash__(self):
        return hash(self.num) if self.exp == 0 else hash((self.num, self.exp))

    def __lt__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self._cmp(other) < 0

    def __le__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self._cmp(other) <= 0

    def __gt__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self._cmp(other) > 0

    def __ge__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self._cmp(other) >= 0

    def __bool__(self):
        return self.num != 0

    def __str__(self):
        return f"{self.num}/2^{self.exp}"

    def __repr__(self):
        return f"Dyadic({self.num}, {self.exp})"


ZERO = Dyadic(0)
ONE = Dyadic(1)
HALF = Dyadic(1, 1)


def dyadic_arith(op: str, a: Dyadic, b: Dyadic):
    """Apply ``op`` in {"add", "sub", "mul", "cmp"}; ``cmp`` returns -1, 0 or 1."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "cmp":
        return a._cmp(b)
    raise ValueError(f"unknown op {op!r}")


class DyadicPolynomial:
    """Polynomial in one variable with exact dyadic coefficients.

    ``coeffs[i]`` is the coefficient of ``p**i``.  Trailing zeros are
    stripped, so the zero polynomial has no coefficients and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Union[Dyadic, int]] = ()):
        cs = [Dyadic(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs: tuple[Dyadic, ...] = tuple(cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, p: Union[Dyadic, int]) -> Dyadic:
        return poly_eval(self, Dyadic(p))

    def _binop(self, other, fn):
        if isinstance(other, (int, Dyadic)):
            other = DyadicPolynomial([other])
        if not isinstance(other, DyadicPolynomial):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Dyadic(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Dyadic(0),) * (n - len(other.coeffs))
        return DyadicPolynomial(fn(x, y) for x, y in zip(a, b))

    def __add__(self, other):
        return self._binop(other, lambda x, y: x + y)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, lambda x, y: x - y)

    def __neg__(self):
        return DyadicPolynomial(-c for c in self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, Dyadic)):
            return DyadicPolynomial(c * other for c in self.coeffs)
        if not isinstance(other, DyadicPolynomial):
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return DyadicPolynomial()
        out = [Dyadic(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return DyadicPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = DyadicPolynomial([1])
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, DyadicPolynomial):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"DyadicPolynomial([{', '.join(str(c) for c in self.coeffs)}])"


def poly_eval(q: Union[DyadicPolynomial, Sequence], p: Dyadic) -> Dyadic:
    """Horner evaluation of ``q`` at ``p``."""
    coeffs = q.coeffs if isinstance(q, DyadicPolynomial) else [Dyadic(c) for c in q]
    acc = Dyadic(0)
    for c in reversed(coeffs):
        acc = acc * p + c
    return acc
