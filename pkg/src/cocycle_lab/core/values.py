"""Exact and high-precision numeric values accepted by the laboratory.

A value is one of three kinds:

* ``Fraction`` for rationals (integers, ``p/q``),
* ``QuadraticSurd`` for (a + b√D)/c with big-integer parts,
* an mpmath real for decimal literals, transcendental constants and
  expressions that mix radicands.
"""

from __future__ import annotations

import ast
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from mpmath import mp, mpf

from ..utils.exceptions import ConfigurationError

# Fraction, QuadraticSurd or an mpmath real
Number = Any

_SQRT_NAME = re.compile(r"^sqrt(\d+)$")
_DECIMAL_LITERAL = re.compile(r"^\s*[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?\s*$")


def squarefree_split(n: int) -> tuple[int, int]:
    """Return (s, m) with n = s²·m and m squarefree, for n ≥ 1."""
    if n < 1:
        raise ValueError("squarefree_split needs a positive integer")
    square, rest = 1, n
    p = 2
    while p * p <= rest:
        while rest % (p * p) == 0:
            rest //= p * p
            square *= p
        p += 1 if p == 2 else 2
    return square, rest


@dataclass(frozen=True)
class QuadraticSurd:
    """The real number (a + b√D)/c with D > 1 squarefree, b ≠ 0 and c > 0.

    Build instances through :meth:`make`, which normalizes and collapses
    rational results to ``Fraction``.
    """

    a: int
    b: int
    c: int
    D: int

    @classmethod
    def make(cls, a: int, b: int, c: int, D: int) -> Fraction | QuadraticSurd:
        if c == 0:
            raise ValueError("Surd denominator must be non-zero")
        if D < 0:
            raise ValueError("Surd radicand must be non-negative")
        if b == 0 or D == 0:
            return Fraction(a, c)
        square, D = squarefree_split(D)
        b *= square
        if D == 1:
            return Fraction(a + b, c)
        if c < 0:
            a, b, c = -a, -b, -c
        g = math.gcd(math.gcd(a, b), c)
        return cls(a // g, b // g, c // g, D)

    @classmethod
    def sqrt_of(cls, value: Fraction) -> Fraction | QuadraticSurd:
        """Exact square root of a non-negative rational."""
        if value < 0:
            raise ValueError("Square root of a negative number")
        p, q = value.numerator, value.denominator
        return cls.make(0, 1, q, p * q)

    @classmethod
    def from_parts(cls, r: Fraction, s: Fraction, D: int) -> Fraction | QuadraticSurd:
        c = r.denominator * s.denominator // math.gcd(r.denominator, s.denominator)
        return cls.make(int(r * c), int(s * c), c, D)

    def parts(self) -> tuple[Fraction, Fraction]:
        return Fraction(self.a, self.c), Fraction(self.b, self.c)

    def _coerce(self, other: Any) -> tuple[Fraction, Fraction] | None:
        if isinstance(other, QuadraticSurd):
            if other.D != self.D:
                raise ValueError("Cannot combine surds with different radicands")
            return other.parts()
        if isinstance(other, (int, Fraction)):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other: Any) -> Fraction | QuadraticSurd:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        r, s = self.parts()
        return QuadraticSurd.from_parts(r + o[0], s + o[1], self.D)

    __radd__ = __add__

    def __neg__(self) -> QuadraticSurd:
        return QuadraticSurd(-self.a, -self.b, self.c, self.D)

    def __sub__(self, other: Any) -> Fraction | QuadraticSurd:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        r, s = self.parts()
        return QuadraticSurd.from_parts(r - o[0], s - o[1], self.D)

    def __rsub__(self, other: Any) -> Fraction | QuadraticSurd:
        return (-self) + other

    def __mul__(self, other: Any) -> Fraction | QuadraticSurd:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        r, s = self.parts()
        return QuadraticSurd.from_parts(
            r * o[0] + s * o[1] * self.D, r * o[1] + s * o[0], self.D
        )

    __rmul__ = __mul__

    def inverse(self) -> Fraction | QuadraticSurd:
        r, s = self.parts()
        norm = r * r - s * s * self.D
        return QuadraticSurd.from_parts(r / norm, -s / norm, self.D)

    def __truediv__(self, other: Any) -> Fraction | QuadraticSurd:
        if isinstance(other, QuadraticSurd):
            return self * other.inverse()
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        return NotImplemented

    def __rtruediv__(self, other: Any) -> Fraction | QuadraticSurd:
        if isinstance(other, (int, Fraction)):
            return self.inverse() * other
        return NotImplemented

    def __floor__(self) -> int:
        root = math.isqrt(self.b * self.b * self.D)
        floor_b_root = root if self.b > 0 else -root - 1
        return (self.a + floor_b_root) // self.c

    def frac(self) -> Fraction | QuadraticSurd:
        return self - math.floor(self)

    def to_mpf(self) -> Any:
        return (mpf(self.a) + self.b * mp.sqrt(self.D)) / self.c

    def __float__(self) -> float:
        with mp.workprec(80):
            return float(self.to_mpf())

    def to_dict(self) -> dict[str, int]:
        return {"a": self.a, "b": self.b, "c": self.c, "D": self.D}

    def __str__(self) -> str:
        return f"({self.a}{self.b:+d}*sqrt({self.D}))/{self.c}"


def _is_exact(value: Any) -> bool:
    return isinstance(value, (Fraction, QuadraticSurd))


def _as_mpf(value: Any) -> Any:
    if isinstance(value, Fraction):
        return mpf(value.numerator) / value.denominator
    if isinstance(value, QuadraticSurd):
        return value.to_mpf()
    return value


def _compatible(x: Any, y: Any) -> bool:
    if not (_is_exact(x) and _is_exact(y)):
        return False
    if isinstance(x, QuadraticSurd) and isinstance(y, QuadraticSurd):
        return x.D == y.D
    return True


def _binary(op: ast.operator, x: Any, y: Any) -> Any:
    if isinstance(op, ast.Pow):
        if isinstance(y, Fraction) and y.denominator == 1 and _is_exact(x):
            exponent = int(y)
            if abs(exponent) > 64:
                raise ValueError("Exponent too large for exact arithmetic")
            result: Any = Fraction(1)
            for _ in range(abs(exponent)):
                result = result * x
            return result if exponent >= 0 else 1 / result
        if isinstance(y, Fraction) and y == Fraction(1, 2) and isinstance(x, Fraction):
            return QuadraticSurd.sqrt_of(x)
        return _as_mpf(x) ** _as_mpf(y)
    if _compatible(x, y):
        if isinstance(op, ast.Add):
            return x + y
        if isinstance(op, ast.Sub):
            return x - y
        if isinstance(op, ast.Mult):
            return x * y
        if isinstance(op, ast.Div):
            if y == 0:
                raise ValueError("Division by zero")
            return x / y
    else:
        a, b = _as_mpf(x), _as_mpf(y)
        if isinstance(op, ast.Add):
            return a + b
        if isinstance(op, ast.Sub):
            return a - b
        if isinstance(op, ast.Mult):
            return a * b
        if isinstance(op, ast.Div):
            return a / b
    raise ValueError(f"Unsupported operator: {type(op).__name__}")


class _ExpressionEvaluator:
    """Walk a restricted Python expression tree."""

    def __init__(self, text: str) -> None:
        self.text = text

    def visit(self, node: ast.AST) -> Any:
        if isinstance(node, ast.Expression):
            return self.visit(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(
                node.value, (int, float)
            ):
                raise ValueError(f"Unsupported literal: {node.value!r}")
            if isinstance(node.value, int):
                return Fraction(node.value)
            literal = ast.get_source_segment(self.text, node) or repr(node.value)
            return mpf(literal)
        if isinstance(node, ast.UnaryOp):
            operand = self.visit(node.operand)
            if isinstance(node.op, ast.USub):
                return -operand
            if isinstance(node.op, ast.UAdd):
                return operand
        if isinstance(node, ast.BinOp):
            return _binary(node.op, self.visit(node.left), self.visit(node.right))
        if isinstance(node, ast.Name):
            return self._constant(node.id)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            if node.func.id == "sqrt" and len(node.args) == 1 and not node.keywords:
                argument = self.visit(node.args[0])
                if isinstance(argument, Fraction):
                    return QuadraticSurd.sqrt_of(argument)
                return mp.sqrt(_as_mpf(argument))
        raise ValueError(f"Unsupported expression element: {ast.dump(node)}")

    @staticmethod
    def _constant(name: str) -> Any:
        if name == "e":
            return +mp.e
        if name == "pi":
            return +mp.pi
        if name in ("golden", "phi"):
            return QuadraticSurd.make(1, 1, 2, 5)
        match = _SQRT_NAME.match(name)
        if match:
            return QuadraticSurd.sqrt_of(Fraction(int(match.group(1))))
        raise ValueError(f"Unknown constant: {name}")


def _balance_parentheses(text: str) -> str:
    depth = 0
    missing = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            if depth == 0:
                missing += 1
            else:
                depth -= 1
    return "(" * missing + text + ")" * depth


def is_decimal_literal(text: str) -> bool:
    return bool(_DECIMAL_LITERAL.match(text))


def parse_value(value: Any, precision_bits: int = 256) -> Number:
    """Parse user input into a Fraction, QuadraticSurd or mpmath real.

    Accepts numbers, decimal strings, expressions over ``sqrt``, ``e``,
    ``pi``, ``golden`` and ``sqrtN`` shorthands, and surd objects given as a
    mapping or JSON text with keys ``a``, ``b``, ``c``, ``D``.

    Raises:
        ConfigurationError: If the input cannot be parsed.
    """
    if isinstance(value, (Fraction, QuadraticSurd)):
        return value
    if isinstance(value, bool):
        raise ConfigurationError(f"Invalid numeric value: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    with mp.workprec(precision_bits):
        if isinstance(value, float):
            return mpf(repr(value))
        if isinstance(value, mpf):
            return +value
        if isinstance(value, dict):
            return _surd_from_mapping(value)
        if not isinstance(value, str):
            raise ConfigurationError(f"Invalid numeric value: {value!r}")
        text = value.strip()
        if text.startswith("{"):
            try:
                return _surd_from_mapping(json.loads(text))
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"Invalid surd JSON: {text}") from e
        balanced = _balance_parentheses(text)
        try:
            tree = ast.parse(balanced, mode="eval")
            return _ExpressionEvaluator(balanced).visit(tree)
        except (SyntaxError, ValueError, ZeroDivisionError) as e:
            raise ConfigurationError(f"Cannot parse value '{text}': {e}") from e


def _surd_from_mapping(data: Any) -> Fraction | QuadraticSurd:
    try:
        return QuadraticSurd.make(
            int(data["a"]), int(data["b"]), int(data.get("c", 1)), int(data["D"])
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid surd specification: {data!r}") from e


def value_to_mpf(value: Number) -> Any:
    """High-precision real at the current working precision."""
    return _as_mpf(value)


def describe(value: Number) -> Any:
    """JSON-friendly description of a parsed value."""
    if isinstance(value, QuadraticSurd):
        return value.to_dict()
    if isinstance(value, Fraction):
        return str(value)
    return mp.nstr(value, 20)


def split_values(text: str) -> list[str]:
    """Split a comma-separated list of values at parenthesis depth zero."""
    parts, depth, current = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth <= 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    parts.append("".join(current).strip())
    return [p for p in parts if p]
