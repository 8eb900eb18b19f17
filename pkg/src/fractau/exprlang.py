"""Tiny expression language for problem data.

Grammar (lowest to highest precedence)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?          # right associative
    atom  := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Integer literals and their quotients stay exact (:class:`Rational`), so that
``t^(13/4)`` keeps an exact exponent. Decimal literals are :class:`Real`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence, Union

import mpmath
from mpmath import mp, mpf

from . import numerics


class ParseError(ValueError):
    def __init__(self, position: int, message: str):
        super().__init__(f"{message} (at offset {position})")
        self.position = position
        self.message = message


class EvaluationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Rational:
    value: Fraction


@dataclass(frozen=True)
class Real:
    value: Union[str, mpf]


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Rational, Real, Var, Const, Neg, Binary, Call]

FUNCTIONS = {
    "sin": (1, mpmath.sin),
    "cos": (1, mpmath.cos),
    "exp": (1, mpmath.exp),
    "ln": (1, None),
    "sqrt": (1, None),
    "gamma": (1, numerics.gamma),
    "beta": (2, numerics.beta),
}
CONSTANTS = ("pi", "e")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, allowed_vars: Sequence[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.allowed = tuple(allowed_vars)

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op: str):
        kind, value, pos = self.peek()
        if kind != "op" or value != op:
            raise ParseError(pos, f"expected {op!r}" + (" but input ended" if kind == "end" else f", found {value!r}"))
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(pos, f"unexpected {value!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, value, pos = self.advance()
        if kind == "num":
            if re.fullmatch(r"\d+", value):
                return Rational(Fraction(int(value)))
            return Real(value)
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if value not in FUNCTIONS:
                    raise ParseError(pos, f"unknown function {value!r}")
                self.advance()
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[value][0]
                if len(args) != arity:
                    raise ParseError(pos, f"{value} takes {arity} argument(s), got {len(args)}")
                return Call(value, tuple(args))
            if value in CONSTANTS:
                return Const(value)
            if value in FUNCTIONS:
                raise ParseError(pos, f"function {value!r} needs an argument list")
            if value in ("t", "s"):
                if value not in self.allowed:
                    raise ParseError(pos, f"variable {value!r} is not allowed here")
                return Var(value)
            raise ParseError(pos, f"unknown identifier {value!r}")
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ParseError(pos, "unexpected end of input")
        raise ParseError(pos, f"unexpected {value!r}")


def parse(text: str, allowed_vars: Sequence[str] = ("t",)) -> Expr:
    """Parse ``text`` into an AST, raising :class:`ParseError` with an offset."""
    if not text or not text.strip():
        raise ParseError(0, "empty expression")
    return _Parser(text, allowed_vars).parse()


# ---------------------------------------------------------------------------
# Evaluation


def _power(x: mpf, y: mpf, exact: Fraction | None = None) -> mpf:
    integral = exact.denominator == 1 if exact is not None else y == mpmath.floor(y)
    if integral:
        k = int(exact) if exact is not None else int(y)
        if x == 0 and k < 0:
            raise EvaluationError("zero raised to a negative power")
        return x**k
    if x < 0:
        raise EvaluationError("negative base with a non-integer exponent")
    if x == 0:
        if y < 0:
            raise EvaluationError("zero raised to a negative power")
        return mpf(0)
    return mpmath.exp(y * mpmath.log(x))


def _call(name: str, args: list) -> mpf:
    if name == "ln":
        if args[0] <= 0:
            raise EvaluationError("ln of a non-positive number")
        return mpmath.log(args[0])
    if name == "sqrt":
        if args[0] < 0:
            raise EvaluationError("sqrt of a negative number")
        return mpmath.sqrt(args[0])
    try:
        return FUNCTIONS[name][1](*args)
    except numerics.DomainError as exc:
        raise EvaluationError(str(exc)) from exc


def _eval(node: Expr, env: Mapping[str, mpf]) -> mpf:
    if isinstance(node, Rational):
        return numerics.to_mpf(node.value)
    if isinstance(node, Real):
        return mpf(node.value)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Const):
        return +mp.pi if node.name == "pi" else mpmath.e + 0
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Binary):
        left = _eval(node.left, env)
        if node.op == "^":
            exact = node.right.value if isinstance(node.right, Rational) else None
            return _power(left, _eval(node.right, env), exact)
        right = _eval(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if right == 0:
            raise EvaluationError("division by zero")
        return left / right
    if isinstance(node, Call):
        return _call(node.name, [_eval(a, env) for a in node.args])
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(expr: Expr, bindings: Mapping[str, object] | None = None, precision: int | None = None) -> mpf:
    """Evaluate ``expr`` with variables taken from ``bindings``."""
    bindings = bindings or {}
    missing = free_vars(expr) - set(bindings)
    if missing:
        raise EvaluationError(f"unbound variable(s): {', '.join(sorted(missing))}")
    if precision is None:
        return _eval(expr, {k: numerics.to_mpf(v) for k, v in bindings.items()})
    with mp.workdps(precision):
        return +_eval(expr, {k: numerics.to_mpf(v) for k, v in bindings.items()})


def as_function(expr: Expr, variables: Sequence[str] = ("t",)) -> Callable[..., mpf]:
    """Positional-argument callable evaluating ``expr``."""
    names = tuple(variables)

    def f(*args):
        return _eval(expr, {n: numerics.to_mpf(a) for n, a in zip(names, args)})

    f.expr = expr
    return f


def free_vars(node: Expr) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return free_vars(node.operand)
    if isinstance(node, Binary):
        return free_vars(node.left) | free_vars(node.right)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= free_vars(a)
        return out
    return set()


# ---------------------------------------------------------------------------
# Constant folding


def _is_const(node: Expr) -> bool:
    return isinstance(node, (Rational, Real))


def _const_value(node):
    return node.value if isinstance(node, Rational) else mpf(node.value)


def _make_const(value) -> Expr:
    if isinstance(value, Fraction):
        return Rational(value)
    return Real(+value)


def _fold_binary(op: str, a, b):
    exact = isinstance(a, Fraction) and isinstance(b, Fraction)
    if op == "^":
        if exact and b.denominator == 1 and not (a == 0 and b < 0):
            return a ** int(b)
        return _power(numerics.to_mpf(a), numerics.to_mpf(b), b if isinstance(b, Fraction) else None)
    if op == "/" and b == 0:
        raise EvaluationError("division by zero")
    if not exact:
        a, b = numerics.to_mpf(a), numerics.to_mpf(b)
    return {"+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b, "/": lambda: a / b}[op]()


def _product_factors(node: Expr) -> list:
    if isinstance(node, Binary) and node.op == "*":
        return _product_factors(node.left) + _product_factors(node.right)
    return [node]


def constant_fold(node: Expr) -> Expr:
    """Collapse variable-free subtrees to literals and gather constant factors.

    Exact arithmetic is kept whenever every operand is a :class:`Rational`.
    """
    if isinstance(node, (Rational, Real, Var)):
        return node
    if isinstance(node, Const):
        return Real(+mp.pi if node.name == "pi" else mpmath.e + 0)
    if isinstance(node, Neg):
        inner = constant_fold(node.operand)
        if _is_const(inner):
            return _make_const(-_const_value(inner))
        if isinstance(inner, Neg):
            return inner.operand
        return Neg(inner)
    if isinstance(node, Call):
        args = tuple(constant_fold(a) for a in node.args)
        if all(_is_const(a) for a in args):
            return _make_const(_call(node.name, [numerics.to_mpf(_const_value(a)) for a in args]))
        return Call(node.name, args)
    assert isinstance(node, Binary)
    left = constant_fold(node.left)
    right = constant_fold(node.right)
    if _is_const(left) and _is_const(right):
        return _make_const(_fold_binary(node.op, _const_value(left), _const_value(right)))
    if node.op == "*":
        factors = _product_factors(left) + _product_factors(right)
        coeff = Fraction(1)
        rest = []
        for f in factors:
            if _is_const(f):
                coeff = _fold_binary("*", coeff, _const_value(f))
            else:
                rest.append(f)
        if coeff == 0:
            return Rational(Fraction(0))
        body = rest[0]
        for f in rest[1:]:
            body = Binary("*", body, f)
        return body if coeff == 1 else Binary("*", _make_const(coeff), body)
    if node.op in "+-" and _is_const(right) and _const_value(right) == 0:
        return left
    if node.op == "+" and _is_const(left) and _const_value(left) == 0:
        return right
    if node.op == "-" and _is_const(left) and _const_value(left) == 0:
        return constant_fold(Neg(right))
    if node.op == "/" and _is_const(right):
        value = _const_value(right)
        if value == 0:
            raise EvaluationError("division by zero")
        inv = Fraction(1) / value if isinstance(value, Fraction) else 1 / value
        return constant_fold(Binary("*", _make_const(inv), left))
    if node.op == "^" and _is_const(right) and _const_value(right) == 1:
        return left
    return Binary(node.op, left, right)


# ---------------------------------------------------------------------------
# Printing


def to_text(node: Expr) -> str:
    """Fully parenthesised source text that parses back to the same tree."""
    if isinstance(node, Rational):
        v = node.value
        if v.denominator == 1:
            return str(v.numerator) if v >= 0 else f"(-{-v.numerator})"
        sign = "-" if v < 0 else ""
        return f"({sign}{abs(v.numerator)}/{v.denominator})"
    if isinstance(node, Real):
        if isinstance(node.value, str):
            return node.value
        text = mpmath.nstr(node.value, mp.dps + 5)
        return f"({text})" if text.startswith("-") else text
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, Binary):
        return f"({to_text(node.left)}{node.op}{to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")
