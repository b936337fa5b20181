"""A small arithmetic expression language for model and section definitions.

Grammar (whitespace is ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := sin | cos | tan | exp | log | sqrt | abs

``^`` binds tighter than unary minus and associates to the right, so
``-2^2 == -4`` and ``2^3^2 == 512``. ``pi`` is a constant unless declared as
a variable. Evaluation follows IEEE doubles, but any operation leaving the
real domain (division by zero, log of a nonpositive number, a non-integer
power of a negative number, overflow) raises :class:`EvalDomainError`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from hjcheck.errors import DomainError, InputError
from hjcheck.geometry import FD_REL_STEP, ScalarField

FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
}
CONSTANTS = {"pi": math.pi}


class ParseError(InputError):
    def __init__(self, message: str, position: int, text: str):
        super().__init__(f"{message} at position {position} in {text!r}")
        self.position = position
        self.text = text


class EvalError(InputError):
    """Evaluation could not start, e.g. a variable has no value."""


class EvalDomainError(DomainError):
    def __init__(self, message: str, subexpression: str):
        super().__init__(f"{message} in '{subexpression}'")
        self.subexpression = subexpression


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, declared: frozenset[str]):
        self.text = text
        self.declared = declared
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok[2], self.text)

    def expect(self, value: str):
        tok = self.peek()
        if tok[1] != value or tok[0] != "op":
            self.error(f"expected {value!r}, found {tok[1] or 'end of input'!r}")
        return self.advance()

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            self.error("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.advance()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.advance()
        kind, value, pos = tok
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value in FUNCTIONS and value not in self.declared:
                if not (self.peek()[0] == "op" and self.peek()[1] == "("):
                    self.error(f"function {value!r} needs a parenthesized argument", tok)
                self.advance()
                arg = self.expr()
                if self.peek()[1] == ",":
                    self.error(f"function {value!r} takes exactly one argument")
                self.expect(")")
                return Call(value, arg)
            if value in self.declared:
                if self.peek()[0] == "op" and self.peek()[1] == "(":
                    self.error(f"{value!r} is a variable, not a function")
                return Var(value)
            if value in CONSTANTS:
                return Num(CONSTANTS[value])
            self.error(f"unknown identifier {value!r}", tok)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.error("unexpected end of input", tok)
        self.error(f"unexpected {value!r}", tok)


def parse(text: str, declared: Iterable[str] = ()) -> Expr:
    """Parse ``text``; every identifier must be a function, ``pi`` or in ``declared``."""
    if not isinstance(text, str):
        raise InputError(f"expression must be a string, got {type(text).__name__}")
    return _Parser(text, frozenset(declared)).parse()


def to_text(node: Expr) -> str:
    """Canonical fully parenthesized form; parsing it gives back the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def free_variables(node: Expr) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, BinOp):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Call):
        return free_variables(node.arg)
    return frozenset()


def _checked(value: float, node: Expr) -> float:
    if not math.isfinite(value):
        raise EvalDomainError("result is not finite", to_text(node))
    return value


def _power(base: float, exponent: float, node: Expr) -> float:
    if base < 0 and not float(exponent).is_integer():
        raise EvalDomainError("non-integer power of a negative number", to_text(node))
    if base == 0 and exponent < 0:
        raise EvalDomainError("zero raised to a negative power", to_text(node))
    try:
        return math.pow(base, exponent)
    except OverflowError:
        raise EvalDomainError("overflow", to_text(node)) from None


def _call(func: str, arg: float, node: Expr) -> float:
    if func == "log" and arg <= 0:
        raise EvalDomainError("log of a nonpositive number", to_text(node))
    if func == "sqrt" and arg < 0:
        raise EvalDomainError("sqrt of a negative number", to_text(node))
    try:
        return FUNCTIONS[func](arg)
    except (OverflowError, ValueError) as exc:
        raise EvalDomainError(str(exc), to_text(node)) from None


def compile_expr(node: Expr) -> Callable[[Mapping[str, float]], float]:
    """Turn a tree into a closure env -> float with the same semantics as :func:`evaluate`."""
    if isinstance(node, Num):
        v = node.value
        return lambda env: v
    if isinstance(node, Var):
        name = node.name

        def var(env):
            try:
                return float(env[name])
            except KeyError:
                raise EvalError(f"missing variable {name!r}") from None

        return var
    if isinstance(node, Neg):
        inner = compile_expr(node.operand)
        return lambda env: -inner(env)
    if isinstance(node, Call):
        arg = compile_expr(node.arg)
        func = node.func
        return lambda env: _checked(_call(func, arg(env), node), node)
    if isinstance(node, BinOp):
        left, right = compile_expr(node.left), compile_expr(node.right)
        op = node.op
        if op == "+":
            return lambda env: _checked(left(env) + right(env), node)
        if op == "-":
            return lambda env: _checked(left(env) - right(env), node)
        if op == "*":
            return lambda env: _checked(left(env) * right(env), node)
        if op == "/":
            def div(env):
                d = right(env)
                if d == 0:
                    raise EvalDomainError("division by zero", to_text(node))
                return _checked(left(env) / d, node)
            return div
        if op == "^":
            return lambda env: _checked(_power(left(env), right(env), node), node)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Expr, env: Mapping[str, float]) -> float:
    return compile_expr(node)(env)


def grad_fd(node: Expr, env: Mapping[str, float], variables: Sequence[str]) -> np.ndarray:
    """Central-difference gradient in ``variables`` with step 1e-6 * max(1, |v|)."""
    f = compile_expr(node)
    g = np.empty(len(variables))
    for i, name in enumerate(variables):
        if name not in env:
            raise EvalError(f"missing variable {name!r}")
        v = float(env[name])
        h = FD_REL_STEP * max(1.0, abs(v))
        try:
            plus = f({**env, name: v + h})
            minus = f({**env, name: v - h})
        except EvalDomainError as exc:
            raise EvalDomainError(f"differencing in {name!r} left the domain",
                                  exc.subexpression) from None
        g[i] = (plus - minus) / (2.0 * h)
    return g


def expression_field(text: str, coords: Sequence[str], params: Mapping[str, float] | None = None
                     ) -> ScalarField:
    """A ScalarField over the coordinates ``coords`` (in order); gradients by central differences."""
    params = dict(params or {})
    node = parse(text, list(coords) + list(params))
    f = compile_expr(node)
    names = list(coords)

    def value(z):
        return f({**params, **dict(zip(names, (float(v) for v in z)))})

    return ScalarField(value)


def expression_vector(texts: Sequence[str], coords: Sequence[str],
                      params: Mapping[str, float] | None = None) -> Callable[[np.ndarray], np.ndarray]:
    params = dict(params or {})
    declared = list(coords) + list(params)
    funcs = [compile_expr(parse(t, declared)) for t in texts]
    names = list(coords)

    def value(z):
        env = {**params, **dict(zip(names, (float(v) for v in z)))}
        return np.array([f(env) for f in funcs])

    return value
