"""Expression strings -> AST -> exact values, gradients and Hessians.

The grammar (conventional precedence, ``^`` right-associative and tighter
than unary minus):

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"

Identifiers resolve against a declared coordinate list and parameter list;
anything else is rejected at parse time.  Functions: sqrt, ln, exp, sin, cos.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .ad import ADScalar, Dual, Jet2
from .errors import (
    DomainEvalError,
    ExprSyntaxError,
    UnknownIdentifierError,
)

FUNCTIONS = ("sqrt", "ln", "exp", "sin", "cos")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    child: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Var, Param, Neg, Add, Sub, Mul, Div, Pow, Call]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            off = len(text) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", off)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, coords: Sequence[str], params: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.coords = set(coords)
        self.params = set(params)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, off = self.take()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected '{op}', found {text or 'end of input'!r}", off)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {text!r}", off)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                rhs = self.term()
                e = Add(e, rhs) if text == "+" else Sub(e, rhs)
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.take()
                rhs = self.factor()
                e = Mul(e, rhs) if text == "*" else Div(e, rhs)
            else:
                return e

    def factor(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return Pow(base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, text, off = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            nk, nt, _ = self.peek()
            if nk == "op" and nt == "(":
                if text not in FUNCTIONS:
                    raise UnknownIdentifierError(text, off)
                self.take()
                args = [self.expr()]
                while True:
                    k2, t2, o2 = self.peek()
                    if k2 == "op" and t2 == ",":
                        self.take()
                        args.append(self.expr())
                    else:
                        break
                self.expect_op(")")
                if len(args) != 1:
                    raise ExprSyntaxError(
                        f"function '{text}' expects 1 argument, got {len(args)}", off
                    )
                return Call(text, args[0])
            if text in self.coords:
                return Var(text)
            if text in self.params:
                return Param(text)
            raise UnknownIdentifierError(text, off)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(f"expected a value, found {text or 'end of input'!r}", off)


def parse(text: str, coords: Sequence[str], params: Sequence[str] = ()) -> Expr:
    """Parse ``text`` against declared coordinate and parameter names."""
    overlap = set(coords) & set(params)
    if overlap:
        raise ValueError(f"coordinate/parameter name clash: {sorted(overlap)}")
    return _Parser(text, coords, params).parse()


# Precedence levels used by the printer; higher binds tighter.
_LEVEL_ADD, _LEVEL_MUL, _LEVEL_NEG, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _level(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return _LEVEL_ADD
    if isinstance(e, (Mul, Div)):
        return _LEVEL_MUL
    if isinstance(e, Neg):
        return _LEVEL_NEG
    if isinstance(e, Pow):
        return _LEVEL_POW
    return _LEVEL_ATOM


def to_string(e: Expr) -> str:
    """Print with minimal parentheses; ``parse(to_string(e))`` rebuilds ``e``."""

    def wrap(child: Expr, minimum: int) -> str:
        s = to_string(child)
        return f"({s})" if _level(child) < minimum else s

    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, (Var, Param)):
        return e.name
    if isinstance(e, Neg):
        return "-" + wrap(e.child, _LEVEL_NEG)
    if isinstance(e, Add):
        return f"{wrap(e.left, _LEVEL_ADD)} + {wrap(e.right, _LEVEL_ADD + 1)}"
    if isinstance(e, Sub):
        return f"{wrap(e.left, _LEVEL_ADD)} - {wrap(e.right, _LEVEL_ADD + 1)}"
    if isinstance(e, Mul):
        return f"{wrap(e.left, _LEVEL_MUL)}*{wrap(e.right, _LEVEL_MUL + 1)}"
    if isinstance(e, Div):
        return f"{wrap(e.left, _LEVEL_MUL)}/{wrap(e.right, _LEVEL_MUL + 1)}"
    if isinstance(e, Pow):
        # exponent slot is a "factor": bare unary minus and powers are fine
        return f"{wrap(e.base, _LEVEL_ATOM)}^{wrap(e.exponent, _LEVEL_NEG)}"
    if isinstance(e, Call):
        return f"{e.fn}({to_string(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def free_names(e: Expr) -> tuple[set[str], set[str]]:
    """Sets of (variable names, parameter names) referenced by ``e``."""
    vs: set[str] = set()
    ps: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            vs.add(node.name)
        elif isinstance(node, Param):
            ps.add(node.name)
        elif isinstance(node, Neg):
            stack.append(node.child)
        elif isinstance(node, (Add, Sub, Mul, Div)):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Pow):
            stack.append(node.base)
            stack.append(node.exponent)
        elif isinstance(node, Call):
            stack.append(node.arg)
    return vs, ps


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace Var/Param leaves by name with whole subtrees."""
    if isinstance(e, (Var, Param)):
        return mapping.get(e.name, e)
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.child, mapping))
    if isinstance(e, Add):
        return Add(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Sub):
        return Sub(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Mul):
        return Mul(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Div):
        return Div(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), substitute(e.exponent, mapping))
    if isinstance(e, Call):
        return Call(e.fn, substitute(e.arg, mapping))
    raise TypeError(f"not an expression node: {e!r}")


def _is_int(c: float) -> bool:
    return c == int(c) and abs(c) < 1e9


def _evaluate(e: Expr, leaves, params):
    """Recursive evaluation; leaf scalars decide the differentiation order."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return leaves[e.name]
    if isinstance(e, Param):
        return params[e.name]
    if isinstance(e, Neg):
        return -_evaluate(e.child, leaves, params)
    if isinstance(e, Add):
        return _evaluate(e.left, leaves, params) + _evaluate(e.right, leaves, params)
    if isinstance(e, Sub):
        return _evaluate(e.left, leaves, params) - _evaluate(e.right, leaves, params)
    if isinstance(e, Mul):
        return _evaluate(e.left, leaves, params) * _evaluate(e.right, leaves, params)
    if isinstance(e, Div):
        num = _evaluate(e.left, leaves, params)
        den = _evaluate(e.right, leaves, params)
        dv = den if isinstance(den, float) else den.v
        if dv == 0.0:
            raise DomainEvalError("division by zero", to_string(e))
        return num / den
    if isinstance(e, Pow):
        base = _evaluate(e.base, leaves, params)
        expo = _evaluate(e.exponent, leaves, params)
        bv = base if isinstance(base, float) else base.v
        if isinstance(expo, float):
            if _is_int(expo):
                n = int(expo)
                if bv == 0.0 and n < 0:
                    raise DomainEvalError("zero raised to a negative power", to_string(e))
                if isinstance(base, float):
                    return base**n
                if n == 0:
                    return base * 0.0 + 1.0
                if n == 1:
                    return base
                return base.powi(n)
            if bv <= 0.0:
                raise DomainEvalError(
                    "fractional power of a non-positive base", to_string(e)
                )
            return base**expo if isinstance(base, float) else base.powf(expo)
        # exponent depends on coordinates: base^e = exp(e * ln(base))
        if bv <= 0.0:
            raise DomainEvalError("power with a non-positive base", to_string(e))
        lnb = math.log(bv) if isinstance(base, float) else base.ln()
        prod = expo * lnb
        return math.exp(prod) if isinstance(prod, float) else prod.exp()
    if isinstance(e, Call):
        arg = _evaluate(e.arg, leaves, params)
        av = arg if isinstance(arg, float) else arg.v
        if e.fn == "sqrt":
            if av < 0.0 or (av == 0.0 and not isinstance(arg, float)):
                raise DomainEvalError("sqrt of a negative argument", to_string(e))
            return math.sqrt(arg) if isinstance(arg, float) else arg.sqrt()
        if e.fn == "ln":
            if av <= 0.0:
                raise DomainEvalError("ln of a non-positive argument", to_string(e))
            return math.log(arg) if isinstance(arg, float) else arg.ln()
        if e.fn == "exp":
            return math.exp(arg) if isinstance(arg, float) else arg.exp()
        if e.fn == "sin":
            return math.sin(arg) if isinstance(arg, float) else arg.sin()
        if e.fn == "cos":
            return math.cos(arg) if isinstance(arg, float) else arg.cos()
        raise UnknownIdentifierError(e.fn)
    raise TypeError(f"not an expression node: {e!r}")


class ScalarField:
    """A compiled expression over an ordered coordinate frame with bound parameters.

    Immutable; evaluation is a pure function of the phase point, so instances
    are safe to share across threads.
    """

    __slots__ = ("expr", "coords", "params")

    def __init__(self, expr: Expr, coords: Sequence[str], params: Mapping[str, float] | None = None):
        self.expr = expr
        self.coords = tuple(coords)
        self.params = dict(params or {})
        if len(set(self.coords)) != len(self.coords):
            raise ValueError("duplicate coordinate names")
        vs, ps = free_names(expr)
        missing = vs - set(self.coords)
        if missing:
            raise UnknownIdentifierError(sorted(missing)[0])
        unbound = ps - set(self.params)
        if unbound:
            raise UnknownIdentifierError(sorted(unbound)[0])

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __eq__(self, other):
        return (
            isinstance(other, ScalarField)
            and self.expr == other.expr
            and self.coords == other.coords
            and self.params == other.params
        )

    def __hash__(self):
        return hash((self.expr, self.coords, tuple(sorted(self.params.items()))))

    def __repr__(self):
        return f"ScalarField({to_string(self.expr)!r}, coords={self.coords})"

    def _check_point(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.shape != (self.dim,):
            raise ValueError(f"point has shape {arr.shape}, expected ({self.dim},)")
        return arr

    def eval(self, x) -> float:
        arr = self._check_point(x)
        leaves = {name: float(arr[i]) for i, name in enumerate(self.coords)}
        return _evaluate(self.expr, leaves, self.params)

    def eval_grad(self, x) -> ADScalar:
        arr = self._check_point(x)
        d = self.dim
        leaves = {name: Dual.seed(arr[i], i, d) for i, name in enumerate(self.coords)}
        out = _evaluate(self.expr, leaves, self.params)
        if isinstance(out, float):
            return ADScalar(out, np.zeros(d))
        return ADScalar(out.v, out.g)

    def eval_hess(self, x) -> ADScalar:
        arr = self._check_point(x)
        d = self.dim
        leaves = {name: Jet2.seed(arr[i], i, d) for i, name in enumerate(self.coords)}
        out = _evaluate(self.expr, leaves, self.params)
        if isinstance(out, float):
            return ADScalar(out, np.zeros(d), np.zeros((d, d)))
        return ADScalar(out.v, out.g, out.h)

    def __call__(self, x) -> float:
        return self.eval(x)


def parse_field(
    text: str, coords: Sequence[str], params: Mapping[str, float] | None = None
) -> ScalarField:
    """Parse ``text`` and bind it to ``coords`` with parameter values ``params``."""
    params = dict(params or {})
    expr = parse(text, coords, tuple(params))
    return ScalarField(expr, coords, params)


def eval(field: ScalarField, x) -> float:  # noqa: A001 - spec operation name
    return field.eval(x)


def eval_grad(field: ScalarField, x) -> ADScalar:
    return field.eval_grad(x)


def eval_hess(field: ScalarField, x) -> ADScalar:
    return field.eval_hess(x)
