"""Scalar-field expression language.

Grammar (versioned contract, see docs/exprlang.md):

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

'^' is right-associative and binds tighter than unary minus, so "-x1^2"
denotes -(x1^2).  Numbers are decimal with optional fraction and exponent.
Identifiers are the coordinates x0..x3, parameter names, or one of the
built-in function names when followed by '('.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import jets
from .errors import DomainErrorAtPoint, ExprSyntaxError, UnboundIdentifier
from .jets import Jet, JetEnv

COORDS = ("x0", "x1", "x2", "x3")
FUNCTIONS = tuple(sorted(jets.FUNCTIONS))

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Num:
    value: float
    span: tuple[int, int]


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple[int, int]


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"
    span: tuple[int, int]


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    span: tuple[int, int]


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"
    span: tuple[int, int]


Expr = Num | Var | Call | Neg | BinOp


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ExprSyntaxError(
                f"unexpected character {stripped[0]!r}", at,
                ("number", "identifier", "operator"),
            )
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind), m.end(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text), len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: tuple[str, ...]):
        kind, val, start, _ = self.peek()
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", start, expected)

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(("operator", "end of input"))
        return e

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.advance()[1]
            rhs = self.term()
            node = BinOp(op, node, rhs, (node.span[0], rhs.span[1]))
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.advance()[1]
            rhs = self.unary()
            node = BinOp(op, node, rhs, (node.span[0], rhs.span[1]))
        return node

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            start = self.advance()[2]
            operand = self.unary()
            return Neg(operand, (start, operand.span[1]))
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            expo = self.unary()
            return BinOp("^", base, expo, (base.span[0], expo.span[1]))
        return base

    def atom(self) -> Expr:
        kind, val, start, end = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(val), (start, end))
        if kind == "ident":
            self.advance()
            if self.peek()[:2] == ("op", "("):
                if val not in jets.FUNCTIONS:
                    raise ExprSyntaxError(
                        f"unknown function {val!r}", start, FUNCTIONS
                    )
                self.advance()
                arg = self.expr()
                if self.peek()[:2] != ("op", ")"):
                    self.fail(("')'",))
                close = self.advance()[3]
                return Call(val, arg, (start, close))
            return Var(val, (start, end))
        if kind == "op" and val == "(":
            self.advance()
            inner = self.expr()
            if self.peek()[:2] != ("op", ")"):
                self.fail(("')'",))
            self.advance()
            return inner
        self.fail(("number", "identifier", "'('", "'-'"))


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


def free_identifiers(e: Expr) -> set[str]:
    match e:
        case Num():
            return set()
        case Var(name=n):
            return {n}
        case Call(arg=a):
            return free_identifiers(a)
        case Neg(operand=a):
            return free_identifiers(a)
        case BinOp(left=l, right=r):
            return free_identifiers(l) | free_identifiers(r)
    raise TypeError(f"not an Expr: {e!r}")


def validate_bindings(e: Expr, params) -> list[str]:
    """Unbound identifiers: everything that is neither a coordinate nor a parameter."""
    bound = set(COORDS) | set(params)
    return sorted(free_identifiers(e) - bound)


def eval_expr(e: Expr, env: JetEnv, params: dict[str, float]) -> Jet:
    """Jet of the denoted scalar field at env's base point.

    Parameters enter as constant jets.  Domain failures are re-raised with
    the offending subexpression's source span attached.
    """
    match e:
        case Num(value=v):
            return jets.constant(v, env.order)
        case Var(name=n):
            if n in COORDS:
                return env[COORDS.index(n)]
            if n in params:
                return jets.constant(params[n], env.order)
            raise UnboundIdentifier([n])
        case Neg(operand=a):
            return -eval_expr(a, env, params)
        case Call(fn=f, arg=a, span=span):
            try:
                return jets.FUNCTIONS[f](eval_expr(a, env, params))
            except DomainErrorAtPoint as err:
                raise DomainErrorAtPoint(f"{err} in {f}(...) at span {span}") from err
        case BinOp(op=op, left=l, right=r, span=span):
            lv = eval_expr(l, env, params)
            if op == "^":
                expo = _const_value(r, params)
                if expo is not None:
                    try:
                        return lv**expo
                    except DomainErrorAtPoint as err:
                        raise DomainErrorAtPoint(f"{err} at span {span}") from err
            rv = eval_expr(r, env, params)
            try:
                if op == "+":
                    return lv + rv
                if op == "-":
                    return lv - rv
                if op == "*":
                    return lv * rv
                if op == "/":
                    return lv / rv
                # general power: exponent is itself a field
                return jets.exp(rv * jets.ln(lv))
            except (DomainErrorAtPoint, ZeroDivisionError) as err:
                raise DomainErrorAtPoint(f"{err} at span {span}") from err
    raise TypeError(f"not an Expr: {e!r}")


def _const_value(e: Expr, params) -> float | None:
    """Fold an exponent subtree to a constant when it contains no coordinates."""
    match e:
        case Num(value=v):
            return v
        case Var(name=n):
            return params.get(n)
        case Neg(operand=a):
            v = _const_value(a, params)
            return None if v is None else -v
        case BinOp(op=op, left=l, right=r):
            lv = _const_value(l, params)
            rv = _const_value(r, params)
            if lv is None or rv is None:
                return None
            if op == "+":
                return lv + rv
            if op == "-":
                return lv - rv
            if op == "*":
                return lv * rv
            if op == "/":
                return None if rv == 0 else lv / rv
            try:
                v = lv**rv
            except (ValueError, OverflowError, ZeroDivisionError):
                return None
            return v if isinstance(v, float) else None
        case _:
            return None


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def pretty(e: Expr) -> str:
    """Render an AST back to text that reparses to a structurally equal tree."""

    def go(node: Expr, parent_prec: int, right_of: str | None = None) -> str:
        match node:
            case Num(value=v):
                if v == int(v) and abs(v) < 1e16:
                    s = str(int(v))
                else:
                    s = repr(v)
                return s
            case Var(name=n):
                return n
            case Call(fn=f, arg=a):
                return f"{f}({go(a, 0)})"
            case Neg(operand=a):
                inner = go(a, _PREC["neg"])
                s = f"-{inner}"
                return f"({s})" if parent_prec > _PREC["neg"] else s
            case BinOp(op=op, left=l, right=r):
                p = _PREC[op]
                if op == "^":
                    s = f"{go(l, p + 1)}^{go(r, p)}"
                else:
                    # left-associative: right child needs strictly higher binding
                    s = f"{go(l, p)} {op} {go(r, p + 1)}"
                return f"({s})" if p < parent_prec else s
        raise TypeError(f"not an Expr: {node!r}")

    return go(e, 0)


def structurally_equal(a: Expr, b: Expr) -> bool:
    match a, b:
        case Num(value=x), Num(value=y):
            return x == y
        case Var(name=x), Var(name=y):
            return x == y
        case Call(fn=f, arg=u), Call(fn=g, arg=v):
            return f == g and structurally_equal(u, v)
        case Neg(operand=u), Neg(operand=v):
            return structurally_equal(u, v)
        case BinOp(op=o1, left=l1, right=r1), BinOp(op=o2, left=l2, right=r2):
            return o1 == o2 and structurally_equal(l1, l2) and structurally_equal(r1, r2)
        case _:
            return False
