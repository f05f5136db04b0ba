"""Expressions in one real variable: parsing, printing, evaluation, d/dt.

Grammar (whitespace ignored)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          # right associative, binds tighter than "-"
    atom   := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

``FUNC`` is one of sin, cos, tan, exp, ln, sqrt, abs. ``NAME`` is one of the
allowed variables (``t`` by default) or the constants ``pi`` and ``e``.

Evaluation compiles the tree to a postfix program run by the numerical core,
so repeated evaluation of the same expression is cheap.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from localfrac import _core
from localfrac import _opcodes as op
from localfrac._errors import (
    ERROR_MESSAGES,
    DomainError,
    ParseError,
    ProgramError,
    UnsupportedFormError,
)

__all__ = [
    "Const",
    "Var",
    "Unary",
    "Binary",
    "Expression",
    "Compiled",
    "parse",
    "render",
    "compile_expr",
    "evaluate",
    "diff_classical",
    "substitute",
    "free_vars",
    "is_constant",
    "FUNCTIONS",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs")
NAMED_CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str = "t"


@dataclass(frozen=True)
class Unary:
    op: str
    child: "Expression"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expression"
    right: "Expression"


Expression = Union[Const, Var, Unary, Binary]

ZERO = Const(0.0)
ONE = Const(1.0)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<sym>\S))"
)


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.variables = tuple(variables)
        self.tokens = []
        pos = 0
        while True:
            m = _TOKEN.match(text, pos)
            if m is None:
                break
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected, tok=None):
        tok = tok or self.peek()
        raise ParseError(tok[2], expected, self.text)

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("an operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "sym":
            sym = self.take()[1]
            node = Binary(sym, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "sym":
            sym = self.take()[1]
            node = Binary(sym, node, self.unary())
        return node

    def unary(self):
        if self.peek() [0] == "sym" and self.peek()[1] == "-":
            self.take()
            child = self.unary()
            if isinstance(child, Const):
                return Const(-child.value)
            return Unary("neg", child)
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "sym" and self.peek()[1] == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, value, pos = self.peek()
        if kind == "num":
            self.take()
            return Const(float(value))
        if kind == "name":
            self.take()
            if value in FUNCTIONS:
                if self.peek()[1] != "(":
                    self.fail(f"'(' after function name '{value}'")
                self.take()
                child = self.expr()
                if self.peek()[1] != ")":
                    self.fail("')'")
                self.take()
                return Unary(value, child)
            if value in self.variables:
                return Var(value)
            if value in NAMED_CONSTANTS:
                return Const(NAMED_CONSTANTS[value])
            allowed = ", ".join(self.variables + tuple(NAMED_CONSTANTS) + FUNCTIONS)
            raise ParseError(pos, f"a known identifier ({allowed}), got '{value}'", self.text)
        if kind == "sym" and value == "(":
            self.take()
            node = self.expr()
            if self.peek()[1] != ")":
                self.fail("')'")
            self.take()
            return node
        if kind == "end":
            self.fail("an operand")
        self.fail(f"an operand, got '{value}'")


def parse(text: str, variables: tuple[str, ...] = ("t",)) -> Expression:
    """Parse ``text`` into an expression tree.

    >>> parse("t^2 + sin(t)")
    Binary(op='+', left=Binary(op='^', left=Var(name='t'), right=Const(value=2.0)), right=Unary(op='sin', child=Var(name='t')))
    """
    return _Parser(text, variables).parse()


# ---------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e):
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return 3
    if isinstance(e, Const) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return 3
    return 5


def _wrap(e, cond):
    s = render(e)
    return f"({s})" if cond else s


def render(e: Expression) -> str:
    """Canonical text form; ``parse(render(e))`` evaluates exactly like ``e``."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _wrap(e.child, _prec(e.child) <= 3)
        return f"{e.op}({render(e.child)})"
    p = _PREC[e.op]
    if e.op == "^":
        left = _wrap(e.left, _prec(e.left) <= 4)
        right = _wrap(e.right, _prec(e.right) < 3)
        return f"{left}^{right}"
    left = _wrap(e.left, _prec(e.left) < p)
    right = _wrap(e.right, _prec(e.right) <= p)
    return f"{left} {e.op} {right}"


# ---------------------------------------------------------------------------
# Compilation and evaluation


class Compiled:
    """An expression compiled for fast evaluation in fixed variable slots."""

    __slots__ = ("expr", "variables", "program", "nodes")

    def __init__(self, expr: Expression, variables: tuple[str, ...] = ("t",)):
        if len(variables) > op.MAX_VARS:
            raise ValueError(f"at most {op.MAX_VARS} variables are supported")
        self.expr = expr
        self.variables = tuple(variables)
        codes, args, consts, nodes = [], [], [], []
        slot = {name: i for i, name in enumerate(self.variables)}

        def emit(e):
            if isinstance(e, Const):
                codes.append(op.CONST)
                args.append(len(consts))
                consts.append(e.value)
            elif isinstance(e, Var):
                if e.name not in slot:
                    raise ValueError(f"variable '{e.name}' has no slot in {self.variables}")
                codes.append(op.VAR)
                args.append(slot[e.name])
            elif isinstance(e, Unary):
                emit(e.child)
                codes.append(op.UNARY[e.op])
                args.append(0)
            else:
                emit(e.left)
                emit(e.right)
                codes.append(op.BINARY[e.op])
                args.append(0)
            nodes.append(e)

        emit(expr)
        self.nodes = nodes
        self.program = _core.Program(codes, args, consts)

    def __reduce__(self):
        return (Compiled, (self.expr, self.variables))

    def __call__(self, *values: float) -> float:
        try:
            return self.program.run(*values)
        except ProgramError as exc:
            node = self.nodes[exc.index]
            at = ", ".join(f"{n}={v!r}" for n, v in zip(self.variables, values))
            raise DomainError(
                f"{ERROR_MESSAGES[exc.code]} in '{render(node)}' at {at}"
            ) from None


def compile_expr(e: Expression | str, variables: tuple[str, ...] = ("t",)) -> Compiled:
    if isinstance(e, str):
        e = parse(e, variables)
    return Compiled(e, variables)


def evaluate(e: Expression | str, t: float, **others: float) -> float:
    """Evaluate ``e`` at ``t`` (and any extra named variables).

    >>> evaluate("t^2", 3)
    9.0
    """
    names = ("t",) + tuple(sorted(others))
    if isinstance(e, str):
        e = parse(e, names)
    return Compiled(e, names)(float(t), *(float(others[n]) for n in names[1:]))


def free_vars(e: Expression) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Unary):
        return free_vars(e.child)
    return free_vars(e.left) | free_vars(e.right)


def is_constant(e: Expression, var: str = "t") -> bool:
    return var not in free_vars(e)


def substitute(e: Expression, name: str, replacement: Expression) -> Expression:
    """Replace every occurrence of variable ``name`` by ``replacement``."""
    if isinstance(e, Var):
        return replacement if e.name == name else e
    if isinstance(e, Const):
        return e
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.child, name, replacement))
    return Binary(e.op, substitute(e.left, name, replacement), substitute(e.right, name, replacement))


# ---------------------------------------------------------------------------
# Light simplification (0*x -> 0, x+0 -> x, 1*x -> x, constant folding)


def _is(e, v):
    return isinstance(e, Const) and e.value == v


def _fold(fn, *args):
    try:
        r = fn(*args)
    except (ArithmeticError, ValueError):
        return None
    if isinstance(r, complex) or not math.isfinite(r):
        return None
    return Const(float(r))


def neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.child
    return Unary("neg", a)


def add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def div(a, b):
    if _is(a, 0) and not _is(b, 0):
        return ZERO
    if _is(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold(lambda x, y: x / y, a.value, b.value)
        if folded is not None:
            return folded
    return Binary("/", a, b)


def power(a, b):
    if _is(b, 1):
        return a
    if _is(b, 0):
        return ONE
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold(math.pow, a.value, b.value)
        if folded is not None:
            return folded
    return Binary("^", a, b)


def call(name, a):
    return Unary(name, a)


# ---------------------------------------------------------------------------
# Symbolic differentiation


def diff_classical(e: Expression, var: str = "t") -> Expression:
    """Exact derivative of ``e`` with respect to ``var``, as a new tree.

    Purely structural: the expression is never evaluated at a point.

    >>> render(diff_classical(parse("t^3")))
    '3.0 * t^2.0'
    """
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Unary):
        u = e.child
        du = diff_classical(u, var)
        if _is(du, 0):
            return ZERO
        if e.op == "neg":
            return neg(du)
        if e.op == "sin":
            return mul(call("cos", u), du)
        if e.op == "cos":
            return mul(neg(call("sin", u)), du)
        if e.op == "tan":
            return div(du, power(call("cos", u), Const(2.0)))
        if e.op == "exp":
            return mul(e, du)
        if e.op == "ln":
            return div(du, u)
        if e.op == "sqrt":
            return div(du, mul(Const(2.0), e))
        if e.op == "abs":
            # u / |u| is undefined at u = 0, where |u| has no derivative
            return mul(div(u, e), du)
        raise UnsupportedFormError(f"cannot differentiate function '{e.op}'")
    a, b = e.left, e.right
    if e.op == "+":
        return add(diff_classical(a, var), diff_classical(b, var))
    if e.op == "-":
        return sub(diff_classical(a, var), diff_classical(b, var))
    if e.op == "*":
        return add(mul(diff_classical(a, var), b), mul(a, diff_classical(b, var)))
    if e.op == "/":
        da, db = diff_classical(a, var), diff_classical(b, var)
        if _is(db, 0):
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
    if e.op == "^":
        if not is_constant(b, var):
            raise UnsupportedFormError(
                f"d/d{var} of '{render(e)}': only constant exponents are supported"
            )
        da = diff_classical(a, var)
        if _is(da, 0):
            return ZERO
        return mul(mul(b, power(a, sub(b, ONE))), da)
    raise UnsupportedFormError(f"unknown operator '{e.op}'")
