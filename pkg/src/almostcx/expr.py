"""Expression language for component functions.

Grammar (LL(1), no implicit multiplication)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | CONST | IDENT | FUNC '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-s^2`` is ``-(s^2)`` and it is
right associative. Builtin constants: ``pi``, ``e``. Builtin functions:
``sin cos tan exp ln log sqrt abs atan sinh cosh``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

from . import dual as _d


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str):
        super().__init__(f"unknown identifier {name!r}")
        self.name = name


CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "sin": "sin",
    "cos": "cos",
    "tan": "tan",
    "exp": "exp",
    "ln": "log",
    "log": "log",
    "sqrt": "sqrt",
    "abs": "fabs",
    "atan": "atan",
    "sinh": "sinh",
    "cosh": "cosh",
}


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Div:
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div, "^": Pow}
_SYMBOL = {cls: sym for sym, cls in _BINARY.items()}

# --- tokenizer -------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + (len(rest) - len(rest.lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", _byte_offset(text, bad))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = None if variables is None else set(variables)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok):
        raise ExprSyntaxError(msg, _byte_offset(self.text, tok[2]))

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] != "op":
            self.fail(f"expected {value!r}", tok)

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.fail(f"unexpected {tok[1]!r}", tok)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _BINARY[op](node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _BINARY[op](node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            return Pow(base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in CONSTANTS:
                return Const(text)
            if self.variables is not None and text not in self.variables:
                raise UnknownIdentifierError(text)
            return Var(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.fail("unexpected end of input", tok)
        self.fail(f"unexpected {text!r}", tok)


def parse(text: str, variables: Sequence[str] | None = None):
    """Parse ``text`` into an AST; ``variables`` restricts allowed identifiers."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text, variables).parse()


def to_text(node) -> str:
    """Canonical printer; every binary node is parenthesised."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, (Const, Var)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    return f"({to_text(node.left)} {_SYMBOL[type(node)]} {to_text(node.right)})"


def variables_of(node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, (Num, Const)):
        return set()
    if isinstance(node, (Neg, Call)):
        return variables_of(node.arg)
    return variables_of(node.left) | variables_of(node.right)


def denominators(node) -> list:
    """Every divisor subtree (and ``ln``/``sqrt`` argument): the singularity guards."""
    out = []
    if isinstance(node, Div):
        out.append(node.right)
    if isinstance(node, Call) and node.func in ("ln", "log", "sqrt"):
        out.append(node.arg)
    for child in ("arg", "left", "right"):
        sub = getattr(node, child, None)
        if sub is not None:
            out.extend(denominators(sub))
    return out


def _source(node, index) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Const):
        return repr(CONSTANTS[node.name])
    if isinstance(node, Var):
        return f"p[{index[node.name]}]"
    if isinstance(node, Neg):
        return f"(-{_source(node.arg, index)})"
    if isinstance(node, Call):
        return f"_d.{FUNCTIONS[node.func]}({_source(node.arg, index)})"
    if isinstance(node, Pow):
        right = node.right
        if isinstance(right, Num) and float(right.value).is_integer():
            return f"({_source(node.left, index)} ** {int(right.value)})"
        return f"({_source(node.left, index)} ** {_source(right, index)})"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
    return f"({_source(node.left, index)} {op} {_source(node.right, index)})"


def compile_expr(node, variables: Sequence[str]):
    """Compile an AST into ``f(p)`` over the coordinate tuple ``variables``.

    The compiled function works on floats and on (nested) duals alike.
    """
    index = {name: k for k, name in enumerate(variables)}
    missing = variables_of(node) - set(index)
    if missing:
        raise UnknownIdentifierError(sorted(missing)[0])
    src = f"lambda p: {_source(node, index)}"
    fn = eval(src, {"_d": _d, "__builtins__": {}})  # noqa: S307 - source built from a validated AST
    return fn


def evaluate(node, variables: Sequence[str], point):
    return compile_expr(node, variables)(point)


def eval_dual(node, point, direction, variables: Sequence[str]):
    """Value and exact directional derivative of ``node`` at ``point``."""
    fn = compile_expr(node, variables)
    pts, tag = _d.seed(point, direction)
    out = fn(pts)
    if isinstance(out, _d.Dual) and out.tag == tag:
        return out.re, out.du
    return out, 0.0
