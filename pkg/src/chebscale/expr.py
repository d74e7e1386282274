"""Expression language for scale functions and targets.

Grammar (one free variable ``x``)::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := NUMBER | "x" | IDENT "(" expr ")" | "(" expr ")"

Identifiers: exp, log, sqrt, sin, cos.  ``^`` is right-associative and binds
tighter than unary minus, so ``-x^2`` means ``-(x^2)`` and ``x^-1`` parses.
Numbers are decimal literals with an optional exponent; there is no implicit
multiplication.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from . import jet as jetmod
from .errors import ExprSyntaxError

FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos")


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    child: object


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


# -- tokenizer ------------------------------------------------------------------

_NUMBER = re.compile(r"(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class _Tokenizer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.index = 0

    def _scan(self):
        text = self.text
        i = 0
        while i < len(text):
            ch = text[i]
            if ch in " \t\r\n":
                i += 1
                continue
            if ch in "+-*/^()":
                self.tokens.append((ch, ch, i))
                i += 1
                continue
            m = _NUMBER.match(text, i)
            if m:
                self.tokens.append(("number", m.group(0), i))
                i = m.end()
                continue
            m = _IDENT.match(text, i)
            if m:
                self.tokens.append(("ident", m.group(0), i))
                i = m.end()
                continue
            raise ExprSyntaxError(f"unexpected character {ch!r}", i, {"token"})
        self.tokens.append(("eof", "", len(text)))

    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        tok = self.tokens[self.index]
        if tok[0] != "eof":
            self.index += 1
        return tok


class _Parser:
    def __init__(self, text):
        self.toks = _Tokenizer(text)

    def parse(self):
        node = self._expr()
        kind, _, off = self.toks.peek()
        if kind != "eof":
            raise ExprSyntaxError(
                "trailing input", off, {"+", "-", "*", "/", "^", "end of input"}
            )
        return node

    def _expr(self):
        node = self._term()
        while self.toks.peek()[0] in ("+", "-"):
            op = self.toks.advance()[0]
            node = BinOp(op, node, self._term())
        return node

    def _term(self):
        node = self._factor()
        while self.toks.peek()[0] in ("*", "/"):
            op = self.toks.advance()[0]
            node = BinOp(op, node, self._factor())
        return node

    def _factor(self):
        if self.toks.peek()[0] == "-":
            self.toks.advance()
            return Neg(self._factor())
        return self._power()

    def _power(self):
        node = self._atom()
        if self.toks.peek()[0] == "^":
            self.toks.advance()
            node = BinOp("^", node, self._factor())
        return node

    def _atom(self):
        kind, text, off = self.toks.peek()
        if kind == "number":
            self.toks.advance()
            return Const(float(text))
        if kind == "ident":
            self.toks.advance()
            if text == "x":
                return Var()
            if text in FUNCTIONS:
                self._expect("(")
                inner = self._expr()
                self._expect(")")
                return Call(text, inner)
            raise ExprSyntaxError(
                f"unknown identifier {text!r}", off, set(FUNCTIONS) | {"x"}
            )
        if kind == "(":
            self.toks.advance()
            inner = self._expr()
            self._expect(")")
            return inner
        raise ExprSyntaxError(
            "expected an operand", off, {"number", "x", "identifier", "(", "-"}
        )

    def _expect(self, symbol):
        kind, _, off = self.toks.peek()
        if kind != symbol:
            raise ExprSyntaxError(f"expected {symbol!r}", off, {symbol})
        self.toks.advance()


def parse(text):
    """Parse ``text`` into an AST.  Raises :class:`ExprSyntaxError` on failure."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, {"expression"})
    return _Parser(text).parse()


# -- rendering ------------------------------------------------------------------

# Precedence levels used for minimal parenthesisation.
_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node):
    if isinstance(node, BinOp):
        if node.op in "+-":
            return _PREC_ADD
        if node.op in "*/":
            return _PREC_MUL
        return _PREC_POW
    if isinstance(node, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def render(node):
    """Canonical text form; ``parse(render(ast))`` is structurally ``ast``."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Call):
        return f"{node.name}({render(node.arg)})"
    if isinstance(node, Neg):
        inner = render(node.child)
        if _prec(node.child) < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        lp, rp = _prec(node.left), _prec(node.right)
        left, right = render(node.left), render(node.right)
        if node.op in "+-":
            if lp < _PREC_ADD:
                left = f"({left})"
            if rp <= _PREC_ADD:
                right = f"({right})"
        elif node.op in "*/":
            if lp < _PREC_MUL:
                left = f"({left})"
            if rp <= _PREC_MUL:
                right = f"({right})"
        else:  # ^ binds tightest, right-associative
            if lp < _PREC_ATOM:
                left = f"({left})"
            if rp < _PREC_NEG:
                right = f"({right})"
        return f"{left}{node.op}{right}"
    raise TypeError(f"not an AST node: {node!r}")


# -- evaluation -----------------------------------------------------------------


def constant_value(node):
    """Value of a variable-free subtree, or None if it involves ``x``."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return None
    if isinstance(node, Neg):
        v = constant_value(node.child)
        return None if v is None else -v
    if isinstance(node, Call):
        v = constant_value(node.arg)
        return None if v is None else getattr(math, node.name)(v)
    if isinstance(node, BinOp):
        a = constant_value(node.left)
        b = constant_value(node.right)
        if a is None or b is None:
            return None
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return a**b
    raise TypeError(f"not an AST node: {node!r}")


def eval_jet(node, anchor, order):
    """Jet of the expression at ``anchor`` to the given truncation order."""
    if isinstance(node, Const):
        return jetmod.jet_constant(node.value, anchor, order)
    if isinstance(node, Var):
        return jetmod.jet_variable(anchor, order)
    if isinstance(node, Neg):
        return -eval_jet(node.child, anchor, order)
    if isinstance(node, Call):
        inner = eval_jet(node.arg, anchor, order)
        return jetmod.jet_apply(node.name, [inner])
    if isinstance(node, BinOp):
        if node.op == "^":
            c = constant_value(node.right)
            base = eval_jet(node.left, anchor, order)
            if c is not None:
                return jetmod.jpow(base, c)
            expo = eval_jet(node.right, anchor, order)
            return jetmod.jexp(expo * jetmod.jlog(base))
        a = eval_jet(node.left, anchor, order)
        b = eval_jet(node.right, anchor, order)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    raise TypeError(f"not an AST node: {node!r}")


class ExpressionFunction:
    """A parsed expression as a cached jet-evaluator ``(x, order) -> Jet``."""

    def __init__(self, text_or_ast, name=None):
        if isinstance(text_or_ast, str):
            self.ast = parse(text_or_ast)
            self.name = name if name is not None else text_or_ast.strip()
        else:
            self.ast = text_or_ast
            self.name = name if name is not None else render(text_or_ast)
        self._cache = {}

    def __call__(self, x, order):
        key = (x, order)
        out = self._cache.get(key)
        if out is None:
            out = eval_jet(self.ast, x, order)
            self._cache[key] = out
        return out

    def value(self, x):
        return self(x, 0).value

    def __repr__(self):
        return f"ExpressionFunction({self.name!r})"
