"""Small arithmetic-expression language for scenario data.

Grammar (whitespace is ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | 'x' | 'y' | 't' | FUNC '(' expr (',' expr)* ')'
             | '(' expr ')'

``^`` binds tighter than unary minus, so ``-2^2 == -4``.  Evaluation accepts
scalars or numpy arrays for the variables.
"""
import math
import re
from dataclasses import dataclass

import numpy as np

VARIABLES = ("x", "y", "t")
FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "exp": (1, np.exp),
    "abs": (1, np.abs),
    "sqrt": (1, np.sqrt),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
}


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, msg, offset):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


class ExprEvalError(ExprError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def _tokenize(src):
    pos = 0
    out = []
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src):
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, val, pos = self.take()
        if val != text or kind != "op":
            raise ExprSyntaxError(f"expected {text!r}, found {val or 'end of input'!r}", pos)

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in VARIABLES:
                return Var(val)
            if val not in FUNCTIONS:
                raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
            self.expect("(")
            args = [self.expr()]
            while self.peek()[:2] == ("op", ","):
                self.take()
                args.append(self.expr())
            self.expect(")")
            arity = FUNCTIONS[val][0]
            if len(args) != arity:
                raise ExprSyntaxError(
                    f"{val} takes {arity} argument(s), got {len(args)}", pos)
            return Call(val, tuple(args))
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", pos)


def parse(src):
    """Parse ``src`` into an expression tree."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(src)
    node = p.expr()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected trailing {val!r}", pos)
    return node


def _check_finite_domain(name, arg):
    if name == "sqrt" and np.any(np.asarray(arg) < 0.0):
        raise ExprEvalError("domain error: sqrt of a negative number")


def evaluate(node, x=0.0, y=0.0, t=0.0):
    """Evaluate ``node``; variables may be floats or broadcastable arrays."""
    env = {"x": x, "y": y, "t": t}

    def ev(n):
        if isinstance(n, Num):
            return n.value
        if isinstance(n, Var):
            return env[n.name]
        if isinstance(n, Neg):
            return -ev(n.arg)
        if isinstance(n, Call):
            args = [ev(a) for a in n.args]
            _check_finite_domain(n.name, args[0])
            return FUNCTIONS[n.name][1](*args)
        a, b = ev(n.left), ev(n.right)
        if n.op == "+":
            return a + b
        if n.op == "-":
            return a - b
        if n.op == "*":
            return a * b
        if n.op == "/":
            if np.any(np.asarray(b) == 0.0):
                raise ExprEvalError("division by zero")
            return a / b
        with np.errstate(invalid="raise", divide="raise", over="ignore"):
            try:
                return np.power(np.asarray(a, dtype=float), b)
            except FloatingPointError as exc:
                raise ExprEvalError(f"domain error in power: {exc}") from None

    out = ev(node)
    if np.ndim(out) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_source(node):
    """Fully parenthesised source text that reparses to an equal tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


def compile_expr(src):
    """Parse ``src`` and return ``f(x, y, t)``."""
    node = parse(src)

    def fn(x, y=0.0, t=0.0):
        return evaluate(node, x, y, t)

    fn.node = node
    fn.source = src
    return fn
