"""Coefficient functions phi(t) written in a small arithmetic language.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('-')? power
    power  := atom ('^' factor)?
    atom   := NUMBER | 't' | 'pi' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sin | cos | tan | exp | log | sqrt | abs

so ``^`` binds tighter than unary minus (``-2^2 == -4``) and is right
associative (``2^3^2 == 2^9``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    EvaluationError,
    ExpressionSyntaxError,
    PotentialError,
    UnknownIdentifierError,
    UsageError,
)

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Pi, Neg, BinOp, Call]


# --------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {src[start]!r}", start, src)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, what):
        kind, text, offset = self.tok
        found = "end of input" if kind == "end" else repr(text)
        raise ExpressionSyntaxError(f"expected {what}, found {found}", offset, self.src)

    def accept(self, text):
        if self.tok[0] == "op" and self.tok[1] == text:
            self.i += 1
            return True
        return False

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            self.error("operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.tok[1]
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.tok[1]
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.accept("-"):
            return Neg(self.power())
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        kind, text, offset = self.tok
        if kind == "num":
            self.i += 1
            return Num(float(text))
        if kind == "name":
            self.i += 1
            if text == "t":
                return Var()
            if text == "pi":
                return Pi()
            if text in FUNCTIONS:
                if not self.accept("("):
                    self.error(f"'(' after {text}")
                arg = self.expr()
                if not self.accept(")"):
                    self.error("')'")
                return Call(text, arg)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", offset, self.src)
        if self.accept("("):
            node = self.expr()
            if not self.accept(")"):
                self.error("')'")
            return node
        self.error("number, 't', 'pi', function or '('")


def parse_expression(src: str) -> Node:
    if not src or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0, src)
    return _Parser(src).parse()


# --------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_source(node: Node) -> str:
    """Render ``node`` back to text; ``parse_expression(to_source(n)) == n``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        return f"-{_wrap(node.operand, 4)}"
    # left-assoc ops need a parenthesised right operand of equal precedence,
    # '^' is the other way round
    p = _PREC[node.op]
    if node.op == "^":
        return f"{_wrap(node.left, 5)}^{_wrap(node.right, 3)}"
    return f"{_wrap(node.left, p)} {node.op} {_wrap(node.right, p + 1)}"


def _wrap(node, min_prec):
    if isinstance(node, BinOp):
        prec = _PREC[node.op]
    elif isinstance(node, Neg):
        prec = 3
    else:
        prec = 6
    text = to_source(node)
    return f"({text})" if prec < min_prec else text


# --------------------------------------------------------------------------
# evaluation

_SCALAR_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
}

_ARRAY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


def _eval_scalar(node, t):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, Pi):
        return math.pi
    if isinstance(node, Neg):
        return -_eval_scalar(node.operand, t)
    if isinstance(node, Call):
        x = _eval_scalar(node.arg, t)
        if node.func == "log" and x <= 0.0:
            raise EvaluationError(f"log of non-positive value {x!r}", t)
        if node.func == "sqrt" and x < 0.0:
            raise EvaluationError(f"sqrt of negative value {x!r}", t)
        try:
            return _SCALAR_FUNCS[node.func](x)
        except (OverflowError, ValueError) as exc:
            raise EvaluationError(f"{node.func} failed: {exc}", t) from None
    a = _eval_scalar(node.left, t)
    b = _eval_scalar(node.right, t)
    try:
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return math.pow(a, b)
    except ZeroDivisionError:
        raise EvaluationError("division by zero", t) from None
    except (OverflowError, ValueError) as exc:
        raise EvaluationError(f"'{node.op}' failed: {exc}", t) from None


def _eval_array(node, t):
    if isinstance(node, Num):
        return np.full_like(t, node.value)
    if isinstance(node, Var):
        return t
    if isinstance(node, Pi):
        return np.full_like(t, math.pi)
    if isinstance(node, Neg):
        return -_eval_array(node.operand, t)
    if isinstance(node, Call):
        x = _eval_array(node.arg, t)
        if node.func == "log":
            _domain_check(x > 0.0, t, "log of non-positive value")
        elif node.func == "sqrt":
            _domain_check(x >= 0.0, t, "sqrt of negative value")
        out = _ARRAY_FUNCS[node.func](x)
    else:
        a = _eval_array(node.left, t)
        b = _eval_array(node.right, t)
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        elif node.op == "/":
            _domain_check(b != 0.0, t, "division by zero")
            out = a / b
        else:
            out = np.power(a, b)
    _domain_check(np.isfinite(out), t, "non-finite value")
    return out


def _domain_check(ok, t, message):
    if not np.all(ok):
        k = int(np.argmin(ok))
        raise EvaluationError(message, float(t[k]))


@dataclass(frozen=True)
class PotentialSpec:
    """An immutable coefficient function on the interval ``[a, b]``."""

    source: str
    ast: Node = field(repr=False)
    a: float
    b: float

    @property
    def interval(self):
        return (self.a, self.b)

    @property
    def length(self):
        return self.b - self.a

    def __call__(self, t):
        """Evaluate at a scalar or an array of points."""
        if np.ndim(t) == 0:
            return eval_potential(self, float(t))
        with np.errstate(all="ignore"):
            return _eval_array(self.ast, np.asarray(t, dtype=float))

    def on_interval(self, a, b):
        return parse_potential(self.source, a, b)


def parse_potential(src: str, a: float, b: float) -> PotentialSpec:
    ast = parse_expression(src)
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise UsageError("interval end points must be finite")
    if not a < b:
        raise UsageError(f"empty interval: a={a!r} must be < b={b!r}")
    return PotentialSpec(src, ast, a, b)


def eval_potential(spec: PotentialSpec, t: float) -> float:
    if not math.isfinite(t):
        raise EvaluationError("non-finite argument", t)
    value = float(_eval_scalar(spec.ast, t))
    if not math.isfinite(value):
        raise EvaluationError("non-finite value", t)
    return value


def square(spec: PotentialSpec) -> PotentialSpec:
    """The potential ``spec(t)**2`` on the same interval."""
    return PotentialSpec(f"({spec.source})^2", BinOp("^", spec.ast, Num(2.0)), spec.a, spec.b)


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    min_value: float
    max_value: float
    t_min: float
    violation_t: float | None
    message: str


def validate_nonneg(spec, samples: int = 10001, tolerance: float = 1e-12) -> ValidationReport:
    """Check ``phi >= 0`` and ``phi`` not identically zero on a dense grid."""
    if samples < 2:
        raise UsageError("validate_nonneg needs at least 2 samples")
    t = np.linspace(spec.a, spec.b, samples)
    values = spec(t)
    k_min = int(np.argmin(values))
    lo = float(values[k_min])
    hi = float(np.max(values))
    bad = np.nonzero(values < -tolerance)[0]
    if bad.size:
        where = float(t[bad[0]])
        return ValidationReport(
            False, lo, hi, float(t[k_min]), where,
            f"negative coefficient: first at t={where:.6g}, minimum {lo:.6g} at t={t[k_min]:.6g}",
        )
    if hi <= tolerance:
        return ValidationReport(False, lo, hi, float(t[k_min]), None, "identically zero")
    return ValidationReport(True, lo, hi, float(t[k_min]), None, "ok")


def require_nonneg(spec, samples: int = 10001) -> ValidationReport:
    report = validate_nonneg(spec, samples)
    if not report.passed:
        raise PotentialError(f"{spec.source!r} on [{spec.a}, {spec.b}]: {report.message}")
    return report


@dataclass(frozen=True)
class StaircasePotential:
    """Piecewise-constant positive coefficient, used for the random-phi scenario.

    The expression grammar has no piecewise syntax, so this type stands in
    wherever a ``PotentialSpec`` is accepted by the ODE modules.
    """

    edges: tuple
    levels: tuple
    source: str = "staircase"

    @property
    def a(self):
        return self.edges[0]

    @property
    def b(self):
        return self.edges[-1]

    @property
    def interval(self):
        return (self.a, self.b)

    @property
    def length(self):
        return self.b - self.a

    def __call__(self, t):
        idx = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.levels) - 1)
        out = np.asarray(self.levels, dtype=float)[idx]
        return float(out) if np.ndim(t) == 0 else out


def random_staircase(seed: int, t_max: float, pieces: int = 40, low: float = 0.2, high: float = 2.0):
    """Seeded random positive staircase on ``[0, t_max]``."""
    rng = np.random.default_rng(seed)
    edges = np.linspace(0.0, t_max, pieces + 1)
    levels = rng.uniform(low, high, size=pieces)
    return StaircasePotential(
        tuple(float(e) for e in edges),
        tuple(float(v) for v in levels),
        f"staircase(seed={seed}, pieces={pieces})",
    )
