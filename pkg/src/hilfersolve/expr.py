"""Small expression language for user-supplied problem functions.

Problem files carry forcing terms, impulse maps and growth envelopes as
strings over the variables ``t``, ``u1..ud`` (and ``r`` for growth
profiles).  Grammar (see docs/expression-grammar.md):

    expr    := term (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*
    factor  := unary ("^" factor)?        # right associative
    unary   := "-" unary | atom
    atom    := number | name | name "(" expr ("," expr)* ")" | "(" expr ")"

Unary minus binds tighter than "^".  Supported calls: sin, cos, exp, log,
sqrt, abs, pow, min, max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "ExprAst",
    "Literal",
    "Variable",
    "Unary",
    "Binary",
    "Call",
    "ParseError",
    "EvalError",
    "parse",
    "evaluate",
    "to_text",
    "variables",
    "lipschitz_estimate",
    "vector_lipschitz_estimate",
]

_FUNCTIONS = {
    "sin": (1, math.sin),
    "cos": (1, math.cos),
    "exp": (1, math.exp),
    "log": (1, math.log),
    "sqrt": (1, math.sqrt),
    "abs": (1, abs),
    "pow": (2, math.pow),
    "min": (2, min),
    "max": (2, max),
}


class ParseError(ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    child: "ExprAst"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


ExprAst = Literal | Variable | Unary | Binary | Call


class _Tokenizer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._run()
        self.idx = 0

    def _run(self):
        text, i, n = self.text, 0, len(self.text)
        while i < n:
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
                j = i
                while j < n and (text[j].isdigit() or text[j] == "."):
                    j += 1
                if j < n and text[j] in "eE":
                    k = j + 1
                    if k < n and text[k] in "+-":
                        k += 1
                    if k < n and text[k].isdigit():
                        j = k
                        while j < n and text[j].isdigit():
                            j += 1
                try:
                    value = float(text[i:j])
                except ValueError:
                    raise ParseError(f"bad number {text[i:j]!r}", i) from None
                self.tokens.append(("num", value, i))
                i = j
            elif c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("name", text[i:j], i))
                i = j
            elif c in "+-*/^(),":
                self.tokens.append(("op", c, i))
                i += 1
            else:
                raise ParseError(f"unexpected character {c!r}", i)
        self.tokens.append(("end", "", n))

    def peek(self):
        return self.tokens[self.idx]

    def next(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok


def parse(text: str) -> ExprAst:
    """Parse an expression string into an immutable AST."""
    tz = _Tokenizer(text)
    node = _parse_sum(tz)
    kind, val, pos = tz.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing {val!r}", pos)
    return node


def _parse_sum(tz):
    node = _parse_term(tz)
    while tz.peek()[:2] in (("op", "+"), ("op", "-")):
        op = tz.next()[1]
        node = Binary(op, node, _parse_term(tz))
    return node


def _parse_term(tz):
    node = _parse_factor(tz)
    while tz.peek()[:2] in (("op", "*"), ("op", "/")):
        op = tz.next()[1]
        node = Binary(op, node, _parse_factor(tz))
    return node


def _parse_factor(tz):
    # unary minus binds tighter than "^": -2^2 is (-2)^2
    node = _parse_unary(tz)
    if tz.peek()[:2] == ("op", "^"):
        tz.next()
        return Binary("^", node, _parse_factor(tz))
    return node


def _parse_unary(tz):
    if tz.peek()[:2] == ("op", "-"):
        tz.next()
        return Unary("-", _parse_unary(tz))
    return _parse_atom(tz)


def _parse_atom(tz):
    kind, val, pos = tz.next()
    if kind == "num":
        return Literal(val)
    if kind == "name":
        if tz.peek()[:2] == ("op", "("):
            tz.next()
            args = [_parse_sum(tz)]
            while tz.peek()[:2] == ("op", ","):
                tz.next()
                args.append(_parse_sum(tz))
            k2, v2, p2 = tz.next()
            if (k2, v2) != ("op", ")"):
                raise ParseError("expected ')'", p2)
            if val not in _FUNCTIONS:
                raise ParseError(f"unknown function {val!r}", pos)
            arity = _FUNCTIONS[val][0]
            if len(args) != arity:
                raise ParseError(
                    f"{val} takes {arity} argument(s), got {len(args)}", pos
                )
            return Call(val, tuple(args))
        return Variable(val)
    if (kind, val) == ("op", "("):
        node = _parse_sum(tz)
        k2, v2, p2 = tz.next()
        if (k2, v2) != ("op", ")"):
            raise ParseError("expected ')'", p2)
        return node
    raise ParseError(f"unexpected {val or 'end of input'!r}", pos)


def evaluate(ast: ExprAst, env: dict) -> float:
    """Evaluate in IEEE doubles; NaN/Inf results raise instead of propagating."""
    val = _eval(ast, env)
    if not math.isfinite(val):
        raise EvalError(f"non-finite result {val} for {to_text(ast)!r}")
    return val


def _eval(node, env):
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, Variable):
        try:
            return float(env[node.name])
        except KeyError:
            raise EvalError(f"unbound variable {node.name!r}") from None
    if isinstance(node, Unary):
        return -_eval(node.child, env)
    if isinstance(node, Binary):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
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
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise EvalError(f"{exc} in {to_text(node)!r}") from None
    fn = _FUNCTIONS[node.fn][1]
    args = [_eval(a, env) for a in node.args]
    try:
        return float(fn(*args))
    except (ValueError, OverflowError, ZeroDivisionError) as exc:
        raise EvalError(f"{node.fn}: {exc}") from None


def to_text(ast: ExprAst) -> str:
    """Canonical printed form; re-parsing it reproduces the AST."""
    if isinstance(ast, Literal):
        return repr(ast.value)
    if isinstance(ast, Variable):
        return ast.name
    if isinstance(ast, Unary):
        return f"(-{to_text(ast.child)})"
    if isinstance(ast, Binary):
        return f"({to_text(ast.left)} {ast.op} {to_text(ast.right)})"
    return f"{ast.fn}({', '.join(to_text(a) for a in ast.args)})"


def variables(ast: ExprAst) -> set:
    """Names of all variables referenced in the AST."""
    if isinstance(ast, Variable):
        return {ast.name}
    if isinstance(ast, Unary):
        return variables(ast.child)
    if isinstance(ast, Binary):
        return variables(ast.left) | variables(ast.right)
    if isinstance(ast, Call):
        out = set()
        for a in ast.args:
            out |= variables(a)
        return out
    return set()


def _latin_hypercube(rng, box, samples):
    names = list(box)
    pts = np.empty((samples, len(names)))
    for j, name in enumerate(names):
        lo, hi = box[name]
        cells = (np.arange(samples) + rng.random(samples)) / samples
        pts[:, j] = lo + (hi - lo) * rng.permutation(cells)
    return names, pts


def lipschitz_estimate(
    ast: ExprAst,
    var: str,
    box: dict,
    samples: int = 200,
    seed: int = 0,
) -> float:
    """Sampling lower bound on the Lipschitz constant with respect to ``var``.

    Latin-hypercube points over ``box`` plus difference quotients along
    ``var`` between adjacent samples.  This is an estimate, not a certified
    bound; pass declared constants to the checker when available.
    """
    if samples < 2:
        raise DomainError("samples must be >= 2")
    for name, (lo, hi) in box.items():
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise DomainError(f"bad box for {name!r}: [{lo}, {hi}]")
    if var not in box:
        raise DomainError(f"variable {var!r} is not in the sampling box")
    rng = np.random.default_rng(seed)
    names, pts = _latin_hypercube(rng, box, samples)
    vi = names.index(var)
    lo, hi = box[var]
    best = 0.0
    for row in pts:
        env = dict(zip(names, row))
        base = evaluate(ast, env)
        for dv in ((hi - lo) * 1e-6, (hi - lo) * 0.05):
            x2 = min(env[var] + dv, hi)
            if x2 == env[var]:
                x2 = max(env[var] - dv, lo)
            other = dict(env)
            other[var] = x2
            quot = abs(evaluate(ast, other) - base) / abs(x2 - env[var])
            best = max(best, quot)
    # adjacent-pair quotients along var between distinct sample points
    order = np.argsort(pts[:, vi])
    for a, b in zip(order[:-1], order[1:]):
        dv = pts[b, vi] - pts[a, vi]
        if dv <= 0:
            continue
        ea = dict(zip(names, pts[a]))
        eb = dict(ea)
        eb[var] = pts[b, vi]
        best = max(best, abs(evaluate(ast, eb) - evaluate(ast, ea)) / dv)
    return best


def vector_lipschitz_estimate(
    asts: tuple,
    var_names: tuple,
    box: dict,
    samples: int = 200,
    seed: int = 0,
) -> float:
    """Euclidean-norm Lipschitz estimate of a vector map in the ``var_names``
    block of variables, other box variables held per-sample."""
    if samples < 2:
        raise DomainError("samples must be >= 2")
    rng = np.random.default_rng(seed)
    names, pts = _latin_hypercube(rng, box, samples)
    names2, pts2 = _latin_hypercube(rng, box, samples)
    best = 0.0
    for row_a, row_b in zip(pts, pts2):
        env_a = dict(zip(names, row_a))
        env_b = dict(env_a)
        for name in var_names:
            env_b[name] = row_b[names.index(name)]
        du = math.sqrt(
            sum((env_b[n] - env_a[n]) ** 2 for n in var_names)
        )
        if du == 0.0:
            continue
        df = math.sqrt(
            sum((evaluate(a, env_b) - evaluate(a, env_a)) ** 2 for a in asts)
        )
        best = max(best, df / du)
    return best
