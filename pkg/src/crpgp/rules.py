"""Priority-function expression trees.

A tree is built from four binary functions (add, sub, mul, protected div)
and fourteen stack-level terminals. Lower priority wins.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import ParseError, UnknownTerminal
from .yard import Yard, move_time

TERMINALS = ("SH", "EMP", "CUR", "DUR", "RI", "MIN", "AVG", "REM", "NEXT", "DIFF", "EMPTY", "WL", "NL", "DSM")
FUNCTIONS = ("add", "sub", "mul", "div")
TERMINAL_CODE = {t: i for i, t in enumerate(TERMINALS)}
FUNCTION_CODE = {f: len(TERMINALS) + i for i, f in enumerate(FUNCTIONS)}

PRESETS = {
    "ALL": TERMINALS,
    "RE-R": ("SH", "RI", "EMP", "DIFF", "AVG", "CUR"),
    "UN-R": ("SH", "EMP", "DIFF", "RI"),
}

DIV_EPS = 1e-9


def terminal_set(names) -> Tuple[str, ...]:
    """Resolve a preset name or comma separated list of terminal names."""
    if names is None:
        return TERMINALS
    if isinstance(names, str):
        key = names.strip().upper()
        if key in PRESETS:
            return PRESETS[key]
        names = [p for p in key.split(",") if p.strip()]
    out = []
    for name in names:
        name = name.strip().upper()
        if name not in TERMINAL_CODE:
            raise UnknownTerminal(f"unknown terminal {name!r}")
        if name not in out:
            out.append(name)
    if not out:
        raise ValueError("empty terminal set")
    return tuple(out)


class ExprTree:
    """Immutable expression node; ``depth`` and ``size`` are cached."""

    __slots__ = ("op", "children", "depth", "size")

    def __init__(self, op: str, children: Sequence["ExprTree"] = ()):
        children = tuple(children)
        if op in FUNCTIONS:
            if len(children) != 2:
                raise ValueError(f"{op} takes two arguments")
        elif op in TERMINAL_CODE:
            if children:
                raise ValueError(f"terminal {op} takes no arguments")
        else:
            raise UnknownTerminal(f"unknown symbol {op!r}")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "children", children)
        if children:
            object.__setattr__(self, "depth", 1 + max(c.depth for c in children))
            object.__setattr__(self, "size", 1 + sum(c.size for c in children))
        else:
            object.__setattr__(self, "depth", 0)
            object.__setattr__(self, "size", 1)

    def __setattr__(self, name, value):
        raise AttributeError("ExprTree is immutable")

    def __reduce__(self):
        return ExprTree, (self.op, self.children)

    @property
    def is_terminal(self) -> bool:
        return not self.children

    def __eq__(self, other):
        if not isinstance(other, ExprTree):
            return NotImplemented
        return self.op == other.op and self.children == other.children

    def __hash__(self):
        return hash((self.op, self.children))

    def __repr__(self):
        return f"ExprTree({print_rule(self)!r})"

    def __str__(self):
        return print_rule(self)

    def nodes(self) -> Iterator[Tuple[Tuple[int, ...], "ExprTree"]]:
        """Pre-order ``(path, node)`` pairs; a path is a tuple of child indices."""
        stack = [((), self)]
        while stack:
            path, node = stack.pop()
            yield path, node
            for i in range(len(node.children) - 1, -1, -1):
                stack.append((path + (i,), node.children[i]))

    def get(self, path: Sequence[int]) -> "ExprTree":
        node = self
        for i in path:
            node = node.children[i]
        return node

    def replace(self, path: Sequence[int], new: "ExprTree") -> "ExprTree":
        if not path:
            return new
        i = path[0]
        kids = list(self.children)
        kids[i] = kids[i].replace(path[1:], new)
        return ExprTree(self.op, kids)

    def terminals(self) -> List[str]:
        return [n.op for _, n in self.nodes() if n.is_terminal]

    def postfix(self) -> List[int]:
        """Opcode sequence for the compiled evaluator."""
        out: List[int] = []

        def walk(n):
            for c in n.children:
                walk(c)
            out.append(TERMINAL_CODE[n.op] if n.is_terminal else FUNCTION_CODE[n.op])

        walk(self)
        return out


def T(name: str) -> ExprTree:
    return ExprTree(name.upper())


def add(a, b):
    return ExprTree("add", (a, b))


def sub(a, b):
    return ExprTree("sub", (a, b))


def mul(a, b):
    return ExprTree("mul", (a, b))


def div(a, b):
    return ExprTree("div", (a, b))


# --------------------------------------------------------------------------
# serialization

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([A-Za-z_][A-Za-z0-9_]*))")


def print_rule(tree: ExprTree) -> str:
    if tree.is_terminal:
        return tree.op
    return "(" + tree.op + " " + " ".join(print_rule(c) for c in tree.children) + ")"


def parse_rule(text: str) -> ExprTree:
    """Parse a parenthesized prefix expression, e.g. ``(add SH (mul RI EMP))``."""
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
        start = m.start(m.lastindex)
        tokens.append((m.group(m.lastindex), start))
        pos = m.end()
    i = 0

    def parse():
        nonlocal i
        if i >= len(tokens):
            raise ParseError("unexpected end of input", len(text))
        tok, p = tokens[i]
        i += 1
        if tok == "(":
            if i >= len(tokens):
                raise ParseError("unexpected end of input", len(text))
            name, np_ = tokens[i]
            i += 1
            fn = name.lower()
            if fn not in FUNCTIONS:
                raise ParseError(f"expected function name, got {name!r}", np_)
            a = parse()
            b = parse()
            if i >= len(tokens):
                raise ParseError("unexpected end of input", len(text))
            if tokens[i][0] != ")":
                raise ParseError(f"expected ')', got {tokens[i][0]!r}", tokens[i][1])
            i += 1
            return ExprTree(fn, (a, b))
        if tok == ")":
            raise ParseError("unexpected ')'", p)
        name = tok.upper()
        if name not in TERMINAL_CODE:
            raise UnknownTerminal(f"unknown terminal {tok!r}", p)
        return ExprTree(name)

    tree = parse()
    if i != len(tokens):
        raise ParseError(f"trailing input {tokens[i][0]!r}", tokens[i][1])
    return tree


# --------------------------------------------------------------------------
# evaluation


@dataclass
class EvalContext:
    """Everything a priority function may look at for one candidate stack."""

    yard: Yard
    candidate: int
    current: int
    origin: int
    target: int
    next_target: Optional[int] = None
    rem: int = 0

    @classmethod
    def for_move(cls, yard: Yard, origin: int, candidate: int) -> "EvalContext":
        target, tstack = yard.target()
        return cls(yard, candidate, yard.top(origin), origin, target, yard.remaining(1), blockers_above(yard, target, tstack))


def blockers_above(yard: Yard, target: int, tstack: int) -> int:
    s = yard.stack(tstack)
    return len(s) - 1 - s.index(target)


def stack_features(ids: Sequence[int], current: int, next_target: Optional[int], sentinel: int):
    """``(RI, MIN, SUM, NEXT, WL, DSM)`` from one top-down scan of a stack."""
    ri = nxt = wl = dsm = 0
    lo = sentinel
    total = 0
    above = 0
    for j in range(len(ids) - 1, -1, -1):
        c = ids[j]
        total += c
        if c < lo:
            lo = c
        if c < current:
            ri += 1
            if dsm == 0:
                dsm = j + 1
        if c == next_target:
            nxt = 1
        if c > above:
            wl += 1
            above = c
    return ri, lo, total, nxt, wl, dsm


def terminal_values(ctx: EvalContext) -> List[float]:
    """All fourteen terminal values, indexed like ``TERMINALS``."""
    y = ctx.yard
    ids = y.stack(ctx.candidate)
    h = len(ids)
    ri, lo, total, nxt, wl, dsm = stack_features(ids, ctx.current, ctx.next_target, y.sentinel)
    return [
        float(h),
        float(y.max_height - h),
        float(ctx.current),
        move_time(y.crane, ctx.origin, ctx.candidate, y.time_model),
        float(ri),
        float(lo),
        total / h if h else 0.0,
        float(ctx.rem),
        float(nxt),
        float(lo - ctx.current),
        1.0 if h == 0 else 0.0,
        float(wl),
        float(h - wl),
        float(dsm),
    ]


def eval_terminal(name: str, ctx: EvalContext) -> float:
    return terminal_values(ctx)[TERMINAL_CODE[name.upper()]]


class _NonFinite(Exception):
    pass


def _eval(tree: ExprTree, values: Sequence[float]) -> float:
    if tree.is_terminal:
        return values[TERMINAL_CODE[tree.op]]
    a = _eval(tree.children[0], values)
    b = _eval(tree.children[1], values)
    op = tree.op
    if op == "add":
        r = a + b
    elif op == "sub":
        r = a - b
    elif op == "mul":
        r = a * b
    else:
        r = 1.0 if abs(b) <= DIV_EPS else a / b
    if not math.isfinite(r):
        raise _NonFinite
    return r


def eval_values(tree: ExprTree, values: Sequence[float]) -> float:
    """Evaluate against precomputed terminal values; overflow ranks last (+inf)."""
    try:
        return _eval(tree, values)
    except _NonFinite:
        return math.inf


def eval_expr(tree: ExprTree, ctx: EvalContext) -> float:
    return eval_values(tree, terminal_values(ctx))


def protected_div(a: float, b: float) -> float:
    return 1.0 if abs(b) <= DIV_EPS else a / b


# --------------------------------------------------------------------------
# rule files

SCHEMES = ("RE", "REN", "UN", "UNC", "UNT", "UNP")


def write_rule_file(path, trees: Sequence[ExprTree], scheme: str) -> None:
    text = f"# scheme={scheme} pfs={len(trees)}\n" + "".join(print_rule(t) + "\n" for t in trees)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def parse_rule_file(text: str) -> Tuple[Optional[str], List[ExprTree]]:
    scheme = None
    trees = []
    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            fields: Dict[str, str] = dict(kv.split("=", 1) for kv in s[1:].split() if "=" in kv)
            if "scheme" in fields:
                scheme = fields["scheme"].upper()
            continue
        trees.append(parse_rule(s))
    if not 1 <= len(trees) <= 2:
        raise ParseError(f"rule file must hold one or two expressions, found {len(trees)}")
    return scheme, trees


def read_rule_file(path):
    with open(path, encoding="utf-8") as fh:
        return parse_rule_file(fh.read())


EXAMPLE_RULE = "(div (sub (div (mul RI MIN) (mul AVG AVG)) (div DIFF (mul RI (mul EMP EMP)))) MIN)"
