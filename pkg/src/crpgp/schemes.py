"""Relocation schemes driving a yard to completion (pure Python).

This is the readable reference implementation and the fallback used when
the compiled kernel is unavailable. ``crpgp.kernel`` mirrors it move for
move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .errors import BudgetExceeded, ConfigError, Deadlock, InternalLoop
from .rules import SCHEMES, EvalContext, ExprTree, eval_values, stack_features, terminal_values
from .yard import SolutionStats, Yard, count_blocking

BASELINES = ("TLP", "RI", "MINMAX")
UNRESTRICTED = ("UN", "UNC", "UNT", "UNP")


def baseline_name(name: str) -> str:
    key = name.upper().replace("-", "").replace("_", "")
    if key == "MM":
        key = "MINMAX"
    if key not in BASELINES:
        raise ConfigError(f"unknown baseline {name!r}")
    return key


@dataclass(frozen=True)
class RelocationRule:
    """A scheme bound to one or two priority functions, or to a baseline.

    ``pair_cap`` is the number of unrestricted pair moves per retrieval for
    UNC/UNT; ``None`` means "number of stacks".
    """

    scheme: str = "RE"
    expressions: Tuple[ExprTree, ...] = ()
    pair_cap: Optional[int] = None
    baseline: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", self.scheme.upper())
        object.__setattr__(self, "expressions", tuple(self.expressions))
        if self.baseline is not None:
            object.__setattr__(self, "baseline", baseline_name(self.baseline))
        self.validate()

    def validate(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.pair_cap is not None and self.pair_cap < 0:
            raise ConfigError("pair_cap must be >= 0")
        n = len(self.expressions)
        if self.baseline is not None:
            if n or self.scheme not in ("RE", "REN"):
                raise ConfigError("baselines run under the RE/REN scheme without expressions")
            return
        if self.scheme in ("UNT", "UNP"):
            if n != 2:
                raise ConfigError(f"{self.scheme} needs exactly two expressions")
        elif n not in (1, 2):
            raise ConfigError(f"{self.scheme} needs one or two expressions")

    @property
    def label(self) -> str:
        return self.baseline or self.scheme


# --------------------------------------------------------------------------
# ranking


class _Decision:
    """Per-decision constants shared by every candidate evaluation."""

    __slots__ = ("yard", "target", "tstack", "next_target", "rem")

    def __init__(self, yard: Yard):
        self.yard = yard
        self.target, self.tstack = yard.target()
        self.next_target = yard.remaining(1)
        s = yard.stack(self.tstack)
        self.rem = len(s) - 1 - s.index(self.target)

    def values(self, origin: int, candidate: int, current: int) -> List[float]:
        ctx = EvalContext(self.yard, candidate, current, origin, self.target, self.next_target, self.rem)
        return terminal_values(ctx)


def _score(trees: Sequence[ExprTree], values) -> float:
    # min-of-two: the stack wins if either expression gives it the lowest priority
    v = eval_values(trees[0], values)
    for t in trees[1:]:
        w = eval_values(t, values)
        if w < v:
            v = w
    return v


def _argmin(items, key: Callable) -> object:
    best = None
    best_v = math.inf
    for it in items:
        v = key(it)
        if best is None or v < best_v:
            best, best_v = it, v
    return best


def baseline_priority(variant: str, yard: Yard, candidate: int, current: int) -> float:
    ids = yard.stack(candidate)
    if variant == "TLP":
        return float(len(ids))
    ri, lo, *_ = stack_features(ids, current, None, yard.sentinel)
    if variant == "RI":
        return float(ri)
    # MinMax: smallest MIN above CUR if any, else the largest MIN
    return float(lo) if lo > current else float(2 * yard.sentinel - lo)


def baseline_choose(variant: str, yard: Yard, origin: int, candidates: Sequence[int]) -> int:
    if not candidates:
        raise Deadlock("no candidate stack")
    variant = baseline_name(variant)
    cur = yard.top(origin)
    return _argmin(candidates, lambda d: baseline_priority(variant, yard, d, cur))


def restricted_candidates(yard: Yard, origin: int, ren: bool = False) -> List[int]:
    cands = [i for i in range(1, yard.n_stacks + 1) if i != origin and not yard.is_full(i)]
    if ren:
        nxt = yard.remaining(1)
        if nxt is not None:
            ns = yard.locate(nxt)
            kept = [i for i in cands if i != ns]
            if kept:
                cands = kept
    return cands


def choose_destination(yard: Yard, origin: int, rule: RelocationRule, trees: Optional[Sequence[ExprTree]] = None) -> int:
    """Lowest-priority restricted destination for the top container of ``origin``."""
    cands = restricted_candidates(yard, origin, ren=rule.scheme == "REN")
    if not cands:
        raise Deadlock(f"no stack can receive the top of stack {origin}")
    if rule.baseline is not None:
        return baseline_choose(rule.baseline, yard, origin, cands)
    trees = rule.expressions if trees is None else trees
    dec = _Decision(yard)
    cur = yard.top(origin)
    return _argmin(cands, lambda d: _score(trees, dec.values(origin, d, cur)))


# --------------------------------------------------------------------------
# scheme drivers


class _Run:
    def __init__(self, yard: Yard, rule: RelocationRule):
        self.y = yard.copy()
        self.rule = rule
        self.stats = SolutionStats()
        self.k = self.y.n_stacks if rule.pair_cap is None else rule.pair_cap
        if rule.scheme not in ("UNC", "UNT"):
            self.k = 0
        self.cap = 2 * len(self.y) + self.k
        self.count = 0

    def relocate(self, o, d):
        self.stats.add(self.y.relocate(o, d))
        self.count += 1
        if self.count > self.cap:
            raise InternalLoop(f"more than {self.cap} relocations for one retrieval", self.stats)

    def deadlock(self, msg):
        return Deadlock(msg, self.stats)

    def retrieve(self):
        self.stats.add(self.y.retrieve())
        self.count = 0

    def restricted_step(self, s, trees):
        try:
            d = choose_destination(self.y, s, self.rule, trees)
        except Deadlock as exc:
            raise self.deadlock(str(exc)) from None
        return d

    # UN / UNP cleanup of the chosen destination before the blocker lands on it
    def cleanup(self, s, d, sc, chooser):
        y = self.y
        while y.min_id(d) < sc:
            dc = y.top(d)
            eligible = [i for i in range(1, y.n_stacks + 1)
                        if i != d and i != s and not y.is_full(i) and y.min_id(i) > dc]
            if not eligible:
                break
            self.relocate(d, chooser(d, eligible))


def _smallest_min(y: Yard):
    return lambda d, eligible: _argmin(eligible, y.min_id)


def _expr_chooser(y: Yard, tree: ExprTree):
    def choose(d, eligible):
        dec = _Decision(y)
        cur = y.top(d)
        return _argmin(eligible, lambda i: _score((tree,), dec.values(d, i, cur)))
    return choose


def solve_re(yard: Yard, rule: RelocationRule) -> SolutionStats:
    """Restricted scheme (RE, or REN when ``rule.scheme == 'REN'``)."""
    r = _Run(yard, rule)
    y = r.y
    while not y.empty:
        target, s = y.target()
        while y.top(s) != target:
            r.relocate(s, r.restricted_step(s, None))
        r.retrieve()
    return r.stats


def solve_un(yard: Yard, rule: RelocationRule) -> SolutionStats:
    """Unrestricted scheme: clear smaller IDs off the destination first.

    UNP picks each cleanup destination with the second expression instead
    of the smallest-minimum rule.
    """
    r = _Run(yard, rule)
    y = r.y
    if rule.scheme == "UNP":
        chooser = _expr_chooser(y, rule.expressions[1])
        trees = rule.expressions[:1]
    else:
        chooser = _smallest_min(y)
        trees = None
    while not y.empty:
        target, s = y.target()
        while y.top(s) != target:
            d = r.restricted_step(s, trees)
            r.cleanup(s, d, y.top(s), chooser)
            r.relocate(s, d)
        r.retrieve()
    return r.stats


def solve_unp(yard: Yard, rule: RelocationRule) -> SolutionStats:
    return solve_un(yard, rule)


def _pair_move_unc(r: _Run, trees) -> Tuple[int, int]:
    y = r.y
    dec = _Decision(y)
    best = None
    best_v = math.inf
    for o in range(1, y.n_stacks + 1):
        cur = y.top(o)
        if cur is None:
            continue
        for d in range(1, y.n_stacks + 1):
            if d == o or y.is_full(d):
                continue
            v = _score(trees, dec.values(o, d, cur))
            if best is None or v < best_v:
                best, best_v = (o, d), v
    if best is None:
        raise r.deadlock("no legal relocation pair")
    return best


def _pair_move_unt(r: _Run, origin_tree, dest_tree) -> Tuple[int, int]:
    y = r.y
    dec = _Decision(y)
    open_ = [i for i in range(1, y.n_stacks + 1) if not y.is_full(i)]
    origins = [o for o in range(1, y.n_stacks + 1)
               if y.height(o) > 0 and any(d != o for d in open_)]
    if not origins:
        raise r.deadlock("no legal relocation origin")
    o = _argmin(origins, lambda o: _score((origin_tree,), dec.values(o, o, y.top(o))))
    cur = y.top(o)
    d = _argmin([d for d in open_ if d != o], lambda d: _score((dest_tree,), dec.values(o, d, cur)))
    return o, d


def solve_unc(yard: Yard, rule: RelocationRule) -> SolutionStats:
    """Pair scheme: up to K free (origin, destination) moves per retrieval.

    UNC ranks every pair with its PF(s); UNT picks the origin with the
    first expression and the destination with the second. After the cap the
    scheme falls back to restricted moves (UNT uses the destination
    expression there).
    """
    r = _Run(yard, rule)
    y = r.y
    unt = rule.scheme == "UNT"
    restricted_trees = rule.expressions[1:] if unt else None
    while not y.empty:
        target, s = y.target()
        pair_moves = 0
        while y.top(s) != target:
            if pair_moves < r.k:
                if unt:
                    o, d = _pair_move_unt(r, rule.expressions[0], rule.expressions[1])
                else:
                    o, d = _pair_move_unc(r, rule.expressions)
                r.relocate(o, d)
                pair_moves += 1
            else:
                r.relocate(s, r.restricted_step(s, restricted_trees))
        r.retrieve()
    return r.stats


_DISPATCH = {
    "RE": solve_re,
    "REN": solve_re,
    "UN": solve_un,
    "UNP": solve_un,
    "UNC": solve_unc,
    "UNT": solve_unc,
}


def solve(yard: Yard, rule: RelocationRule, objective: Optional[str] = None) -> SolutionStats:
    """Run ``rule`` on a private copy of ``yard``. Both objectives are recorded."""
    stats = _DISPATCH[rule.scheme](yard, rule)
    if objective is not None:
        stats.objective(objective)  # validates the name
    return stats


# --------------------------------------------------------------------------
# exact oracle


def _retrieve_forced(stacks: List[Tuple[int, ...]]) -> List[Tuple[int, ...]]:
    stacks = list(stacks)
    while True:
        tops = [(s[-1], i) for i, s in enumerate(stacks) if s]
        if not tops:
            return stacks
        m = min(c for s in stacks for c in s)
        hit = [i for c, i in tops if c == m]
        if not hit:
            return stacks
        i = hit[0]
        stacks[i] = stacks[i][:-1]


def bnb_optimal_relocations(yard: Yard, budget: int = 1_000_000, unrestricted: bool = False) -> int:
    """Minimum relocation count by depth-first branch and bound.

    Restricted moves only, unless ``unrestricted`` (any top container may
    move). Prunes with the incumbent and the count of containers sitting
    above a smaller ID. Raises ``BudgetExceeded`` after ``budget`` nodes.
    """
    t = yard.max_height
    start = [tuple(s) for s in yard.stacks]
    best = math.inf
    try:
        best = solve(yard, RelocationRule("RE", baseline="MINMAX")).relocations
    except Deadlock:
        pass
    nodes = 0
    seen = {}

    def dfs(stacks, g):
        nonlocal nodes, best
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(f"node budget {budget} exhausted")
        stacks = _retrieve_forced(stacks)
        if not any(stacks):
            if g < best:
                best = g
            return
        if g + count_blocking(stacks) >= best:
            return
        key = tuple(sorted(stacks))
        if seen.get(key, math.inf) <= g:
            return
        seen[key] = g
        if unrestricted:
            origins = [i for i, s in enumerate(stacks) if s]
        else:
            m = min(c for s in stacks for c in s)
            origins = [next(i for i, s in enumerate(stacks) if m in s)]
        for o in origins:
            tried = set()
            for d, s in enumerate(stacks):
                if d == o or len(s) >= t or s in tried:
                    continue
                tried.add(s)
                nxt = list(stacks)
                nxt[d] = s + (stacks[o][-1],)
                nxt[o] = stacks[o][:-1]
                dfs(nxt, g + 1)

    dfs(start, 0)
    if best == math.inf:
        raise Deadlock("instance has no feasible solution")
    return int(best)
