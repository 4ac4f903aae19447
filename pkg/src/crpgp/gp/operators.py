"""Tree generation, crossover and mutation operators.

All operators are pure: they return new trees and never touch their
inputs. ``rng`` is a ``numpy.random.Generator``.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..rules import FUNCTIONS, TERMINALS, ExprTree

CROSSOVERS = ("subtree", "uniform", "context_preserving", "size_fair", "one_point")
MUTATIONS = ("subtree", "hoist", "node_complement", "node_replacement", "permutation", "shrink")

COMPLEMENT = {"add": "sub", "sub": "add", "mul": "div", "div": "mul"}

# Koza's bias towards internal nodes when picking crossover points
FUNCTION_BIAS = 0.9

Path = Tuple[int, ...]


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def random_terminal(rng, terminals: Sequence[str] = TERMINALS) -> ExprTree:
    return ExprTree(_pick(rng, terminals))


def full(rng, depth: int, terminals: Sequence[str] = TERMINALS) -> ExprTree:
    if depth <= 0:
        return random_terminal(rng, terminals)
    return ExprTree(_pick(rng, FUNCTIONS), (full(rng, depth - 1, terminals), full(rng, depth - 1, terminals)))


def grow(rng, depth: int, terminals: Sequence[str] = TERMINALS, root: bool = True) -> ExprTree:
    if depth <= 0:
        return random_terminal(rng, terminals)
    n_prim = len(FUNCTIONS) + len(terminals)
    if root or rng.integers(n_prim) < len(FUNCTIONS):
        return ExprTree(_pick(rng, FUNCTIONS), (grow(rng, depth - 1, terminals, False), grow(rng, depth - 1, terminals, False)))
    return random_terminal(rng, terminals)


def ramped_tree(rng, depth: int, use_full: bool, terminals: Sequence[str] = TERMINALS, min_depth: int = 2) -> ExprTree:
    if use_full:
        return full(rng, depth, terminals)
    lo = min(min_depth, depth)
    while True:
        t = grow(rng, depth, terminals)
        if t.depth >= lo:
            return t


def _paths(tree: ExprTree) -> List[Path]:
    return [p for p, _ in tree.nodes()]


def _biased_point(rng, tree: ExprTree, paths: Optional[List[Path]] = None) -> Path:
    paths = _paths(tree) if paths is None else paths
    inner = [p for p in paths if not tree.get(p).is_terminal]
    leaves = [p for p in paths if tree.get(p).is_terminal]
    if inner and (not leaves or rng.random() < FUNCTION_BIAS):
        return _pick(rng, inner)
    return _pick(rng, leaves)


def common_region(a: ExprTree, b: ExprTree) -> List[Path]:
    """Paths shared by both trees where every ancestor has matching arity."""
    out = []
    stack = [((), a, b)]
    while stack:
        path, x, y = stack.pop()
        out.append(path)
        if x.children and y.children:
            for i in range(len(x.children) - 1, -1, -1):
                stack.append((path + (i,), x.children[i], y.children[i]))
    return out


# --------------------------------------------------------------------------
# crossover: (a, b, rng) -> child built mostly from a


def crx_subtree(a, b, rng, **_):
    pa = _biased_point(rng, a)
    pb = _biased_point(rng, b)
    return a.replace(pa, b.get(pb))


def crx_one_point(a, b, rng, **_):
    p = _pick(rng, common_region(a, b))
    return a.replace(p, b.get(p))


def crx_context_preserving(a, b, rng, **_):
    # same coordinates in both parents, Koza-biased towards internal nodes of a
    region = common_region(a, b)
    p = _biased_point(rng, a, region)
    return a.replace(p, b.get(p))


def crx_uniform(a, b, rng, **_):
    def mix(x, y):
        if x.children and y.children:
            op = y.op if rng.random() < 0.5 else x.op
            return ExprTree(op, [mix(cx, cy) for cx, cy in zip(x.children, y.children)])
        return y if rng.random() < 0.5 else x

    return mix(a, b)


def crx_size_fair(a, b, rng, **_):
    pa = _pick(rng, _paths(a))
    limit = 2 * a.get(pa).size + 1
    fits = [p for p in _paths(b) if b.get(p).size <= limit]
    return a.replace(pa, b.get(_pick(rng, fits)))


CROSSOVER_FUNCS: Dict[str, Callable] = {
    "subtree": crx_subtree,
    "uniform": crx_uniform,
    "context_preserving": crx_context_preserving,
    "size_fair": crx_size_fair,
    "one_point": crx_one_point,
}


def crossover_tree(a: ExprTree, b: ExprTree, variant: str, rng, max_depth: int, fitter: Optional[ExprTree] = None,
                   retries: int = 5) -> ExprTree:
    """Apply ``variant``; retry on depth violations, then copy the fitter parent."""
    fn = CROSSOVER_FUNCS[variant]
    for _ in range(retries):
        child = fn(a, b, rng)
        if child.depth <= max_depth:
            return child
    return a if fitter is None else fitter


# --------------------------------------------------------------------------
# mutation


def mut_subtree(t, rng, max_depth, terminals):
    p = _pick(rng, _paths(t))
    room = max(0, max_depth - len(p))
    return t.replace(p, grow(rng, int(rng.integers(room + 1)), terminals, root=False))


def mut_hoist(t, rng, max_depth, terminals):
    paths = _paths(t)[1:]
    if not paths:
        return t
    return t.get(_pick(rng, paths))


def _function_paths(t):
    return [p for p, n in t.nodes() if n.children]


def mut_node_complement(t, rng, max_depth, terminals):
    paths = _function_paths(t)
    if not paths:
        return t
    p = _pick(rng, paths)
    n = t.get(p)
    return t.replace(p, ExprTree(COMPLEMENT[n.op], n.children))


def mut_node_replacement(t, rng, max_depth, terminals):
    p = _pick(rng, _paths(t))
    n = t.get(p)
    if n.children:
        choices = [f for f in FUNCTIONS if f != n.op]
        return t.replace(p, ExprTree(_pick(rng, choices), n.children))
    choices = [x for x in terminals if x != n.op] or list(terminals)
    return t.replace(p, ExprTree(_pick(rng, choices)))


def mut_permutation(t, rng, max_depth, terminals):
    paths = _function_paths(t)
    if not paths:
        return t
    p = _pick(rng, paths)
    n = t.get(p)
    return t.replace(p, ExprTree(n.op, n.children[::-1]))


def mut_shrink(t, rng, max_depth, terminals):
    paths = _function_paths(t)
    if not paths:
        return t
    return t.replace(_pick(rng, paths), random_terminal(rng, terminals))


MUTATION_FUNCS: Dict[str, Callable] = {
    "subtree": mut_subtree,
    "hoist": mut_hoist,
    "node_complement": mut_node_complement,
    "node_replacement": mut_node_replacement,
    "permutation": mut_permutation,
    "shrink": mut_shrink,
}


def mutate_tree(t: ExprTree, variant: str, rng, max_depth: int, terminals: Sequence[str] = TERMINALS) -> ExprTree:
    child = MUTATION_FUNCS[variant](t, rng, max_depth, terminals)
    return child if child.depth <= max_depth else t
