import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crpgp.errors import ParseError, UnknownTerminal
from crpgp.gp.operators import full, grow
from crpgp.rules import (
    EXAMPLE_RULE,
    FUNCTIONS,
    PRESETS,
    TERMINALS,
    EvalContext,
    ExprTree,
    T,
    add,
    div,
    eval_expr,
    eval_terminal,
    mul,
    parse_rule,
    parse_rule_file,
    print_rule,
    protected_div,
    sub,
    terminal_values,
)
from crpgp.yard import Yard, move_time


def ctx_for(stacks, t, origin, candidate, crane=0):
    return EvalContext.for_move(Yard(stacks, t, crane=crane), origin, candidate)


EXAMPLE = [[2, 4], [1, 3], []]


def test_terminals_on_example_candidate_s1():
    ctx = ctx_for(EXAMPLE, 4, 2, 1)
    expected = dict(SH=2, EMP=2, CUR=3, RI=1, MIN=2, AVG=3, DIFF=-1, NEXT=1, EMPTY=0, WL=1, NL=1, DSM=1, REM=1, DUR=33.6)
    for name, v in expected.items():
        assert eval_terminal(name, ctx) == pytest.approx(v, abs=1e-12), name


def test_terminals_on_empty_candidate():
    ctx = ctx_for(EXAMPLE, 4, 2, 3)
    expected = dict(SH=0, EMP=4, RI=0, MIN=5, AVG=0, DIFF=2, NEXT=0, EMPTY=1, WL=0, NL=0, DSM=0)
    for name, v in expected.items():
        assert eval_terminal(name, ctx) == v, name


def test_terminals_single_container_candidate():
    ctx = ctx_for([[7], [1, 3]], 4, 2, 1)
    assert [eval_terminal(n, ctx) for n in ("RI", "WL", "NL", "DSM")] == [0, 1, 0, 0]


# --- naive oracle -----------------------------------------------------------


def naive_terminals(stacks, t, crane, origin, cand):
    cur = stacks[origin - 1][-1]
    allc = sorted(c for s in stacks for c in s)
    target = allc[0]
    nxt = allc[1] if len(allc) > 1 else None
    ts = next(s for s in stacks if target in s)
    s = stacks[cand - 1]
    sentinel = max(len(allc), max(allc)) + 1
    well = sum(1 for j, c in enumerate(s) if all(x < c for x in s[j + 1:]))
    smaller_tiers = [j + 1 for j, c in enumerate(s) if c < cur]
    mn = min(s) if s else sentinel
    return {
        "SH": len(s),
        "EMP": t - len(s),
        "CUR": cur,
        "DUR": 1.2 * abs(crane - origin) + 1.2 * abs(origin - cand) + 30.0,
        "RI": sum(1 for c in s if c < cur),
        "MIN": mn,
        "AVG": sum(s) / len(s) if s else 0.0,
        "REM": len(ts) - 1 - ts.index(target),
        "NEXT": 1 if nxt is not None and nxt in s else 0,
        "DIFF": mn - cur,
        "EMPTY": 1 if not s else 0,
        "WL": well,
        "NL": len(s) - well,
        "DSM": max(smaller_tiers) if smaller_tiers else 0,
    }


def test_terminals_match_naive_oracle_on_1000_pairs():
    rng = np.random.default_rng(123)
    done = 0
    while done < 1000:
        s = int(rng.integers(2, 8))
        t = int(rng.integers(2, 7))
        n = int(rng.integers(1, s * t))
        stacks = [[] for _ in range(s)]
        for c in (rng.permutation(n) + 1).tolist():
            open_ = [i for i in range(s) if len(stacks[i]) < t]
            stacks[open_[int(rng.integers(len(open_)))]].append(c)
        origins = [i + 1 for i in range(s) if stacks[i]]
        origin = origins[int(rng.integers(len(origins)))]
        cand = int(rng.integers(1, s + 1))
        if cand == origin:
            continue
        crane = int(rng.integers(0, s + 1))
        ctx = ctx_for(stacks, t, origin, cand, crane)
        ref = naive_terminals(stacks, t, crane, origin, cand)
        vals = terminal_values(ctx)
        for i, name in enumerate(TERMINALS):
            assert vals[i] == pytest.approx(ref[name], rel=1e-12, abs=1e-12), (name, stacks, origin, cand)
        done += 1


# --- expressions ------------------------------------------------------------


def test_example_value_and_shape():
    tree = parse_rule(EXAMPLE_RULE)
    assert print_rule(tree) == EXAMPLE_RULE
    assert parse_rule(print_rule(tree)) == tree
    assert (tree.size, tree.depth) == (17, 5)
    v = eval_expr(tree, ctx_for(EXAMPLE, 4, 2, 1))
    assert abs(v - 0.2361111111111111) <= 1e-9
    assert abs(v - (2 / 9 + 1 / 4) / 2) <= 1e-12


def test_protected_division():
    assert protected_div(4.0, 0.0) == 1.0
    assert protected_div(4.0, 1e-10) == 1.0
    ctx = ctx_for(EXAMPLE, 4, 2, 1)
    assert eval_expr(div(T("SH"), sub(T("SH"), T("SH"))), ctx) == 1.0
    assert eval_expr(add(T("SH"), T("CUR")), ctx) == 5.0


@settings(max_examples=300)
@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_protected_division_property(a, b):
    q = protected_div(a, b)
    if abs(b) <= 1e-9:
        assert q == 1.0
    else:
        assert math.isclose(q * b, a, rel_tol=1e-12, abs_tol=1e-12)


def test_non_finite_becomes_infinity():
    big = T("CUR")
    for _ in range(12):
        big = mul(big, big)
    ctx = ctx_for([[2, 4], [1, 300]], 4, 2, 1)
    assert eval_expr(big, ctx) == math.inf
    assert eval_expr(sub(big, big), ctx) == math.inf


def test_parse_variants_and_errors():
    assert parse_rule("SH") == T("SH")
    assert parse_rule("sh").depth == 0 and parse_rule("sh").size == 1
    assert parse_rule("(ADD sh Emp)") == add(T("SH"), T("EMP"))
    assert print_rule(parse_rule("(ADD sh Emp)")) == "(add SH EMP)"
    with pytest.raises(ParseError) as e:
        parse_rule("(add SH")
    assert e.value.position == len("(add SH")
    with pytest.raises(UnknownTerminal):
        parse_rule("(add SH FOO)")
    for bad in ("", "(add SH EMP) SH", "(add SH)", "(neg SH EMP)", ")"):
        with pytest.raises(ParseError):
            parse_rule(bad)


def test_presets():
    assert set(PRESETS["RE-R"]) == {"SH", "RI", "EMP", "DIFF", "AVG", "CUR"}
    assert set(PRESETS["UN-R"]) == {"SH", "EMP", "DIFF", "RI"}


def test_rule_file_round_trip():
    scheme, trees = parse_rule_file(f"# scheme=unt pfs=2\n{EXAMPLE_RULE}\nMIN\n")
    assert scheme == "UNT" and trees == [parse_rule(EXAMPLE_RULE), T("MIN")]
    with pytest.raises(ParseError):
        parse_rule_file("# scheme=RE pfs=1\n")


def test_trees_are_immutable():
    t = add(T("SH"), T("EMP"))
    with pytest.raises(AttributeError):
        t.op = "sub"


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 6), st.booleans())
def test_tree_properties(seed, depth, use_full):
    rng = np.random.default_rng(seed)
    tree = full(rng, depth) if use_full else grow(rng, depth)
    assert parse_rule(print_rule(tree)) == tree
    assert print_rule(parse_rule(print_rule(tree))) == print_rule(tree)
    nodes = [n for _, n in tree.nodes()]
    n_fun = sum(1 for n in nodes if n.op in FUNCTIONS)
    assert tree.size == len(nodes) == 2 * n_fun + 1
    assert tree.size % 2 == 1
    ctx = ctx_for(EXAMPLE, 4, 2, 1)
    a, b = eval_expr(tree, ctx), eval_expr(tree, ctx)
    assert a == b or (math.isnan(a) and math.isnan(b))
