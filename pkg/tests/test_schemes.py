import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crpgp.errors import BudgetExceeded, ConfigError, Deadlock, InternalLoop
from crpgp.gp.operators import ramped_tree
from crpgp.rules import SCHEMES, T, add, div, mul, parse_rule, sub
from crpgp.schemes import (
    RelocationRule,
    baseline_choose,
    bnb_optimal_relocations,
    choose_destination,
    restricted_candidates,
    solve,
)
from crpgp.yard import RELOCATE, RETRIEVE, Yard

SH = T("SH")


def log(stats):
    return [(m.kind, m.origin, m.destination, m.container) for m in stats.moves]


def random_yard(rng, s_range=(3, 7), t_range=(3, 6), fill=0.8):
    s = int(rng.integers(*s_range))
    t = int(rng.integers(*t_range))
    n = max(1, int(s * t * fill) - t)
    stacks = [[] for _ in range(s)]
    for c in (rng.permutation(n) + 1).tolist():
        open_ = [i for i in range(s) if len(stacks[i]) < t]
        stacks[open_[int(rng.integers(len(open_)))]].append(c)
    return Yard(stacks, t)


def random_tree(rng, max_depth=5):
    return ramped_tree(rng, int(rng.integers(1, max_depth + 1)), bool(rng.integers(2)))


def rule_for(scheme, rng, **kw):
    n = 2 if scheme in ("UNT", "UNP") else 1
    return RelocationRule(scheme, tuple(random_tree(rng) for _ in range(n)), **kw)


def test_rule_validation():
    with pytest.raises(ConfigError):
        RelocationRule("UNT", (SH,))
    with pytest.raises(ConfigError):
        RelocationRule("XX", (SH,))
    with pytest.raises(ConfigError):
        RelocationRule("RE", ())
    with pytest.raises(ConfigError):
        RelocationRule("UNC", (SH,), pair_cap=-1)
    with pytest.raises(ConfigError):
        RelocationRule("UN", baseline="TLP")
    assert RelocationRule("RE", baseline="mm").baseline == "MINMAX"


def test_choose_destination_examples():
    y = Yard([[2, 4], [1, 3], []], 4)
    assert choose_destination(y, 2, RelocationRule("RE", (SH,))) == 3
    const = div(SH, sub(SH, SH))
    assert choose_destination(y, 2, RelocationRule("RE", (const,))) == 1
    assert choose_destination(y, 2, RelocationRule("RE", (SH, SH))) == 3


def test_ren_excludes_next_target_stack_unless_alone():
    y = Yard([[2, 4], [1, 3], []], 4)
    assert restricted_candidates(y, 2, ren=True) == [3]
    y = Yard([[2], [1, 3], [4, 5, 6, 7]], 4)
    assert restricted_candidates(y, 2, ren=True) == [1]


def test_re_examples():
    st_ = solve(Yard([[2, 1]], 2), RelocationRule("RE", (SH,)))
    assert st_.relocations == 0 and st_.retrievals == 2
    st_ = solve(Yard([[1, 2], []], 2), RelocationRule("RE", (SH,)))
    assert st_.relocations == 1 and st_.retrievals == 2
    assert abs(st_.crane_seconds - 99.6) <= 1e-9
    with pytest.raises(Deadlock) as e:
        solve(Yard([[1, 2]], 3), RelocationRule("RE", (SH,)))
    assert e.value.stats is not None


def test_un_cleanup_trace():
    y = Yard([[1, 3], [2], [9]], 3)
    st_ = solve(y, RelocationRule("UN", (T("MIN"),)))
    assert log(st_)[:3] == [(RELOCATE, 2, 3, 2), (RELOCATE, 1, 2, 3), (RETRIEVE, 1, 0, 1)]
    assert st_.relocations == 2


def test_un_without_cleanup_matches_re():
    y = Yard([[1, 3], [5], [9]], 4)
    r = (T("MIN"),)
    assert log(solve(y, RelocationRule("UN", r))) == log(solve(y, RelocationRule("RE", r)))


def test_unc_examples():
    y = Yard([[1, 2], []], 2)
    for k in (0, 3):
        assert log(solve(y, RelocationRule("UNC", (SH,), pair_cap=k))) == log(solve(y, RelocationRule("RE", (SH,))))


def test_baselines():
    y = Yard([[2, 4], [1, 3], []], 4)
    assert baseline_choose("TLP", y, 2, [1, 3]) == 3
    y = Yard([[2], [1, 3], [5], [9]], 4)
    assert baseline_choose("MINMAX", y, 2, [1, 3, 4]) == 3
    y = Yard([[4, 1], [2], [6, 3]], 4)
    # CUR=3 on stack 3; candidates MIN={1, 2}
    assert baseline_choose("MINMAX", y, 3, [1, 2]) == 2
    y = Yard([[5, 6], [1, 9], [2, 3]], 5)
    assert baseline_choose("RI", y, 2, [1, 3]) == 1


def test_bnb_examples():
    assert bnb_optimal_relocations(Yard([[2, 1]], 2)) == 0
    assert bnb_optimal_relocations(Yard([[1, 2], []], 2)) == 1
    assert bnb_optimal_relocations(Yard([[3, 2, 1], [], []], 3)) == 0
    with pytest.raises(BudgetExceeded):
        bnb_optimal_relocations(Yard([[1, 5, 9, 3], [2, 7, 6, 10], [4, 8, 11, 12], []], 5), budget=5)


def test_bnb_matches_brute_force():
    def brute(stacks, t, limit):
        # iterative deepening over restricted move sequences
        def feasible(stacks, left):
            stacks = [list(s) for s in stacks]
            while True:
                ids = [c for s in stacks for c in s]
                if not ids:
                    return True
                m = min(ids)
                i = next(i for i, s in enumerate(stacks) if m in s)
                if stacks[i][-1] != m:
                    break
                stacks[i].pop()
            if left == 0:
                return False
            for d in range(len(stacks)):
                if d != i and len(stacks[d]) < t:
                    nxt = [list(s) for s in stacks]
                    nxt[d].append(nxt[i].pop())
                    if feasible(nxt, left - 1):
                        return True
            return False
        for k in range(limit + 1):
            if feasible(stacks, k):
                return k
        return None

    rng = np.random.default_rng(5)
    for _ in range(60):
        y = random_yard(rng, (2, 4), (2, 4), 0.7)
        ref = brute(y.stacks, y.max_height, 8)
        if ref is None:
            continue
        assert bnb_optimal_relocations(y) == ref, y.stacks


@pytest.mark.parametrize("scheme", SCHEMES)
def test_feasibility_and_determinism(scheme):
    rng = np.random.default_rng(SCHEMES.index(scheme))
    for _ in range(30):
        y = random_yard(rng)
        rule = rule_for(scheme, rng)
        try:
            a = solve(y, rule)
        except Deadlock:
            continue
        assert log(a) == log(solve(y, rule))
        assert [m.container for m in a.moves if m.kind == RETRIEVE] == sorted(c for s in y.stacks for c in s)
        assert a.relocations == sum(1 for m in a.moves if m.kind == RELOCATE)
        assert abs(a.crane_seconds - sum(m.seconds for m in a.moves)) <= 1e-9
        replay = y.copy()
        for m in a.moves:
            if m.kind == RELOCATE:
                replay.relocate(m.origin, m.destination)
            else:
                replay.retrieve()
            assert all(len(s) <= y.max_height for s in replay.stacks)
        assert replay.empty


@pytest.mark.parametrize("scheme", SCHEMES)
def test_empty_yard(scheme):
    rng = np.random.default_rng(0)
    assert solve(Yard([[], []], 3), rule_for(scheme, rng)).moves == []


ONE = div(SH, SH)  # 1 for every stack, empty ones included (protected division)


def const(k):
    t = ONE
    for _ in range(k - 1):
        t = add(t, ONE)
    return t


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 6), st.integers(-6, 6), st.sampled_from(["RE", "REN"]))
def test_positive_scaling_and_shift_invariance(seed, scale, shift, scheme):
    rng = np.random.default_rng(seed)
    y = random_yard(rng)
    # integer-valued PF so scaling and shifting are exact in floating point
    tree = parse_rule("(add (mul SH EMP) (sub RI DIFF))")
    try:
        ref = log(solve(y, RelocationRule(scheme, (tree,))))
    except Deadlock:
        return
    variants = [mul(tree, const(scale)), div(tree, const(scale))]
    if shift > 0:
        variants.append(add(tree, const(shift)))
    elif shift < 0:
        variants.append(sub(tree, const(-shift)))
    for v in variants:
        assert log(solve(y, RelocationRule(scheme, (v,)))) == ref


@pytest.mark.parametrize("scheme", ["RE", "REN", "UN", "UNC"])
def test_duplicated_expression_matches_single(scheme):
    rng = np.random.default_rng(11)
    for _ in range(40):
        y = random_yard(rng)
        tree = random_tree(rng)
        try:
            ref = log(solve(y, RelocationRule(scheme, (tree,))))
        except Deadlock:
            continue
        assert log(solve(y, RelocationRule(scheme, (tree, tree)))) == ref


def test_unp_with_min_is_un_and_unc_zero_is_re():
    rng = np.random.default_rng(12)
    for _ in range(60):
        y = random_yard(rng)
        tree = random_tree(rng)
        pairs = [
            (RelocationRule("UNP", (tree, T("MIN"))), RelocationRule("UN", (tree,))),
            (RelocationRule("UNC", (tree,), pair_cap=0), RelocationRule("RE", (tree,))),
        ]
        for a, b in pairs:
            try:
                ref = log(solve(y, b))
            except Deadlock:
                with pytest.raises(Deadlock):
                    solve(y, a)
                continue
            assert log(solve(y, a)) == ref


def test_relocation_cap_raises_internal_loop():
    from crpgp.schemes import _Run

    r = _Run(Yard([[1, 3], [2], []], 3), RelocationRule("RE", (SH,)))
    assert r.cap == 2 * 3
    with pytest.raises(InternalLoop) as e:
        for _ in range(r.cap + 1):
            r.relocate(2, 3)
            r.relocate(3, 2)
    assert e.value.stats.relocations == r.cap + 1


def test_restricted_schemes_respect_oracle_bound():
    rng = np.random.default_rng(21)
    checked = 0
    while checked < 100:
        y = random_yard(rng, (2, 4), (2, 5), 0.6)
        if len(y) > 8:
            continue
        try:
            opt = bnb_optimal_relocations(y)
        except Deadlock:
            continue
        opt_u = bnb_optimal_relocations(y, unrestricted=True)
        assert opt_u <= opt
        for scheme in SCHEMES:
            try:
                r = solve(y, rule_for(scheme, rng)).relocations
            except Deadlock:
                continue
            assert r >= (opt if scheme in ("RE", "REN") else opt_u)
            if opt == 0:
                assert r == 0
        checked += 1
