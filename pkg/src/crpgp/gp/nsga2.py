"""NSGA-II over (relocations, crane seconds)."""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

from .engine import Evaluator, GpConfig, Individual, _as_evaluator, init_population, make_child


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def non_dominated_sort(points: Sequence[Sequence[float]]) -> List[List[int]]:
    """Fronts of indices, best first (Deb's fast non-dominated sort)."""
    n = len(points)
    dominated = [[] for _ in range(n)]
    count = [0] * n
    fronts: List[List[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(points[p], points[q]):
                dominated[p].append(q)
            elif dominates(points[q], points[p]):
                count[p] += 1
        if count[p] == 0:
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt = []
        for p in fronts[i]:
            for q in dominated[p]:
                count[q] -= 1
                if count[q] == 0:
                    nxt.append(q)
        i += 1
        fronts.append(sorted(nxt))
    return fronts[:-1]


def crowding_distance(points: Sequence[Sequence[float]], front: Sequence[int]) -> dict:
    dist = {i: 0.0 for i in front}
    if len(front) <= 2:
        return {i: math.inf for i in front}
    for m in range(len(points[front[0]])):
        order = sorted(front, key=lambda i: (points[i][m], i))
        lo, hi = points[order[0]][m], points[order[-1]][m]
        dist[order[0]] = dist[order[-1]] = math.inf
        if hi == lo:
            continue
        for k in range(1, len(order) - 1):
            dist[order[k]] += (points[order[k + 1]][m] - points[order[k - 1]][m]) / (hi - lo)
    return dist


def _rank_and_crowd(pop: List[Individual]) -> Tuple[List[int], List[float]]:
    pts = [ind.objectives for ind in pop]
    rank = [0] * len(pop)
    crowd = [0.0] * len(pop)
    for r, front in enumerate(non_dominated_sort(pts)):
        d = crowding_distance(pts, front)
        for i in front:
            rank[i] = r
            crowd[i] = d[i]
    return rank, crowd


def _select(pop, rank, crowd, rng) -> Individual:
    a, b = rng.choice(len(pop), size=2, replace=False).tolist()
    if (rank[a], -crowd[a], a) <= (rank[b], -crowd[b], b):
        return pop[a]
    return pop[b]


def nsga2(config: GpConfig, train_set) -> List[Individual]:
    """Generational NSGA-II; returns the final rank-0 set (unique expressions)."""
    rng = config.rng()
    ev: Evaluator = _as_evaluator(train_set, config)
    pop = [ev(ind) for ind in init_population(config, rng)]
    evals = len(pop)
    n = config.population_size
    while evals < config.max_evaluations:
        rank, crowd = _rank_and_crowd(pop)
        # crossover's "fitter parent" fallback compares on rank
        for ind, r in zip(pop, rank):
            ind.fitness = r
        offspring = []
        while len(offspring) < n and evals < config.max_evaluations:
            p1 = _select(pop, rank, crowd, rng)
            p2 = _select(pop, rank, crowd, rng)
            offspring.append(ev(make_child(p1, p2, config, rng)))
            evals += 1
        union = pop + offspring
        pts = [ind.objectives for ind in union]
        nxt: List[int] = []
        for front in non_dominated_sort(pts):
            if len(nxt) + len(front) <= n:
                nxt.extend(front)
                continue
            d = crowding_distance(pts, front)
            nxt.extend(sorted(front, key=lambda i: (-d[i], i))[: n - len(nxt)])
            break
        pop = [union[i] for i in nxt]
    pts = [ind.objectives for ind in pop]
    out, seen = [], set()
    for i in non_dominated_sort(pts)[0]:
        ind = pop[i]
        ind.fitness = ind.objectives[0] if config.objective == "relocations" else ind.objectives[1]
        if ind.text not in seen:
            seen.add(ind.text)
            out.append(ind)
    return out
