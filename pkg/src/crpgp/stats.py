"""Two-sided Mann-Whitney U test and run summaries."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Dict, List, Sequence

from .errors import TooFewSamples

EXACT_LIMIT = 400


def rankdata(values: Sequence[float]) -> List[float]:
    """Ranks starting at 1; ties share the mean rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


@dataclass
class MannWhitney:
    u: float
    p: float
    method: str
    median_a: float
    median_b: float
    n_a: int
    n_b: int


def _exact_cdf(ranks2: Sequence[int], n: int, stat2: int):
    """P(S <= stat2) and P(S >= stat2) where S is the doubled rank sum of a
    random size-n subset of ``ranks2`` (integers, doubled midranks)."""
    total = sum(ranks2)
    # ways[k][s]: subsets of size k with doubled rank sum s
    ways = [[0] * (total + 1) for _ in range(n + 1)]
    ways[0][0] = 1
    for r in ranks2:
        for k in range(n, 0, -1):
            row, prev = ways[k], ways[k - 1]
            for s in range(total, r - 1, -1):
                if prev[s - r]:
                    row[s] += prev[s - r]
    dist = ways[n]
    count = sum(dist)
    lower = sum(dist[: stat2 + 1])
    upper = sum(dist[stat2:])
    return lower / count, upper / count


def mann_whitney(a: Sequence[float], b: Sequence[float], exact_limit: int = EXACT_LIMIT) -> MannWhitney:
    """Two-sided test; ``u`` is the statistic of sample ``a``.

    Exact permutation distribution (ties handled through midranks) when
    ``len(a) * len(b) <= exact_limit``, otherwise the tie-corrected normal
    approximation with continuity correction.
    """
    n, m = len(a), len(b)
    if n < 3 or m < 3:
        raise TooFewSamples("need at least 3 observations per sample")
    ranks = rankdata(list(a) + list(b))
    r1 = sum(ranks[:n])
    u = r1 - n * (n + 1) / 2.0
    if n * m <= exact_limit:
        ranks2 = [int(round(2 * r)) for r in ranks]
        lower, upper = _exact_cdf(ranks2, n, int(round(2 * r1)))
        p = min(1.0, 2.0 * min(lower, upper))
        method = "exact"
    else:
        big = n + m
        ties = {}
        for r in ranks:
            ties[r] = ties.get(r, 0) + 1
        tie_term = sum(t ** 3 - t for t in ties.values()) / (big * (big - 1))
        sigma = math.sqrt(n * m / 12.0 * ((big + 1) - tie_term))
        if sigma == 0:
            p = 1.0
        else:
            z = max(0.0, abs(u - n * m / 2.0) - 0.5) / sigma
            p = min(1.0, math.erfc(z / math.sqrt(2.0)))
        method = "normal"
    return MannWhitney(u, p, method, statistics.median(a), statistics.median(b), n, m)


def summarize(values: Sequence[float]) -> Dict[str, float]:
    if not values:
        raise TooFewSamples("no values to summarize")
    return {"min": min(values), "median": statistics.median(values), "max": max(values)}
