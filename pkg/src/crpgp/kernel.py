"""Backend selection: compiled kernel when importable, pure Python otherwise.

Set ``CRPGP_PURE=1`` to force the pure-Python path.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, Deadlock, InternalLoop
from .rules import SCHEMES
from .schemes import RelocationRule, solve
from .yard import RELOCATE, RETRIEVE, Move, SolutionStats, Yard

try:
    from . import _kernel
except ImportError:  # extension not built
    _kernel = None

if os.environ.get("CRPGP_PURE") == "1":
    _kernel = None

HAVE_KERNEL = _kernel is not None
BACKEND = "compiled" if HAVE_KERNEL else "python"

OK, DEADLOCK, LOOP = 0, 1, 2
_BASELINE_CODE = {None: 0, "TLP": 1, "RI": 2, "MINMAX": 3}
_MAX_PROGRAM = 511


def _use_compiled(backend: Optional[str]) -> bool:
    if backend is None:
        return HAVE_KERNEL
    if backend == "compiled":
        if not HAVE_KERNEL:
            raise ConfigError("compiled kernel is not available")
        return True
    if backend == "python":
        return False
    raise ConfigError(f"unknown backend {backend!r}")


def encode_yard(yard: Yard) -> np.ndarray:
    rec = [yard.n_stacks, yard.max_height, yard.sentinel, yard.crane]
    for s in yard.stacks:
        rec.append(len(s))
        rec.extend(s)
    return np.asarray(rec, dtype=np.int32)


def encode_rule(rule: RelocationRule):
    progs = [t.postfix() for t in rule.expressions]
    if any(len(p) > _MAX_PROGRAM for p in progs):
        raise ConfigError(f"expressions are limited to {_MAX_PROGRAM} nodes")
    len0 = len(progs[0]) if progs else 0
    len1 = len(progs[1]) if len(progs) > 1 else 0
    ops = np.asarray([op for p in progs for op in p] or [0], dtype=np.int32)
    k = -1 if rule.pair_cap is None else int(rule.pair_cap)
    return SCHEMES.index(rule.scheme), _BASELINE_CODE[rule.baseline], k, ops, len0, len1


class Dataset:
    """Instances packed once for repeated batch evaluation."""

    def __init__(self, yards: Sequence[Yard], names: Optional[Sequence[str]] = None):
        self.yards = list(yards)
        self.names = list(names) if names is not None else [f"#{i}" for i in range(len(self.yards))]
        recs = [encode_yard(y) for y in self.yards]
        self.offsets = np.zeros(len(recs), dtype=np.int64)
        if recs:
            self.offsets[1:] = np.cumsum([len(r) for r in recs])[:-1]
            self.data = np.concatenate(recs).astype(np.int32)
        else:
            self.data = np.zeros(1, dtype=np.int32)
        models = {y.time_model for y in self.yards}
        if len(models) > 1:
            raise ValueError("all instances of a dataset must share one time model")
        self.time_model = models.pop() if models else None

    def __len__(self):
        return len(self.yards)


@dataclass
class BatchResult:
    relocations: np.ndarray
    crane_seconds: np.ndarray
    status: np.ndarray

    @property
    def ok(self) -> np.ndarray:
        return self.status == OK

    @property
    def failures(self) -> int:
        return int(np.count_nonzero(self.status != OK))

    def total_relocations(self) -> int:
        return int(self.relocations[self.ok].sum())

    def total_seconds(self) -> float:
        return math.fsum(self.crane_seconds[self.ok].tolist())

    def total(self, objective: str) -> float:
        if objective == "relocations":
            return float(self.total_relocations())
        return self.total_seconds()


def _solve_status(args) -> Tuple[int, int, float]:
    yard, rule = args
    try:
        st = solve(yard, rule)
    except InternalLoop:
        return LOOP, 0, 0.0
    except Deadlock:
        return DEADLOCK, 0, 0.0
    return OK, st.relocations, st.crane_seconds


def evaluate(dataset: Dataset, rule: RelocationRule, workers: int = 1, backend: Optional[str] = None) -> BatchResult:
    """Solve every instance of ``dataset`` with ``rule``.

    Results are per instance and in dataset order regardless of ``workers``.
    """
    n = len(dataset)
    reloc = np.zeros(n, dtype=np.int64)
    secs = np.zeros(n, dtype=np.float64)
    status = np.zeros(n, dtype=np.int32)
    if n == 0:
        return BatchResult(reloc, secs, status)
    if _use_compiled(backend):
        tm = dataset.time_model
        scheme, base, k, ops, len0, len1 = encode_rule(rule)
        _kernel.run_dataset(dataset.data, dataset.offsets, scheme, base, k, ops, len0, len1,
                            tm.pickup, tm.trolley, int(tm.reset_after_retrieve),
                            reloc, secs, status, max(1, int(workers)))
        failed = status != OK
        reloc[failed] = 0
        secs[failed] = 0.0
    else:
        jobs = [(y, rule) for y in dataset.yards]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_solve_status, jobs, chunksize=max(1, n // (4 * workers))))
        else:
            rows = [_solve_status(j) for j in jobs]
        for i, (s, r, t) in enumerate(rows):
            status[i], reloc[i], secs[i] = s, r, t
    return BatchResult(reloc, secs, status)


def solve_fast(yard: Yard, rule: RelocationRule, backend: Optional[str] = None) -> SolutionStats:
    """Like ``schemes.solve`` but through the selected backend, move log included."""
    if not _use_compiled(backend):
        return solve(yard, rule)
    tm = yard.time_model
    scheme, base, k, ops, len0, len1 = encode_rule(rule)
    n = len(yard)
    kk = yard.n_stacks if k < 0 else k
    cap = n + n * (2 * n + kk + 1) + 1
    log = np.zeros(4 * cap, dtype=np.int32)
    logsec = np.zeros(cap, dtype=np.float64)
    status, nmoves, _, _ = _kernel.run_logged(encode_yard(yard), scheme, base, k, ops, len0, len1,
                                              tm.pickup, tm.trolley, int(tm.reset_after_retrieve), log, logsec)
    stats = SolutionStats()
    for i in range(nmoves):
        kind, o, d, c = log[4 * i:4 * i + 4].tolist()
        stats.add(Move(RELOCATE if kind == 0 else RETRIEVE, o, d, c, float(logsec[i])))
    if status == LOOP:
        raise InternalLoop("per-retrieval relocation cap exceeded", stats)
    if status != OK:
        raise Deadlock("no legal relocation", stats)
    return stats


def backend_names() -> List[str]:
    return ["compiled", "python"] if HAVE_KERNEL else ["python"]
