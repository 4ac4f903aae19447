"""Instance files, datasets and the Caserta/Zhu style generators.

Instance file layout (UTF-8, LF)::

    S N T
    k id1 ... idk      # one line per stack, bottom to top; "0" if empty

A dataset is a directory of ``*.crp`` files plus ``manifest.jsonl`` with one
JSON object per instance (fileName, family, S, N, T, seed).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .errors import Infeasible, ParseError
from .yard import Yard

RNG_ALGORITHM = "numpy.PCG64/SeedSequence"
MANIFEST = "manifest.jsonl"

# (initial height h, stacks S) classes of the classic 840-instance Caserta set, 40 each
CASERTA_CLASSES = [
    (3, 3), (3, 4), (3, 5), (3, 6), (3, 7), (3, 8),
    (4, 4), (4, 5), (4, 6), (4, 7),
    (5, 4), (5, 5), (5, 6), (5, 7), (5, 8), (5, 9), (5, 10),
    (6, 6), (6, 10),
    (10, 6), (10, 10),
]
# every (h, S) pair with h, S in 3..10
CASERTA_UNIFORM = [(h, s) for h in range(3, 11) for s in range(3, 11)]


def _rng(seed: int, index: Optional[int] = None) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    if index is not None:
        entropy.append(int(index))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def parse_instance(text: str) -> Yard:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty instance", 0)
    try:
        s, n, t = (int(v) for v in lines[0].split())
    except ValueError:
        raise ParseError("header must be 'S N T'", 1) from None
    if s < 1 or n < 0 or t < 1:
        raise ParseError("header values out of range", 1)
    if len(lines) != s + 1:
        raise ParseError(f"expected {s} stack lines, found {len(lines) - 1}", len(lines))
    stacks = []
    seen = set()
    for lineno, line in enumerate(lines[1:], 2):
        try:
            vals = [int(v) for v in line.split()]
        except ValueError:
            raise ParseError("non-integer token", lineno) from None
        if not vals or vals[0] != len(vals) - 1:
            raise ParseError("stack height does not match ID count", lineno)
        ids = vals[1:]
        if len(ids) > t:
            raise ParseError(f"stack exceeds max height {t}", lineno)
        for c in ids:
            if c <= 0:
                raise ParseError(f"non-positive ID {c}", lineno)
            if c in seen:
                raise ParseError(f"duplicate ID {c}", lineno)
            seen.add(c)
        stacks.append(ids)
    if len(seen) != n:
        raise ParseError(f"header declares {n} containers, found {len(seen)}", 1)
    return Yard(stacks, t, n_containers=n)


def write_instance(yard: Yard) -> str:
    out = [f"{yard.n_stacks} {len(yard)} {yard.max_height}"]
    for s in yard.stacks:
        out.append(" ".join(str(v) for v in [len(s)] + s))
    return "\n".join(out) + "\n"


def read_instance(path) -> Yard:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def generate_caserta(n_stacks: int, height: int, seed: int, max_height: Optional[int] = None) -> Yard:
    """All stacks start ``height`` high with a random permutation of 1..N.

    ``max_height`` defaults to ``height + n_stacks``.
    """
    if n_stacks < 2 or height < 1:
        raise ValueError("need at least 2 stacks and height >= 1")
    n = n_stacks * height
    t = height + n_stacks if max_height is None else max_height
    if t < height:
        raise Infeasible("max height below initial height")
    perm = _rng(seed).permutation(n) + 1
    stacks = [perm[i * height:(i + 1) * height].tolist() for i in range(n_stacks)]
    return Yard(stacks, t)


def generate_zhu(n_stacks: int, n: int, max_height: int, seed: int) -> Yard:
    """Deal a shuffled 1..N onto random stacks, leaving the top tier free."""
    cap = max_height - 1
    if n > n_stacks * cap:
        raise Infeasible(f"{n} containers do not fit in {n_stacks} stacks of {cap} tiers")
    rng = _rng(seed)
    order = rng.permutation(n) + 1
    stacks: List[List[int]] = [[] for _ in range(n_stacks)]
    for c in order.tolist():
        open_ = [i for i in range(n_stacks) if len(stacks[i]) < cap]
        stacks[open_[int(rng.integers(len(open_)))]].append(c)
    return Yard(stacks, max_height)


@dataclass
class InstanceRecord:
    file_name: str
    family: str
    S: int
    N: int
    T: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {"fileName": self.file_name, "family": self.family, "S": self.S, "N": self.N, "T": self.T, "seed": self.seed},
            sort_keys=False,
        )


def instance_seed(base_seed: int, index: int) -> int:
    """Per-instance seed mixed from the dataset seed and the instance index."""
    return int(np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, index]).generate_state(1, np.uint64)[0])


def generate_dataset(
    family: str,
    count: int,
    seed: int,
    *,
    stacks: Optional[Tuple[int, int]] = None,
    heights: Optional[Tuple[int, int]] = None,
    containers: Optional[Tuple[int, int]] = None,
    max_height: Optional[int] = None,
    grid: Optional[List[Tuple[int, int]]] = None,
) -> List[Tuple[InstanceRecord, Yard]]:
    """Generate ``count`` instances deterministically.

    Caserta: (h, S) cycles over ``grid`` (default the 21 classic classes,
    or every pair of the ``stacks``/``heights`` ranges when given).
    Zhu: S uniform in ``stacks`` (default 6..10), N uniform in ``containers``
    (default 15..69); T is the tightest height leaving one free tier per
    stack, ``ceil(N/S) + 1``, unless ``max_height`` is given (then N is
    clipped to ``S*(T-1)``).
    """
    family = family.lower()
    out = []
    if family == "caserta":
        if grid is None:
            if stacks is None and heights is None:
                grid = CASERTA_CLASSES
            else:
                slo, shi = stacks or (3, 10)
                hlo, hhi = heights or (3, 10)
                grid = [(h, s) for h in range(hlo, hhi + 1) for s in range(slo, shi + 1)]
        for i in range(count):
            h, s = grid[i % len(grid)]
            iseed = instance_seed(seed, i)
            y = generate_caserta(s, h, iseed, max_height)
            rec = InstanceRecord(f"caserta_{i:05d}_{h}_{s}.crp", "caserta", s, len(y), y.max_height, iseed)
            out.append((rec, y))
    elif family == "zhu":
        slo, shi = stacks or (6, 10)
        nlo, nhi = containers or (15, 69)
        for i in range(count):
            iseed = instance_seed(seed, i)
            rng = _rng(iseed, 0)
            s = int(rng.integers(slo, shi + 1))
            n = int(rng.integers(nlo, nhi + 1))
            if max_height is None:
                t = max(3, -(-n // s) + 1)
            else:
                t = max_height
                n = min(n, s * (t - 1))
            y = generate_zhu(s, n, t, iseed)
            rec = InstanceRecord(f"zhu_{i:05d}_{s}_{n}_{t}.crp", "zhu", s, n, t, iseed)
            out.append((rec, y))
    else:
        raise ValueError(f"unknown family {family!r}")
    return out


def write_dataset(out_dir, items: Iterable[Tuple[InstanceRecord, Yard]]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for rec, y in items:
        with open(out / rec.file_name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(write_instance(y))
        lines.append(rec.to_json())
    with open(out / MANIFEST, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(line + "\n" for line in lines))
    return out


def load_dataset(path) -> List[Tuple[str, Yard]]:
    """Instances of a dataset directory (manifest order, else sorted names)."""
    p = Path(path)
    if not p.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {p}")
    manifest = p / MANIFEST
    if manifest.exists():
        with open(manifest, encoding="utf-8") as fh:
            names = [json.loads(line)["fileName"] for line in fh if line.strip()]
    else:
        names = sorted(f for f in os.listdir(p) if f.endswith(".crp"))
    return [(name, read_instance(p / name)) for name in names]
