"""``crpgp`` command line: generate, evolve, evaluate, compare, stats.

Exit codes: 0 success, 1 validation error, 2 I/O error.

CSV schemas (UTF-8, LF, header first):

* evaluate / compare: ``rule,scheme,dataset,relocations,craneSeconds,wallSeconds,failures``
* evaluate ``--failures``: ``rule,instance,status``
* evolve convergence: ``evaluations,bestTrain,validation``
* evolve repeats: ``seed,trainFitness,relocations,craneSeconds,failures``
  (scored on ``--test`` when given, else on the train set), and
  ``summary.csv`` with ``metric,min,median,max``
* nsga2 front: ``index,relocations,craneSeconds,rule``
* stats: ``column,nA,nB,U,p,method,medianA,medianB``
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

from .errors import ConfigError, CRPError
from .gp import GpConfig, evolve, nsga2
from .gp.operators import CROSSOVERS, MUTATIONS
from .instances import CASERTA_CLASSES, CASERTA_UNIFORM, RNG_ALGORITHM, generate_dataset, load_dataset, write_dataset
from .kernel import BACKEND, DEADLOCK, LOOP, Dataset, evaluate
from .published import PUBLISHED
from .rules import SCHEMES, read_rule_file, write_rule_file
from .schemes import BASELINES, RelocationRule
from .stats import mann_whitney, summarize

REPORT_HEADER = ["rule", "scheme", "dataset", "relocations", "craneSeconds", "wallSeconds", "failures"]
DEFAULT_REPEATS = 30
_STATUS = {DEADLOCK: "deadlock", LOOP: "loop"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # bad flags are validation errors (exit 1), not argparse's default 2
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _num(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.6f}".rstrip("0").rstrip(".")


def _range(text: str):
    try:
        lo, _, hi = text.partition(":")
        lo, hi = int(lo), int(hi or lo)
    except ValueError:
        raise ConfigError(f"bad range {text!r}, expected LO:HI") from None
    if lo > hi or lo < 1:
        raise ConfigError(f"bad range {text!r}")
    return lo, hi


def _csv_text(rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _emit(rows, out: Optional[str], append: bool = False):
    """Write header + rows to stdout or a file (header skipped when appending to a non-empty file)."""
    if out is None:
        sys.stdout.write(_csv_text(rows))
        return
    p = Path(out)
    body = rows
    if append and p.exists() and p.stat().st_size > 0:
        body = rows[1:]
    if p.parent != Path("."):
        p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "a" if append else "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_csv_text(body))


def _load(path) -> Dataset:
    items = load_dataset(path)
    return Dataset([y for _, y in items], [n for n, _ in items])


# --------------------------------------------------------------------------
# generate


def cmd_generate(a) -> int:
    family = a.family.lower()
    count = a.count if a.count is not None else (840 if family == "caserta" else 1000)
    if count < 0:
        raise ConfigError("count must be >= 0")
    kw = {}
    if a.stacks:
        kw["stacks"] = _range(a.stacks)
    if a.heights:
        kw["heights"] = _range(a.heights)
    if a.containers:
        kw["containers"] = _range(a.containers)
    if a.max_height is not None:
        kw["max_height"] = a.max_height
    if family == "caserta" and not (a.stacks or a.heights):
        kw["grid"] = CASERTA_CLASSES if a.grid == "classic" else CASERTA_UNIFORM
    try:
        items = generate_dataset(family, count, a.seed, **kw)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    out = write_dataset(a.out, items)
    print(f"wrote {len(items)} instances to {out}", file=sys.stderr)
    return 0


# --------------------------------------------------------------------------
# evaluate / compare


def _report_row(label, rule: RelocationRule, dataset_name, ds: Dataset, workers, timing):
    t0 = time.perf_counter()
    res = evaluate(ds, rule, workers=workers)
    wall = time.perf_counter() - t0 if timing else 0.0
    row = [label, rule.scheme, dataset_name, res.total_relocations(), _num(res.total_seconds()),
           f"{wall:.3f}", res.failures]
    return row, res


def _rule_from_file(path, scheme: Optional[str], pair_cap: Optional[int]) -> RelocationRule:
    file_scheme, trees = read_rule_file(path)
    return RelocationRule((scheme or file_scheme or "RE").upper(), tuple(trees), pair_cap)


def _baseline_rule(name: str, scheme: Optional[str]) -> RelocationRule:
    return RelocationRule((scheme or "RE").upper(), (), baseline=name)


def cmd_evaluate(a) -> int:
    if a.rule:
        rule = _rule_from_file(a.rule, a.scheme, a.pair_cap)
        label = Path(a.rule).stem
    else:
        rule = _baseline_rule(a.baseline, a.scheme)
        label = rule.baseline
    ds = _load(a.dataset)
    row, res = _report_row(label, rule, Path(a.dataset).name, ds, a.workers, not a.no_timing)
    _emit([REPORT_HEADER, row], a.out, append=True)
    if a.failures:
        rows = [["rule", "instance", "status"]]
        for name, st in zip(ds.names, res.status.tolist()):
            if st:
                rows.append([label, name, _STATUS.get(st, str(st))])
        _emit(rows, a.failures)
    return 0


def cmd_compare(a) -> int:
    ds = _load(a.dataset)
    dname = Path(a.dataset).name
    baselines = a.baseline
    if baselines is None and not a.rule:
        baselines = list(BASELINES)
    rows = [REPORT_HEADER]
    for name in baselines or ():
        rows.append(_report_row(name.upper(), _baseline_rule(name, a.scheme), dname, ds, a.workers, not a.no_timing)[0])
    for path in a.rule or ():
        rule = _rule_from_file(path, a.scheme, a.pair_cap)
        rows.append(_report_row(Path(path).stem, rule, dname, ds, a.workers, not a.no_timing)[0])
    if a.published:
        for name, (rel, secs) in PUBLISHED[a.published].items():
            rows.append([name, "", f"published:{a.published}", rel, secs, "", ""])
    _emit(rows, a.out)
    return 0


# --------------------------------------------------------------------------
# evolve


def _config(a, seed: int) -> GpConfig:
    terminals = a.terminals
    if terminals and "," in terminals:
        terminals = [t.strip() for t in terminals.split(",") if t.strip()]
    try:
        return GpConfig(
            population_size=a.pop,
            max_depth=a.depth,
            mutation_probability=a.mutation_prob,
            max_evaluations=a.evals,
            scheme=a.scheme,
            objective=a.objective,
            terminals=terminals,
            crossover_operators=tuple(a.crossovers.split(",")) if a.crossovers else CROSSOVERS,
            mutation_operators=tuple(a.mutations.split(",")) if a.mutations else MUTATIONS,
            tournament_size=a.tournament,
            seed=seed,
            pfs=a.pfs,
            pair_cap=a.pair_cap,
            checkpoint=a.checkpoint,
            mode=a.mode,
            workers=a.workers,
            patience=a.patience,
        )
    except (ValueError, KeyError) as e:
        raise ConfigError(str(e)) from None


def _single_run(cfg: GpConfig, train: Dataset, validation: Optional[Dataset], out: Path, meta: dict):
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if cfg.mode == "nsga2":
        front = nsga2(cfg, train)
        front.sort(key=lambda i: (i.objectives, i.text))
        rows = [["index", "relocations", "craneSeconds", "rule"]]
        for k, ind in enumerate(front):
            name = f"front_{k:03d}.rule"
            write_rule_file(out / name, ind.trees, cfg.scheme)
            rows.append([k, _num(ind.objectives[0]), _num(ind.objectives[1]), name])
        _emit(rows, str(out / "front.csv"))
        best = min(front, key=lambda i: (i.fitness, i.text))
        evaluations = cfg.max_evaluations
        best_val = None
    else:
        res = evolve(cfg, train, validation)
        best, best_val, evaluations = res.best, res.best_validation, res.evaluations
        with open(out / "convergence.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(res.log_csv())
    write_rule_file(out / "best.rule", best.trees, cfg.scheme)
    if best_val is not None:
        write_rule_file(out / "best_validation.rule", best_val.trees, cfg.scheme)
    record = dict(meta)
    record.update(
        config=cfg.to_dict(),
        seed=cfg.seed,
        rng=RNG_ALGORITHM,
        backend=BACKEND,
        evaluations=evaluations,
        bestTrain=best.fitness,
        bestRule=best.text.split("\n"),
        wallSeconds=round(time.perf_counter() - t0, 3),
    )
    with open(out / "run.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(record) + "\n")
    return best, best_val


def cmd_evolve(a) -> int:
    if a.repeats is not None and a.repeats < 1:
        raise ConfigError("repeats must be >= 1")
    if a.base_seed is not None:
        repeats = DEFAULT_REPEATS if a.repeats is None else a.repeats
        seeds = [a.base_seed + i for i in range(repeats)]
    else:
        repeats = 1 if a.repeats is None else a.repeats
        seeds = [a.seed + i for i in range(repeats)]
    _config(a, seeds[0])  # validate before touching the disk
    train = _load(a.train)
    validation = _load(a.validation) if a.validation else None
    test = _load(a.test) if a.test else None
    meta = {"train": str(a.train), "validation": a.validation, "test": a.test}
    out = Path(a.out)
    if len(seeds) == 1:
        cfg = _config(a, seeds[0])
        best, best_val = _single_run(cfg, train, validation, out, meta)
        if test is not None:
            chosen = best_val or best
            row = _report_row("best", cfg.rule(chosen.trees), Path(a.test).name, test, a.workers, False)[0]
            _emit([REPORT_HEADER, row], str(out / "test.csv"))
        return 0
    rows = [["seed", "trainFitness", "relocations", "craneSeconds", "failures"]]
    for seed in seeds:
        cfg = _config(a, seed)
        best, best_val = _single_run(cfg, train, validation, out / f"seed_{seed}", meta)
        chosen = best_val or best
        res = evaluate(test if test is not None else train, cfg.rule(chosen.trees), workers=a.workers)
        rows.append([seed, _num(best.fitness), res.total_relocations(), _num(res.total_seconds()), res.failures])
    _emit(rows, str(out / "runs.csv"))
    summary = [["metric", "min", "median", "max"]]
    for col, key in ((2, "relocations"), (3, "craneSeconds")):
        s = summarize([float(r[col]) for r in rows[1:]])
        summary.append([key, _num(s["min"]), _num(s["median"]), _num(s["max"])])
    _emit(summary, str(out / "summary.csv"))
    return 0


# --------------------------------------------------------------------------
# stats


def _column(path, column: str) -> List[float]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise ConfigError(f"{path}: no column {column!r}")
        vals = []
        for row in reader:
            v = row[column]
            if v == "":
                continue
            try:
                vals.append(float(v))
            except ValueError:
                raise ConfigError(f"{path}: non-numeric value {v!r} in {column!r}") from None
    return vals


def cmd_stats(a) -> int:
    xa, xb = _column(a.a, a.column), _column(a.b, a.column)
    r = mann_whitney(xa, xb, exact_limit=a.exact_limit)
    rows = [["column", "nA", "nB", "U", "p", "method", "medianA", "medianB"],
            [a.column, r.n_a, r.n_b, _num(r.u), repr(r.p), r.method, _num(r.median_a), _num(r.median_b)]]
    _emit(rows, a.out)
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crpgp", description="Evolve and evaluate container relocation rules.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("generate", help="write a dataset directory")
    g.add_argument("--family", choices=["caserta", "zhu"], default="caserta")
    g.add_argument("--count", type=int, help="default 840 (caserta) or 1000 (zhu)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--grid", choices=["classic", "uniform"], default="classic",
                   help="caserta (h, S) classes: the 21 classic ones or all of 3..10 x 3..10")
    g.add_argument("--stacks", help="LO:HI stacks (caserta grid or zhu S)")
    g.add_argument("--heights", help="LO:HI initial heights (caserta)")
    g.add_argument("--containers", help="LO:HI containers (zhu)")
    g.add_argument("--max-height", type=int)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evolve", help="evolve relocation rules")
    e.add_argument("--train", required=True)
    e.add_argument("--validation")
    e.add_argument("--test", help="dataset used to score the selected rule")
    e.add_argument("--scheme", default="RE", type=str.upper, choices=SCHEMES)
    e.add_argument("--objective", default="relocations", choices=["relocations", "craneSeconds"])
    e.add_argument("--pfs", type=int, default=1)
    e.add_argument("--pop", type=int, default=1000)
    e.add_argument("--evals", type=int, default=50000)
    e.add_argument("--depth", type=int, default=5)
    e.add_argument("--mutation-prob", type=float)
    e.add_argument("--tournament", type=int, default=3)
    e.add_argument("--terminals", help="ALL, RE-R, UN-R or a comma list")
    e.add_argument("--crossovers", help="comma list of crossover operators")
    e.add_argument("--mutations", help="comma list of mutation operators")
    e.add_argument("--pair-cap", type=int)
    e.add_argument("--checkpoint", type=int, default=1000)
    e.add_argument("--mode", choices=["steady", "generational", "nsga2"], default="steady")
    e.add_argument("--patience", type=int)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--seed", type=int, default=1)
    e.add_argument("--repeats", type=int, help=f"runs with seeds seed+i (default 1, or {DEFAULT_REPEATS} with --base-seed)")
    e.add_argument("--base-seed", type=int)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evolve)

    v = sub.add_parser("evaluate", help="score one rule or baseline on a dataset")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--rule")
    src.add_argument("--baseline", type=str.upper, choices=list(BASELINES) + ["MM"])
    v.add_argument("--dataset", required=True)
    v.add_argument("--scheme", type=str.upper, choices=SCHEMES)
    v.add_argument("--pair-cap", type=int)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--out", help="CSV file to append to (default stdout)")
    v.add_argument("--failures", help="CSV file listing failed instances")
    v.add_argument("--no-timing", action="store_true", help="report wallSeconds as 0")
    v.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", help="score many rules and baselines on one dataset")
    c.add_argument("--dataset", required=True)
    c.add_argument("--rule", nargs="*")
    c.add_argument("--baseline", nargs="*", type=str.upper)
    c.add_argument("--published", choices=sorted(PUBLISHED))
    c.add_argument("--scheme", type=str.upper, choices=SCHEMES)
    c.add_argument("--pair-cap", type=int)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out")
    c.add_argument("--no-timing", action="store_true")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("stats", help="Mann-Whitney U test between two result files")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--column", default="relocations")
    s.add_argument("--exact-limit", type=int, default=400)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 2
    except CRPError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
