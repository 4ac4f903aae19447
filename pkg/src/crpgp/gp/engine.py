"""Single-objective GP: configuration, fitness and the steady-state loop."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError
from ..kernel import Dataset, evaluate
from ..rules import TERMINALS, ExprTree, print_rule, terminal_set
from ..schemes import UNRESTRICTED, RelocationRule
from ..yard import Yard
from .operators import CROSSOVERS, MUTATIONS, crossover_tree, mutate_tree, ramped_tree

PENALTY = 1e15
OBJECTIVES = ("relocations", "craneSeconds")


@dataclass
class GpConfig:
    population_size: int = 1000
    max_depth: int = 5
    # None: 0.3 for restricted schemes, 0.1 for unrestricted ones
    mutation_probability: Optional[float] = None
    max_evaluations: int = 50000
    scheme: str = "RE"
    objective: str = "relocations"
    terminals: Tuple[str, ...] = TERMINALS
    crossover_operators: Tuple[str, ...] = CROSSOVERS
    mutation_operators: Tuple[str, ...] = MUTATIONS
    tournament_size: int = 3
    seed: int = 0
    pfs: int = 1
    pair_cap: Optional[int] = None
    checkpoint: int = 1000
    mode: str = "steady"
    workers: int = 1
    # stop after this many checkpoints without a validation improvement
    patience: Optional[int] = None

    def __post_init__(self):
        self.scheme = self.scheme.upper()
        self.terminals = terminal_set(self.terminals)
        self.crossover_operators = tuple(self.crossover_operators)
        self.mutation_operators = tuple(self.mutation_operators)
        if self.mutation_probability is None:
            self.mutation_probability = 0.1 if self.scheme in UNRESTRICTED else 0.3
        self.validate()

    def validate(self):
        if not self.population_size >= self.tournament_size >= 2:
            raise ConfigError("need population_size >= tournament_size >= 2")
        if self.max_evaluations < self.population_size:
            raise ConfigError("max_evaluations must be at least population_size")
        if not 0.0 <= self.mutation_probability <= 1.0:
            raise ConfigError("mutation_probability must lie in [0, 1]")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}")
        if self.pfs not in (1, 2):
            raise ConfigError("pfs must be 1 or 2")
        if self.scheme in ("UNT", "UNP") and self.pfs != 2:
            raise ConfigError(f"{self.scheme} needs two expressions (pfs=2)")
        if self.checkpoint < 1:
            raise ConfigError("checkpoint must be >= 1")
        if self.mode not in ("steady", "generational", "nsga2"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        bad = [c for c in self.crossover_operators if c not in CROSSOVERS] + \
              [m for m in self.mutation_operators if m not in MUTATIONS]
        if bad or not self.crossover_operators or not self.mutation_operators:
            raise ConfigError(f"unknown or empty operator list {bad}")
        # builds and validates the rule shape
        RelocationRule(self.scheme, (ExprTree("SH"),) * self.pfs, self.pair_cap)

    def to_dict(self):
        d = asdict(self)
        for k in ("terminals", "crossover_operators", "mutation_operators"):
            d[k] = list(d[k])
        return d

    def rule(self, trees: Sequence[ExprTree]) -> RelocationRule:
        return RelocationRule(self.scheme, tuple(trees), self.pair_cap)

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(self.seed))))


@dataclass
class Individual:
    trees: Tuple[ExprTree, ...]
    fitness: float = math.inf
    objectives: Tuple[float, float] = (math.inf, math.inf)
    evaluated: bool = False

    @property
    def text(self) -> str:
        return "\n".join(print_rule(t) for t in self.trees)

    @property
    def depth(self) -> int:
        return max(t.depth for t in self.trees)


class Evaluator:
    """Sums a rule's objective over a training set; counts every call."""

    def __init__(self, instances, config: GpConfig):
        if isinstance(instances, Dataset):
            self.dataset = instances
        else:
            self.dataset = Dataset(list(instances))
        if len(self.dataset) == 0:
            raise ConfigError("training set is empty")
        self.config = config
        self.calls = 0

    def objectives(self, trees: Sequence[ExprTree]) -> Tuple[float, float]:
        self.calls += 1
        res = evaluate(self.dataset, self.config.rule(trees), workers=self.config.workers)
        if res.failures:
            return PENALTY, PENALTY
        return float(res.total_relocations()), res.total_seconds()

    def __call__(self, ind: Individual) -> Individual:
        obj = self.objectives(ind.trees)
        ind.objectives = obj
        ind.fitness = obj[0] if self.config.objective == "relocations" else obj[1]
        ind.evaluated = True
        return ind


def fitness(individual: Individual, train_set, config: GpConfig) -> float:
    return Evaluator(train_set, config)(individual).fitness


def init_population(config: GpConfig, rng=None) -> List[Individual]:
    """Ramped half-and-half over depths 2..max_depth."""
    rng = config.rng() if rng is None else rng
    lo = min(2, config.max_depth)
    depths = list(range(lo, config.max_depth + 1))
    pop = []
    for i in range(config.population_size):
        d = depths[i % len(depths)]
        use_full = (i // len(depths)) % 2 == 0
        trees = tuple(ramped_tree(rng, d, use_full, config.terminals) for _ in range(config.pfs))
        pop.append(Individual(trees))
    return pop


def make_child(p1: Individual, p2: Individual, config: GpConfig, rng) -> Individual:
    variant = config.crossover_operators[int(rng.integers(len(config.crossover_operators)))]
    fitter = p1 if p1.fitness <= p2.fitness else p2
    trees = []
    for i in range(config.pfs):
        t = crossover_tree(p1.trees[i], p2.trees[i], variant, rng, config.max_depth, fitter.trees[i])
        if rng.random() < config.mutation_probability:
            m = config.mutation_operators[int(rng.integers(len(config.mutation_operators)))]
            t = mutate_tree(t, m, rng, config.max_depth, config.terminals)
        trees.append(t)
    return Individual(tuple(trees))


@dataclass
class EvolutionResult:
    best: Individual
    best_validation: Optional[Individual]
    log: List[Tuple[int, float, Optional[float]]] = field(default_factory=list)
    evaluations: int = 0
    population: List[Individual] = field(default_factory=list)

    def log_csv(self) -> str:
        lines = ["evaluations,bestTrain,validation"]
        for ev, tr, va in self.log:
            lines.append(f"{ev},{_num(tr)},{'' if va is None else _num(va)}")
        return "\n".join(lines) + "\n"


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() and abs(x) < 1e15 else repr(float(x))


class _Tracker:
    """Checkpoint bookkeeping and validation-based model selection."""

    def __init__(self, config: GpConfig, validation: Optional[Evaluator]):
        self.config = config
        self.validation = validation
        self.log = []
        self.best_val: Optional[Individual] = None
        self.best_val_score = math.inf
        self._cache = {}
        self.stale = 0

    def checkpoint(self, evals: int, best: Individual):
        va = None
        if self.validation is not None:
            key = best.text
            if key not in self._cache:
                probe = Individual(best.trees)
                self.validation(probe)
                self._cache[key] = probe.fitness
            va = self._cache[key]
            if va < self.best_val_score:
                self.best_val_score = va
                self.best_val = best
                self.stale = 0
            else:
                self.stale += 1
        self.log.append((evals, best.fitness, va))

    @property
    def should_stop(self) -> bool:
        return self.config.patience is not None and self.validation is not None and self.stale >= self.config.patience


def _as_evaluator(data, config) -> Optional[Evaluator]:
    if data is None:
        return None
    if isinstance(data, Evaluator):
        return data
    return Evaluator(data, config)


def evolve(config: GpConfig, train_set, validation_set=None) -> EvolutionResult:
    """Steady-state GP (or generational with ``config.mode``).

    Each step draws ``tournament_size`` distinct individuals; the worst is
    replaced by a child of the two best. Exactly ``max_evaluations`` fitness
    calls are made, the initial population included.
    """
    if config.mode == "nsga2":
        raise ConfigError("use gp.nsga2 for bi-objective runs")
    if config.mode == "generational":
        return _evolve_generational(config, train_set, validation_set)
    rng = config.rng()
    ev = _as_evaluator(train_set, config)
    tracker = _Tracker(config, _as_evaluator(validation_set, config))
    pop = [ev(ind) for ind in init_population(config, rng)]
    evals = len(pop)
    best = min(pop, key=lambda i: i.fitness)
    tracker.checkpoint(evals, best)
    while evals < config.max_evaluations and not tracker.should_stop:
        draw = rng.choice(config.population_size, size=config.tournament_size, replace=False).tolist()
        draw.sort(key=lambda j: pop[j].fitness)
        child = ev(make_child(pop[draw[0]], pop[draw[1]], config, rng))
        evals += 1
        pop[draw[-1]] = child
        if child.fitness < best.fitness:
            best = child
        if evals % config.checkpoint == 0 or evals == config.max_evaluations:
            tracker.checkpoint(evals, best)
    return EvolutionResult(best, tracker.best_val, tracker.log, evals, pop)


def _tournament(pop: List[Individual], k: int, rng) -> Individual:
    draw = rng.choice(len(pop), size=k, replace=False).tolist()
    return min((pop[j] for j in draw), key=lambda i: i.fitness)


def _evolve_generational(config: GpConfig, train_set, validation_set=None) -> EvolutionResult:
    rng = config.rng()
    ev = _as_evaluator(train_set, config)
    tracker = _Tracker(config, _as_evaluator(validation_set, config))
    pop = [ev(ind) for ind in init_population(config, rng)]
    evals = len(pop)
    best = min(pop, key=lambda i: i.fitness)
    tracker.checkpoint(evals, best)
    next_mark = (evals // config.checkpoint + 1) * config.checkpoint
    while evals < config.max_evaluations and not tracker.should_stop:
        nxt = [best]  # elitism
        while len(nxt) < config.population_size and evals < config.max_evaluations:
            p1 = _tournament(pop, config.tournament_size, rng)
            p2 = _tournament(pop, config.tournament_size, rng)
            child = ev(make_child(p1, p2, config, rng))
            evals += 1
            if child.fitness < best.fitness:
                best = child
            nxt.append(child)
            if evals >= next_mark or evals == config.max_evaluations:
                tracker.checkpoint(evals, best)
                next_mark += config.checkpoint
        pop = nxt + pop[len(nxt):]
    return EvolutionResult(best, tracker.best_val, tracker.log, evals, pop)


def with_seed(config: GpConfig, seed: int) -> GpConfig:
    return replace(config, seed=seed)
