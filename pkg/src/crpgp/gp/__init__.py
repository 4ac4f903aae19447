"""Genetic programming of priority functions."""

from .engine import (
    PENALTY,
    EvolutionResult,
    Evaluator,
    GpConfig,
    Individual,
    evolve,
    fitness,
    init_population,
    make_child,
)
from .nsga2 import crowding_distance, dominates, non_dominated_sort, nsga2
from .operators import CROSSOVERS, MUTATIONS, crossover_tree, mutate_tree

__all__ = [
    "PENALTY", "EvolutionResult", "Evaluator", "GpConfig", "Individual", "evolve", "fitness",
    "init_population", "make_child", "crowding_distance", "dominates", "non_dominated_sort", "nsga2",
    "CROSSOVERS", "MUTATIONS", "crossover_tree", "mutate_tree",
]
