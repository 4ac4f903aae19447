"""Container relocation rules: simulation, evaluation and genetic programming."""
