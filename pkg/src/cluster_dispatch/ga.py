"""Real-coded genetic algorithm with repair decoding.

The engine is problem-agnostic: a problem supplies box bounds, a
``decode`` that maps raw genomes onto feasible ones (the repaired genomes
replace the raw ones in the population), and a vectorised ``fitness`` to
be minimised. All random draws have fixed shapes, so a given seed always
consumes the same stream and yields the same result.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class GAParams:
    population: int = 100
    generations: int = 300
    crossover_prob: float = 0.9
    mutation_prob: float = 0.05
    mutation_scale: float = 0.1  # fraction of each gene's box width
    tournament: int = 3
    elitism: int = 1
    seed: int = 0
    penalty_weight: float | None = None  # per kWh of violation; None -> 10 * buy price

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        for name in ("crossover_prob", "mutation_prob"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.mutation_scale < 0 or self.tournament < 1:
            raise ValueError("mutation_scale must be >= 0 and tournament >= 1")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be in [0, population)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GAParams":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown GA parameter(s): {sorted(unknown)}")
        return cls(**data)


@dataclass
class GAResult:
    genome: np.ndarray
    fitness: float
    history: np.ndarray  # best fitness after each generation


def _unique_rows(rows: np.ndarray) -> np.ndarray:
    keep = []
    for row in rows:
        if not any(np.array_equal(row, k) for k in keep):
            keep.append(row)
    return np.array(keep).reshape(-1, rows.shape[1])


def _tournament(fit: np.ndarray, size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    entrants = rng.integers(0, fit.size, size=(count, size))
    winner = np.argmin(fit[entrants], axis=1)
    return entrants[np.arange(count), winner]


def evolve(lower, upper, decode, fitness, params: GAParams, rng: np.random.Generator,
           seeds=None) -> GAResult:
    """Minimise ``fitness`` over the box ``[lower, upper]``."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    P, G = params.population, lower.size
    width = upper - lower
    sigma = params.mutation_scale * width

    pop = lower + rng.random((P, G)) * width
    if seeds is not None and len(seeds):
        seeds = _unique_rows(np.clip(np.asarray(seeds, dtype=float).reshape(-1, G), lower, upper))
        n = min(len(seeds), P)
        pop[:n] = seeds[:n]
    pop = decode(pop)
    fit = fitness(pop)

    history = np.empty(params.generations)
    n_children = P - params.elitism
    for gen in range(params.generations):
        order = np.argsort(fit, kind="stable")
        elite = pop[order[:params.elitism]]
        elite_fit = fit[order[:params.elitism]]

        a = pop[_tournament(fit, params.tournament, n_children, rng)]
        b = pop[_tournament(fit, params.tournament, n_children, rng)]
        mask = rng.random((n_children, G)) < 0.5
        do_cross = rng.random(n_children) < params.crossover_prob
        children = np.where(mask & do_cross[:, None], b, a)

        mutate = rng.random((n_children, G)) < params.mutation_prob
        noise = rng.standard_normal((n_children, G)) * sigma
        children = np.clip(np.where(mutate, children + noise, children), lower, upper)

        children = decode(children)
        pop = np.vstack([elite, children])
        fit = np.concatenate([elite_fit, fitness(children)])
        history[gen] = fit.min()

    best = int(np.argmin(fit))
    return GAResult(pop[best].copy(), float(fit[best]), history)
