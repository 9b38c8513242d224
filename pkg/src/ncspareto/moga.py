"""NSGA-II engine with a stability-certification gate for gain synthesis.

The engine itself is problem-agnostic: it needs only an evaluation
callback mapping (genes, generation) to an ObjectiveVector.  ``evolve``
wires in the networked-control problem: each genome is a flattened gain
schedule, gated through the Lyapunov LMI certifier (with a Schur
pre-check and a per-run verdict cache) and scored by seeded Monte-Carlo
simulation with common random numbers per generation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .objectives import EvalConfig, ObjectiveVector, evaluate
from .plant import DiscretePlant
from .stability import (
    DEFAULT_BUDGET,
    DEFAULT_MARGIN,
    GainSchedule,
    build_switched,
    certify,
    schur_precheck,
)

SBX_ETA = 15.0
MUTATION_ETA = 20.0


@dataclass
class Individual:
    genes: np.ndarray
    objectives: ObjectiveVector | None = None
    rank: int | None = None
    crowding: float | None = None


@dataclass(frozen=True)
class OptimizerConfig:
    population: int = 90
    generations: int = 200
    crossover_fraction: float = 0.8
    mutation_fraction: float = 0.2
    pareto_fraction: float = 0.35
    gene_bounds: tuple = (-5.0, 5.0)
    master_seed: int = 0

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ConfigError("population must be even and >= 4")
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")
        for name in ("crossover_fraction", "mutation_fraction", "pareto_fraction"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1]")
        lo, hi = self.gene_bounds
        if not (lo < hi):
            raise ConfigError("gene_bounds must satisfy low < high")


@dataclass
class ParetoArchive:
    members: list  # mutually non-dominated Individuals
    generation: int = 0


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """Standard Pareto dominance for minimization: <= everywhere, < somewhere."""
    av, bv = a.values, b.values
    if len(av) != len(bv):
        raise ConfigError("objective vectors must have equal arity")
    return all(x <= y for x, y in zip(av, bv)) and any(x < y for x, y in zip(av, bv))


def fast_non_dominated_sort(pop: list) -> list:
    """Partition a population into successive non-dominated fronts.

    Assigns 1-based ranks on the individuals and returns the fronts in order.
    """
    n_dom = [0] * len(pop)
    dominated_by = [[] for _ in pop]
    fronts = [[]]
    for i, p in enumerate(pop):
        for j in range(i + 1, len(pop)):
            q = pop[j]
            if dominates(p.objectives, q.objectives):
                dominated_by[i].append(j)
                n_dom[j] += 1
            elif dominates(q.objectives, p.objectives):
                dominated_by[j].append(i)
                n_dom[i] += 1
    for i, p in enumerate(pop):
        if n_dom[i] == 0:
            p.rank = 1
            fronts[0].append(i)
    while fronts[-1]:
        nxt = []
        for i in fronts[-1]:
            for j in dominated_by[i]:
                n_dom[j] -= 1
                if n_dom[j] == 0:
                    pop[j].rank = len(fronts) + 1
                    nxt.append(j)
        fronts.append(nxt)
    return [[pop[i] for i in fr] for fr in fronts[:-1]]


def crowding_distance(front: list) -> None:
    """Assign the normalized neighbour-gap density measure within one front."""
    if not front:
        raise ConfigError("front must be non-empty")
    for ind in front:
        ind.crowding = 0.0
    if len(front) <= 2:
        for ind in front:
            ind.crowding = math.inf
        return
    n_obj = len(front[0].objectives.values)
    for m in range(n_obj):
        order = sorted(front, key=lambda ind: ind.objectives.values[m])
        order[0].crowding = math.inf
        order[-1].crowding = math.inf
        span = order[-1].objectives.values[m] - order[0].objectives.values[m]
        if span <= 0:
            continue
        for a, mid, b in zip(order, order[1:], order[2:]):
            if mid.crowding != math.inf:
                mid.crowding += (b.objectives.values[m] - a.objectives.values[m]) / span


def tournament_select(pop: list, rng: np.random.Generator) -> Individual:
    """Binary tournament: lower rank wins, then higher crowding, then a coin."""
    i, j = rng.integers(len(pop), size=2)
    a, b = pop[i], pop[j]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a if rng.random() < 0.5 else b


def _sbx_pair(g1, g2, lo, hi, rng):
    c1, c2 = g1.copy(), g2.copy()
    for idx in range(g1.size):
        u = rng.random()
        beta = (2 * u) ** (1 / (SBX_ETA + 1)) if u <= 0.5 else (
            1.0 / (2 * (1 - u))
        ) ** (1 / (SBX_ETA + 1))
        c1[idx] = 0.5 * ((1 + beta) * g1[idx] + (1 - beta) * g2[idx])
        c2[idx] = 0.5 * ((1 - beta) * g1[idx] + (1 + beta) * g2[idx])
    return np.clip(c1, lo, hi), np.clip(c2, lo, hi)


def _polynomial_mutate_gene(child, lo, hi, rng):
    idx = int(rng.integers(child.size))
    u = rng.random()
    if u < 0.5:
        delta = (2 * u) ** (1 / (MUTATION_ETA + 1)) - 1
    else:
        delta = 1 - (2 * (1 - u)) ** (1 / (MUTATION_ETA + 1))
    child[idx] = np.clip(child[idx] + delta * (hi - lo), lo, hi)


def vary(parents, cfg: OptimizerConfig, rng: np.random.Generator):
    """Simulated binary crossover plus single-gene polynomial mutation.

    The crossover gate is per pair; the mutation gate is per child, mutating
    one uniformly chosen gene.  Children are clamped to the gene bounds.
    """
    g1, g2 = parents[0].genes, parents[1].genes
    lo, hi = cfg.gene_bounds
    if rng.random() < cfg.crossover_fraction:
        c1, c2 = _sbx_pair(g1, g2, lo, hi, rng)
    else:
        c1, c2 = g1.copy(), g2.copy()
    for c in (c1, c2):
        if rng.random() < cfg.mutation_fraction:
            _polynomial_mutate_gene(c, lo, hi, rng)
    return Individual(c1), Individual(c2)


def _rank_population(pop: list) -> list:
    fronts = fast_non_dominated_sort(pop)
    for fr in fronts:
        crowding_distance(fr)
    return fronts


def _environmental_select(merged: list, N: int) -> list:
    fronts = _rank_population(merged)
    nxt = []
    for fr in fronts:
        if len(nxt) + len(fr) <= N:
            nxt.extend(fr)
        else:
            fr = sorted(fr, key=lambda ind: -ind.crowding)
            nxt.extend(fr[: N - len(nxt)])
            break
    return nxt


def run_nsga2(evaluate_fn, genome_len: int, cfg: OptimizerConfig) -> ParetoArchive:
    """Generic elitist NSGA-II loop; deterministic given cfg.master_seed.

    ``evaluate_fn(genes, generation)`` scores a genome once, at its birth
    generation; stored objectives are carried thereafter so the merged
    parent-child selection is exactly elitist.
    """
    rng = np.random.default_rng(cfg.master_seed)
    lo, hi = cfg.gene_bounds
    pop = [
        Individual(rng.uniform(lo, hi, genome_len)) for _ in range(cfg.population)
    ]
    for ind in pop:
        ind.objectives = evaluate_fn(ind.genes, 0)
    _rank_population(pop)
    for gen in range(1, cfg.generations + 1):
        children = []
        while len(children) < cfg.population:
            p1 = tournament_select(pop, rng)
            p2 = tournament_select(pop, rng)
            children.extend(vary((p1, p2), cfg, rng))
        children = children[: cfg.population]
        for ind in children:
            ind.objectives = evaluate_fn(ind.genes, gen)
        pop = _environmental_select(pop + children, cfg.population)
    front = [ind for ind in pop if ind.rank == 1]
    cap = max(1, math.ceil(cfg.pareto_fraction * cfg.population))
    if len(front) > cap:
        crowding_distance(front)
        front = sorted(front, key=lambda ind: -ind.crowding)[:cap]
    return ParetoArchive(front, cfg.generations)


def mc_seeds(master_seed: int, generation: int, mc_runs: int) -> list:
    """Common random numbers: one shared seed set per optimizer generation."""
    ss = np.random.SeedSequence((int(master_seed), 7, int(generation)))
    return [int(s) for s in ss.generate_state(mc_runs, dtype=np.uint64)]


def make_gain_evaluator(
    plant: DiscretePlant,
    pair: str,
    eval_cfg: EvalConfig,
    opt_cfg: OptimizerConfig,
    M_drop: int,
    cert_margin: float = DEFAULT_MARGIN,
    cert_budget: int = DEFAULT_BUDGET,
):
    """Evaluation callback for gain genomes: certification gate + Monte Carlo."""
    cache: dict[bytes, bool] = {}

    def evaluate_fn(genes: np.ndarray, generation: int) -> ObjectiveVector:
        gains = GainSchedule.from_flat(genes, M_drop, plant.n, plant.m)
        key = genes.tobytes()
        feasible = cache.get(key)
        if feasible is None:
            scl = build_switched(plant, gains)
            feasible = schur_precheck(scl) and (
                certify(scl, eps=cert_margin, budget=cert_budget) is not None
            )
            cache[key] = feasible
        seeds = mc_seeds(opt_cfg.master_seed, generation, eval_cfg.mc_runs)
        return evaluate(gains, plant, pair, eval_cfg, feasible, seeds)

    return evaluate_fn


def evolve(
    plant: DiscretePlant,
    pair: str,
    eval_cfg: EvalConfig,
    opt_cfg: OptimizerConfig,
    M_drop: int = 3,
    cert_margin: float = DEFAULT_MARGIN,
    cert_budget: int = DEFAULT_BUDGET,
) -> ParetoArchive:
    """Synthesize a Pareto front of certified gain schedules for one plant."""
    evaluate_fn = make_gain_evaluator(
        plant, pair, eval_cfg, opt_cfg, M_drop, cert_margin, cert_budget
    )
    return run_nsga2(evaluate_fn, M_drop * plant.m * plant.n, opt_cfg)
