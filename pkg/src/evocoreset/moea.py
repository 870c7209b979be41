"""NSGA-II over variable-length sets of training-sample indices.

A genome is a sorted tuple of distinct indices into the training partition.
Its fitness is the pair ``(size, error)``, both minimized.
"""

import math
import sys
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np


class FitnessPair(NamedTuple):
    size: int
    error: float


@dataclass(frozen=True)
class EAParams:
    k: int
    mu: int
    lambda_: int
    generations: int
    min_size: int
    max_size: int
    seed: int = 0

    def __post_init__(self):
        if self.lambda_ != 2 * self.mu:
            raise ValueError(f"lambda must equal 2*mu, got {self.lambda_} for mu={self.mu}")
        if self.mu < 100 or self.generations < 100:
            raise ValueError("mu and generations must both be at least 100")
        if not 1 <= self.min_size <= self.max_size:
            raise ValueError(f"need 1 <= min_size <= max_size, got {self.min_size}, {self.max_size}")


LOG10_2 = math.log10(2)


def derive_params(train_size, class_count, seed=0):
    """EA settings derived from the training-set size alone.

    With ``k = floor(N/10)``: ``mu = floor(max(100, k log10 2))``,
    ``lambda = 2 mu`` and ``generations = floor(max(100, 0.5 k log10 2))``.
    Coreset sizes are bounded by ``[class_count, ceil(N/10)]``.
    """
    k = train_size // 10
    mu = math.floor(max(100, k * LOG10_2))
    generations = math.floor(max(100, 0.5 * k * LOG10_2))
    upper = -(-train_size // 10)
    if upper < class_count:
        warnings.warn(
            f"training set of {train_size} samples is small for {class_count} classes; "
            f"raising the maximum coreset size to {class_count}",
            stacklevel=2,
        )
    return EAParams(
        k=k,
        mu=mu,
        lambda_=2 * mu,
        generations=generations,
        min_size=class_count,
        max_size=max(class_count, upper),
        seed=seed,
    )


def canonical(indices):
    """Sorted, duplicate-free tuple of ints."""
    return tuple(sorted({int(i) for i in indices}))


def dominates(a, b):
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


def _as_points(points):
    P = np.asarray(points, dtype=np.float64)
    return P.reshape(-1, 2)


def non_dominated_sort(points):
    """Partition points into successive non-dominated fronts.

    Returns a list of fronts, each a list of indices into ``points`` in
    ascending order. Front 0 holds every point no other point dominates.
    """
    P = _as_points(points)
    if P.shape[0] == 0:
        raise ValueError("cannot sort an empty set of points")
    le = np.all(P[:, None, :] <= P[None, :, :], axis=2)
    lt = np.any(P[:, None, :] < P[None, :, :], axis=2)
    dom = le & lt
    remaining = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(remaining == 0)
    while current.size:
        fronts.append(current.tolist())
        remaining -= dom[current].sum(axis=0)
        remaining[current] = -1
        current = np.flatnonzero(remaining == 0)
    return fronts


def crowding_distance(points):
    """NSGA-II crowding distance of each point in a front.

    Computed on the distinct points of the front: extremes of either
    objective get ``inf``, interior points the sum over objectives of the
    normalized gap between their neighbours. Objectives with zero range
    contribute nothing. Interior points that occur more than once get 0,
    since they add no spread.
    """
    P = _as_points(points)
    if P.shape[0] == 0:
        raise ValueError("cannot compute crowding of an empty front")
    uniq, inverse, counts = np.unique(P, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    m = uniq.shape[0]
    if m <= 2:
        return np.full(P.shape[0], np.inf)
    ud = np.zeros(m)
    for j in range(P.shape[1]):
        order = np.argsort(uniq[:, j], kind="stable")
        vals = uniq[order, j]
        ud[order[0]] = ud[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if span > 0:
            ud[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    dist = ud[inverse]
    dist[(counts[inverse] > 1) & np.isfinite(dist)] = 0.0
    return dist


def _repeat_mask(P):
    """True for every occurrence of a point after its first."""
    seen = set()
    mask = np.zeros(P.shape[0], dtype=bool)
    for i, row in enumerate(map(tuple, P)):
        mask[i] = row in seen
        seen.add(row)
    return mask


def rank_and_crowding(points):
    """Front index and crowding distance for every point."""
    P = _as_points(points)
    rank = np.empty(P.shape[0], dtype=np.int64)
    crowd = np.empty(P.shape[0])
    for r, front in enumerate(non_dominated_sort(P)):
        rank[front] = r
        crowd[front] = crowding_distance(P[front])
    return rank, crowd


def select_survivors(points, mu):
    """Indices of the ``mu`` best points by front, then crowding.

    Whole fronts are admitted while they fit. The front that overflows is
    truncated by descending crowding, with repeated copies of a point
    ranked after every distinct point so that no distinct point of the
    front is lost while a duplicate survives.
    """
    P = _as_points(points)
    chosen = []
    for front in non_dominated_sort(P):
        if len(chosen) + len(front) <= mu:
            chosen.extend(front)
            if len(chosen) == mu:
                break
            continue
        sub = P[front]
        cd = crowding_distance(sub)
        order = np.lexsort((np.arange(len(front)), -cd, _repeat_mask(sub)))
        chosen.extend(front[o] for o in order[: mu - len(chosen)])
        break
    return chosen


def hypervolume(points, reference):
    """Area dominated by ``points`` and bounded by ``reference`` (2 objectives)."""
    P = _as_points(points)
    ref = np.asarray(reference, dtype=np.float64)
    P = P[np.all(P < ref, axis=1)]
    if P.shape[0] == 0:
        return 0.0
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    area = 0.0
    ceiling = ref[1]
    for x, y in P:
        if y < ceiling:
            area += (ref[0] - x) * (ceiling - y)
            ceiling = y
    return float(area)


def crossover(a, b, rng):
    """Two children sharing the parents' common indices.

    Every index found in exactly one parent goes to one child or the
    other with equal probability.
    """
    a, b = set(a), set(b)
    common = a & b
    rest = sorted(a ^ b)
    to_first = rng.random(len(rest)) < 0.5
    first = [i for i, f in zip(rest, to_first) if f]
    second = [i for i, f in zip(rest, to_first) if not f]
    return tuple(sorted(common.union(first))), tuple(sorted(common.union(second)))


def mutate(genome, universe_size, rng, min_size=1):
    """Add or remove one index, each with probability 1/2.

    Adding is a no-op when the genome already holds the whole universe,
    removing is a no-op at ``min_size``.
    """
    genome = tuple(genome)
    if rng.random() < 0.5:
        if len(genome) >= universe_size:
            return genome
        members = set(genome)
        if len(genome) * 2 < universe_size:
            while True:
                candidate = int(rng.integers(universe_size))
                if candidate not in members:
                    break
        else:
            outside = np.setdiff1d(np.arange(universe_size), genome)
            candidate = int(outside[rng.integers(outside.size)])
        return tuple(sorted(genome + (candidate,)))
    if len(genome) <= min_size:
        return genome
    drop = int(rng.integers(len(genome)))
    return genome[:drop] + genome[drop + 1:]


class GenomeSpace:
    """Feasible coresets for one training partition.

    A feasible genome has between ``min_size`` and ``max_size`` distinct
    indices and at least one sample of every class in ``labels``.
    """

    def __init__(self, labels, min_size, max_size):
        labels = np.asarray(labels)
        self.classes, self._cls = np.unique(labels, return_inverse=True)
        self._cls = self._cls.reshape(-1)
        self.universe_size = labels.shape[0]
        self.members = [np.flatnonzero(self._cls == c) for c in range(self.classes.size)]
        if max_size < self.classes.size:
            raise ValueError(
                f"max_size {max_size} cannot cover {self.classes.size} classes"
            )
        self.min_size = min_size
        self.max_size = min(max_size, self.universe_size)

    def is_feasible(self, genome):
        g = np.asarray(genome, dtype=np.int64)
        return (
            g.size == np.unique(g).size
            and np.all(np.diff(g) > 0)
            and self.min_size <= g.size <= self.max_size
            and np.unique(self._cls[g]).size == self.classes.size
        )

    def repair(self, genome, rng):
        """Project an arbitrary index set onto the feasible set.

        In order: add one random sample of each missing class, drop random
        members (never a class's last one) down to ``max_size``, then add
        random non-members up to ``min_size``.
        """
        g = np.asarray(genome, dtype=np.int64)
        if (self.min_size <= g.size <= self.max_size and np.all(g[1:] > g[:-1])
                and g[0] >= 0 and g[-1] < self.universe_size
                and np.count_nonzero(np.bincount(self._cls[g])) == self.classes.size):
            return tuple(genome)
        g = np.unique(g)
        if g.size and (g[0] < 0 or g[-1] >= self.universe_size):
            raise ValueError(f"genome indices must lie in [0, {self.universe_size})")
        present = np.bincount(self._cls[g], minlength=self.classes.size)
        missing = np.flatnonzero(present == 0)
        if missing.size:
            added = [self.members[c][rng.integers(self.members[c].size)] for c in missing]
            g = np.union1d(g, added)
            present[missing] = 1
        if g.size > self.max_size:
            keep = np.ones(g.size, dtype=bool)
            excess = g.size - self.max_size
            for pos in rng.permutation(g.size):
                if excess == 0:
                    break
                c = self._cls[g[pos]]
                if present[c] > 1:
                    keep[pos] = False
                    present[c] -= 1
                    excess -= 1
            g = g[keep]
        if g.size < self.min_size:
            outside = np.setdiff1d(np.arange(self.universe_size), g)
            g = np.union1d(g, rng.choice(outside, self.min_size - g.size, replace=False))
        return tuple(int(i) for i in g)

    def random_genome(self, rng):
        size = int(rng.integers(self.min_size, self.max_size + 1))
        return self.repair(rng.choice(self.universe_size, size, replace=False), rng)


def repair(genome, labels, params, rng):
    return GenomeSpace(labels, params.min_size, params.max_size).repair(genome, rng)


def init_population(params, labels, rng):
    """``mu`` feasible genomes with sizes uniform in ``[min_size, max_size]``."""
    space = GenomeSpace(labels, params.min_size, params.max_size)
    return [space.random_genome(rng) for _ in range(params.mu)]


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    front_size: int
    best_error: float
    min_size: int
    hypervolume: float

    def line(self):
        return (f"gen {self.generation:5d}  front {self.front_size:4d}  "
                f"best_error {self.best_error:.6f}  min_size {self.min_size}  "
                f"hv {self.hypervolume:.6g}")


@dataclass
class ParetoArchive:
    """Mutually non-dominated genomes left at the end of a run."""

    entries: list
    seed: int = 0
    params: EAParams = None
    generations: int = 0
    history: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def genomes(self):
        return [g for g, _ in self.entries]

    @property
    def fitnesses(self):
        return [f for _, f in self.entries]


def _front_stats(generation, fitness, params):
    P = _as_points(fitness)
    front = P[non_dominated_sort(P)[0]]
    ref = (params.max_size + 1, 1.0 + 1e-9)
    return GenerationStats(
        generation=generation,
        front_size=len(front),
        best_error=float(front[:, 1].min()),
        min_size=int(front[:, 0].min()),
        hypervolume=hypervolume(front, ref),
    )


def _tournament(rank, crowd, rng):
    i, j = rng.choice(rank.size, 2, replace=False)
    if rank[i] != rank[j]:
        return i if rank[i] < rank[j] else j
    if crowd[i] != crowd[j]:
        return i if crowd[i] > crowd[j] else j
    return i if rng.random() < 0.5 else j


def evolve(evaluator: Callable, params: EAParams, labels, rng, *, map_fn=map,
           callback=None, verbose=False):
    """Run NSGA-II and return the final non-dominated set.

    Parameters
    ----------
    evaluator : callable
        Maps a genome to a :class:`FitnessPair`. Must be deterministic.
    params : EAParams
    labels : array-like
        Class labels of the training partition (defines the universe).
    rng : numpy.random.Generator
        Sole source of randomness. Every draw of a generation happens
        before its offspring are evaluated, so ``map_fn`` may evaluate in
        parallel without changing the result.
    map_fn : callable, default=map
        ``map``-like function used to evaluate batches of genomes.
    callback : callable, optional
        Called with each :class:`GenerationStats`, generation 0 included.
    verbose : bool
        Print one progress line per generation to stderr.
    """
    space = GenomeSpace(labels, params.min_size, params.max_size)
    universe = space.universe_size
    population = [space.random_genome(rng) for _ in range(params.mu)]
    fitness = [FitnessPair(*f) for f in map_fn(evaluator, population)]
    history = []

    def record(generation):
        stats = _front_stats(generation, fitness, params)
        history.append(stats)
        if callback is not None:
            callback(stats)
        if verbose:
            print(stats.line(), file=sys.stderr)

    record(0)
    for generation in range(1, params.generations + 1):
        rank, crowd = rank_and_crowding(fitness)
        offspring = []
        while len(offspring) < params.lambda_:
            a = population[_tournament(rank, crowd, rng)]
            b = population[_tournament(rank, crowd, rng)]
            for child in crossover(a, b, rng):
                child = mutate(child, universe, rng, params.min_size)
                offspring.append(space.repair(child, rng))
        offspring = offspring[: params.lambda_]
        offspring_fitness = [FitnessPair(*f) for f in map_fn(evaluator, offspring)]

        pool = population + offspring
        pool_fitness = fitness + offspring_fitness
        keep = select_survivors(pool_fitness, params.mu)
        population = [pool[i] for i in keep]
        fitness = [pool_fitness[i] for i in keep]
        record(generation)

    entries = []
    seen = set()
    for i in non_dominated_sort(fitness)[0]:
        if population[i] not in seen:
            seen.add(population[i])
            entries.append((population[i], fitness[i]))
    entries.sort(key=lambda e: (e[1].size, e[1].error, e[0]))
    return ParetoArchive(entries=entries, seed=params.seed, params=params,
                         generations=params.generations, history=history)
