"""The two search engines: MAP-Elites over a cell grid and a (mu+1) EA.

Both engines share the same primitive moves (uniform parent choice, standard
bit-flip mutation, one evaluation per offspring) and differ only in what they
keep: the archive retains the best solution seen per behaviour cell, the EA a
fixed-size population whose worst member is evicted by strictly better
offspring.  Every generated solution costs exactly one evaluation, so a run
uses ``init_count + steps`` evaluations and a fixed seed reproduces the full
trace bit for bit.

Per-step random draws happen in a fixed order (parent index, mutation mask,
then — only when an eviction has several tied victims — one tie-break draw),
which is what makes traces reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import Callable, Optional

from .core import RandomSource, Solution, bitwise_mutate, random_solution
from .errors import ParameterError, StateError
from .problems import Direction, Fitness, Problem, is_better

__all__ = [
    "QualityTarget",
    "RunConfig",
    "Milestone",
    "RunTrace",
    "Archive",
    "Population",
    "map_elites_init",
    "map_elites_step",
    "run_map_elites",
    "ea_init",
    "seed_population",
    "mu_plus_one_step",
    "run_ea",
]


@dataclass(frozen=True)
class QualityTarget:
    """Success condition checked after every single evaluation.

    ``threshold`` is direction-aware: reaching it means being at least as
    good (or strictly better with ``strict=True``).  Optional extras restrict
    success to feasible solutions or to one behaviour cell.
    """

    threshold: Fitness
    strict: bool = False
    require_feasible: bool = True
    required_cell: Optional[int] = None

    def met(self, fitness: Fitness, cell: int, feasible: bool, direction: Direction) -> bool:
        if self.require_feasible and not feasible:
            return False
        if self.required_cell is not None and cell != self.required_cell:
            return False
        return is_better(fitness, self.threshold, direction, strict=self.strict)


@dataclass(frozen=True)
class RunConfig:
    """Everything a single run needs besides the problem itself.

    ``init_count`` is the number of initial solutions (the archive fill size,
    or the population size mu).  ``initial_population`` replaces the random
    initialization of the EA — used to drop a population straight into a
    local optimum.  Milestones are logged every ``milestone_every``
    evaluations (default: budget/1000, rounded up) and additionally whenever
    the best feasible fitness strictly improves.
    """

    budget: int
    init_count: int
    seed: int
    target: Optional[QualityTarget] = None
    strict: bool = True
    stop_on_target: bool = True
    initial_population: Optional[tuple[Solution, ...]] = None
    milestone_every: Optional[int] = None

    def __post_init__(self) -> None:
        if self.init_count < 1:
            raise ParameterError(f"init_count must be positive, got {self.init_count}")
        if self.budget < self.init_count:
            raise ParameterError(
                f"budget {self.budget} cannot be smaller than init_count {self.init_count}"
            )
        if self.initial_population is not None and len(self.initial_population) != self.init_count:
            raise ParameterError(
                f"initial_population has {len(self.initial_population)} members, "
                f"expected init_count={self.init_count}"
            )
        if self.milestone_every is not None and self.milestone_every < 1:
            raise ParameterError(f"milestone_every must be positive, got {self.milestone_every}")

    @property
    def milestone_interval(self) -> int:
        return self.milestone_every or max(1, ceil(self.budget / 1000))


@dataclass(frozen=True, slots=True)
class Milestone:
    """One log row: state after ``evaluations`` evaluations.

    ``best_fitness``/``best_solution`` track the best feasible solution seen
    so far (None before the first feasible one); ``occupied`` is the number
    of occupied cells for the archive, or the number of distinct descriptor
    values in the population for the EA.
    """

    evaluations: int
    best_fitness: Optional[Fitness]
    occupied: int
    best_solution: Optional[str]


@dataclass
class RunTrace:
    """Complete account of one run; same seed and config give an equal trace."""

    algorithm: str
    evaluations_used: int
    first_hit: Optional[int]
    best_fitness: Optional[Fitness]
    best_solution: Optional[Solution]
    milestones: tuple[Milestone, ...]
    archive: Optional["Archive"] = None
    population: Optional["Population"] = None


class Archive:
    """Fixed grid of ``num_cells`` cells holding at most one solution each.

    Cells never empty once filled; an occupant is replaced only by strictly
    better fitness (or at-least-as-good with ``strict=False``), so per-cell
    fitness can only move in the improving direction.
    """

    __slots__ = ("num_cells", "solutions", "fitnesses", "occupied")

    def __init__(self, num_cells: int):
        if num_cells < 1:
            raise ParameterError(f"num_cells must be positive, got {num_cells}")
        self.num_cells = num_cells
        self.solutions: list[Optional[Solution]] = [None] * num_cells
        self.fitnesses: list[Optional[Fitness]] = [None] * num_cells
        self.occupied: list[int] = []  # fill order; supports O(1) uniform parent choice

    def __len__(self) -> int:
        return len(self.occupied)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Archive)
            and self.num_cells == other.num_cells
            and self.solutions == other.solutions
            and self.fitnesses == other.fitnesses
        )

    __hash__ = None

    def cell(self, index: int) -> Optional[tuple[Solution, Fitness]]:
        if not 0 <= index < self.num_cells:
            raise ParameterError(f"cell {index} outside 0..{self.num_cells - 1}")
        solution = self.solutions[index]
        if solution is None:
            return None
        return solution, self.fitnesses[index]

    def occupants(self) -> list[tuple[int, Solution, Fitness]]:
        return [(c, self.solutions[c], self.fitnesses[c]) for c in sorted(self.occupied)]

    def consider(
        self,
        cell: int,
        solution: Solution,
        fitness: Fitness,
        direction: Direction,
        *,
        strict: bool = True,
    ) -> bool:
        """Insert ``solution`` if the cell is empty or the incumbent is beaten."""
        if not 0 <= cell < self.num_cells:
            raise ParameterError(f"cell {cell} outside 0..{self.num_cells - 1}")
        incumbent = self.fitnesses[cell]
        if incumbent is None:
            self.occupied.append(cell)
        elif not is_better(fitness, incumbent, direction, strict=strict):
            return False
        self.solutions[cell] = solution
        self.fitnesses[cell] = fitness
        return True


class Population:
    """Fixed-size multiset of solutions for the (mu+1) EA.

    Takes ownership of the two lists it is given.  The worst-member scan is
    cached between evictions, which makes stagnating runs (the interesting
    ones) cheap.
    """

    __slots__ = ("solutions", "fitnesses", "_worst_cache")

    def __init__(self, solutions: list[Solution], fitnesses: list[Fitness]):
        if not solutions:
            raise ParameterError("population must not be empty")
        if len(solutions) != len(fitnesses):
            raise ParameterError(
                f"{len(solutions)} solutions but {len(fitnesses)} fitness values"
            )
        self.solutions = solutions
        self.fitnesses = fitnesses
        self._worst_cache: Optional[tuple[Direction, Fitness, list[int]]] = None

    def __len__(self) -> int:
        return len(self.solutions)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Population)
            and self.solutions == other.solutions
            and self.fitnesses == other.fitnesses
        )

    __hash__ = None

    def members(self) -> list[tuple[Solution, Fitness]]:
        return list(zip(self.solutions, self.fitnesses))

    def worst(self, direction: Direction) -> tuple[Fitness, list[int]]:
        """Worst fitness value and the indices holding it (i.e. eviction candidates)."""
        cache = self._worst_cache
        if cache is not None and cache[0] is direction:
            return cache[1], cache[2]
        fits = self.fitnesses
        value = min(fits) if direction is Direction.MAXIMIZE else max(fits)
        indices = [i for i, f in enumerate(fits) if f == value]
        self._worst_cache = (direction, value, indices)
        return value, indices

    def best(self, direction: Direction) -> tuple[Solution, Fitness]:
        fits = self.fitnesses
        value = max(fits) if direction is Direction.MAXIMIZE else min(fits)
        return self.solutions[fits.index(value)], value

    def replace(self, index: int, solution: Solution, fitness: Fitness) -> None:
        self.solutions[index] = solution
        self.fitnesses[index] = fitness
        self._worst_cache = None

    def replace_worst_if_better(
        self,
        solution: Solution,
        fitness: Fitness,
        direction: Direction,
        rng: RandomSource,
        *,
        strict: bool = True,
    ) -> Optional[int]:
        """Evict one worst member if ``solution`` beats it; ties for worst are
        broken uniformly at random.  Returns the replaced index, or None."""
        worst_value, candidates = self.worst(direction)
        if not is_better(fitness, worst_value, direction, strict=strict):
            return None
        victim = candidates[rng.randrange(len(candidates))] if len(candidates) > 1 else candidates[0]
        self.replace(victim, solution, fitness)
        return victim


# ---------------------------------------------------------------------------
# Engine steps


def map_elites_step(
    archive: Archive,
    problem: Problem,
    rng: RandomSource,
    *,
    strict: bool = True,
) -> tuple[Solution, Fitness, int, bool, bool]:
    """One iteration: uniform parent from occupied cells, mutate, evaluate, insert.

    Returns ``(offspring, fitness, cell, feasible, accepted)``.
    """
    occupied = archive.occupied
    if not occupied:
        raise StateError("cannot step an empty archive; initialize it first")
    parent = archive.solutions[occupied[rng.randrange(len(occupied))]]
    child = bitwise_mutate(parent, rng)
    fitness, cell, feasible = problem.probe(child)
    accepted = archive.consider(cell, child, fitness, problem.direction, strict=strict)
    return child, fitness, cell, feasible, accepted


def mu_plus_one_step(
    population: Population,
    problem: Problem,
    rng: RandomSource,
    *,
    strict: bool = True,
) -> tuple[Solution, Fitness, int, bool, Optional[int]]:
    """One iteration: uniform parent, mutate, evaluate, maybe evict a worst member.

    Returns ``(offspring, fitness, cell, feasible, replaced_index)``.
    """
    parent = population.solutions[rng.randrange(len(population.solutions))]
    child = bitwise_mutate(parent, rng)
    fitness, cell, feasible = problem.probe(child)
    replaced = population.replace_worst_if_better(
        child, fitness, problem.direction, rng, strict=strict
    )
    return child, fitness, cell, feasible, replaced


# ---------------------------------------------------------------------------
# Initialization


def map_elites_init(
    problem: Problem,
    count: int,
    rng: RandomSource,
    *,
    strict: bool = True,
) -> Archive:
    """Fill a fresh archive with ``count`` uniform random solutions (one evaluation each)."""
    if count < 1:
        raise ParameterError(f"count must be positive, got {count}")
    archive = Archive(problem.num_cells)
    for _ in range(count):
        x = random_solution(problem.n, rng)
        fitness, cell, _feasible = problem.probe(x)
        archive.consider(cell, x, fitness, problem.direction, strict=strict)
    return archive


def ea_init(problem: Problem, mu: int, rng: RandomSource) -> Population:
    """A population of ``mu`` uniform random solutions (one evaluation each)."""
    if mu < 1:
        raise ParameterError(f"mu must be positive, got {mu}")
    solutions = [random_solution(problem.n, rng) for _ in range(mu)]
    return Population(solutions, [problem.probe(x)[0] for x in solutions])


def seed_population(solutions, problem: Problem) -> Population:
    """Build a population from explicit members (evaluating each one)."""
    members = list(solutions)
    if not members:
        raise ParameterError("seed population must not be empty")
    for x in members:
        if x.n != problem.n:
            raise ParameterError(
                f"seed member has {x.n} variables, problem has {problem.n}"
            )
    return Population(members, [problem.probe(x)[0] for x in members])


# ---------------------------------------------------------------------------
# Full runs


class _Bookkeeper:
    """Evaluation counting, first-hit detection, and the milestone log."""

    __slots__ = (
        "algorithm",
        "direction",
        "target",
        "stop_on_target",
        "interval",
        "evals",
        "first_hit",
        "best_fitness",
        "best_solution",
        "milestones",
        "occupancy",
    )

    def __init__(self, algorithm: str, problem: Problem, config: RunConfig):
        self.algorithm = algorithm
        self.direction = problem.direction
        self.target = config.target
        self.stop_on_target = config.stop_on_target and config.target is not None
        self.interval = config.milestone_interval
        self.evals = 0
        self.first_hit: Optional[int] = None
        self.best_fitness: Optional[Fitness] = None
        self.best_solution: Optional[Solution] = None
        self.milestones: list[Milestone] = []
        self.occupancy: Callable[[], int] = lambda: 0

    def record(self, x: Solution, fitness: Fitness, cell: int, feasible: bool) -> None:
        self.evals += 1
        improved = False
        if feasible and (
            self.best_fitness is None
            or is_better(fitness, self.best_fitness, self.direction)
        ):
            self.best_fitness = fitness
            self.best_solution = x
            improved = True
        if (
            self.target is not None
            and self.first_hit is None
            and self.target.met(fitness, cell, feasible, self.direction)
        ):
            self.first_hit = self.evals
        if improved or self.evals % self.interval == 0:
            self._push_milestone()

    def _push_milestone(self) -> None:
        best = self.best_solution
        self.milestones.append(
            Milestone(
                evaluations=self.evals,
                best_fitness=self.best_fitness,
                occupied=self.occupancy(),
                best_solution=None if best is None else best.to_string(),
            )
        )

    def stop_now(self) -> bool:
        return self.stop_on_target and self.first_hit is not None

    def finish(self, archive: Optional[Archive] = None, population: Optional[Population] = None) -> RunTrace:
        if not self.milestones or self.milestones[-1].evaluations != self.evals:
            self._push_milestone()
        return RunTrace(
            algorithm=self.algorithm,
            evaluations_used=self.evals,
            first_hit=self.first_hit,
            best_fitness=self.best_fitness,
            best_solution=self.best_solution,
            milestones=tuple(self.milestones),
            archive=archive,
            population=population,
        )


def run_map_elites(problem: Problem, config: RunConfig) -> RunTrace:
    """Initialize an archive and step it until the budget runs out or the target is hit."""
    if config.initial_population is not None:
        raise ParameterError("initial_population is an EA feature; the archive self-seeds")
    rng = RandomSource(config.seed)
    book = _Bookkeeper("map-elites", problem, config)
    archive = Archive(problem.num_cells)
    book.occupancy = archive.occupied.__len__
    probe = problem.probe
    direction = problem.direction
    strict = config.strict
    for _ in range(config.init_count):
        x = random_solution(problem.n, rng)
        fitness, cell, feasible = probe(x)
        archive.consider(cell, x, fitness, direction, strict=strict)
        book.record(x, fitness, cell, feasible)
    budget = config.budget
    while book.evals < budget and not book.stop_now():
        child, fitness, cell, feasible, _ = map_elites_step(
            archive, problem, rng, strict=strict
        )
        book.record(child, fitness, cell, feasible)
    return book.finish(archive=archive)


def run_ea(problem: Problem, config: RunConfig) -> RunTrace:
    """Initialize a population (random or seeded) and run (mu+1) steps."""
    rng = RandomSource(config.seed)
    book = _Bookkeeper("ea", problem, config)
    probe = problem.probe
    descriptor = problem.descriptor
    solutions: list[Solution] = []
    fitnesses: list[Fitness] = []
    book.occupancy = lambda: len({descriptor(s) for s in solutions})
    if config.initial_population is not None:
        members = config.initial_population
        for x in members:
            if x.n != problem.n:
                raise ParameterError(
                    f"seed member has {x.n} variables, problem has {problem.n}"
                )
    else:
        members = [random_solution(problem.n, rng) for _ in range(config.init_count)]
    for x in members:
        fitness, cell, feasible = probe(x)
        solutions.append(x)
        fitnesses.append(fitness)
        book.record(x, fitness, cell, feasible)
    population = Population(solutions, fitnesses)  # shares the lists the closure reads
    budget = config.budget
    strict = config.strict
    while book.evals < budget and not book.stop_now():
        child, fitness, cell, feasible, _ = mu_plus_one_step(
            population, problem, rng, strict=strict
        )
        book.record(child, fitness, cell, feasible)
    return book.finish(population=population)
