"""Engine behaviour tests: archive discipline, eviction rules, trace accounting."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdpb.algorithms import (
    Archive,
    Population,
    QualityTarget,
    RunConfig,
    ea_init,
    map_elites_init,
    map_elites_step,
    mu_plus_one_step,
    run_ea,
    run_map_elites,
    seed_population,
)
from qdpb.core import RandomSource, Solution
from qdpb.errors import ParameterError, StateError
from qdpb.instances import (
    Example1Params,
    Example2Params,
    example1_max_coverage,
    example2_local_optimum,
    example2_set_cover,
    random_max_coverage,
    random_set_cover,
)
from qdpb.problems import Direction, is_better, make_problem

S = Solution.from_string


def small_problem(seed=5):
    return make_problem(random_max_coverage(6, 8, 0.4, 3, RandomSource(seed)))


# ---------------------------------------------------------------------------
# Archive update rule


def test_archive_insert_rules():
    a = Archive(4)
    x, y = S("1010"), S("0110")
    assert a.consider(2, x, 5, Direction.MAXIMIZE)          # empty cell fills
    assert not a.consider(2, y, 4, Direction.MAXIMIZE)      # worse rejected
    assert not a.consider(2, y, 5, Direction.MAXIMIZE)      # equal rejected when strict
    assert a.cell(2) == (x, 5)
    assert a.consider(2, y, 6, Direction.MAXIMIZE)          # strictly better replaces
    assert a.cell(2) == (y, 6)
    assert a.consider(2, x, 6, Direction.MAXIMIZE, strict=False)  # relaxed accepts ties
    assert a.cell(2) == (x, 6)
    assert len(a) == 1 and a.occupied == [2]


def test_archive_minimize_direction():
    a = Archive(3)
    a.consider(0, S("100"), 10, Direction.MINIMIZE)
    assert not a.consider(0, S("010"), 11, Direction.MINIMIZE)
    assert a.consider(0, S("010"), 9, Direction.MINIMIZE)
    assert a.cell(0) == (S("010"), 9)


def test_archive_bounds():
    a = Archive(3)
    with pytest.raises(ParameterError):
        a.consider(3, S("100"), 1, Direction.MAXIMIZE)
    with pytest.raises(ParameterError):
        a.cell(-1)
    with pytest.raises(ParameterError):
        Archive(0)


def test_step_requires_occupied_archive():
    with pytest.raises(StateError):
        map_elites_step(Archive(5), small_problem(), RandomSource(1))


def test_map_elites_init_deterministic():
    problem = small_problem()
    a = map_elites_init(problem, 7, RandomSource(3))
    b = map_elites_init(problem, 7, RandomSource(3))
    assert a == b
    assert 1 <= len(a) <= 7
    # Every occupant sits in the cell its descriptor names.
    for cell, sol, fit in a.occupants():
        assert problem.descriptor(sol) == cell
        assert problem.evaluate(sol) == fit


# ---------------------------------------------------------------------------
# Population and eviction


def test_population_worst_by_direction():
    pop = Population([S("100"), S("010"), S("001")], [3, 1, 2])
    assert pop.worst(Direction.MAXIMIZE) == (1, [1])
    pop2 = Population([S("100"), S("010"), S("001")], [3, 1, 2])
    assert pop2.worst(Direction.MINIMIZE) == (3, [0])


def test_population_eviction_requires_strict_improvement():
    pop = Population([S("10"), S("01")], [4, 7])
    rng = RandomSource(0)
    assert pop.replace_worst_if_better(S("11"), 4, Direction.MAXIMIZE, rng) is None
    assert pop.replace_worst_if_better(S("11"), 5, Direction.MAXIMIZE, rng) == 0
    assert pop.fitnesses == [5, 7]
    # Relaxed mode accepts ties.
    assert pop.replace_worst_if_better(S("00"), 5, Direction.MAXIMIZE, rng, strict=False) == 0


def test_tied_worst_evicted_uniformly():
    evicted_first = 0
    trials = 10_000
    for seed in range(trials):
        pop = Population([S("10"), S("01"), S("11")], [0, 0, 5])
        victim = pop.replace_worst_if_better(S("00"), 3, Direction.MAXIMIZE, RandomSource(seed))
        assert victim in (0, 1)
        evicted_first += victim == 0
    sigma = math.sqrt(trials * 0.25)
    assert abs(evicted_first - trials / 2) <= 3 * sigma


def test_worst_cache_tracks_replacements():
    pop = Population([S("10"), S("01"), S("11")], [2, 2, 9])
    assert pop.worst(Direction.MAXIMIZE) == (2, [0, 1])
    pop.replace(0, S("00"), 9)
    assert pop.worst(Direction.MAXIMIZE) == (2, [1])


def test_mu_plus_one_keeps_size_and_never_worsens():
    problem = small_problem(9)
    rng = RandomSource(21)
    pop = ea_init(problem, 5, rng)
    worst_values = [pop.worst(problem.direction)[0]]
    for _ in range(300):
        mu_plus_one_step(pop, problem, rng)
        assert len(pop) == 5
        worst_values.append(pop.worst(problem.direction)[0])
    for before, after in zip(worst_values, worst_values[1:]):
        assert not is_better(before, after, problem.direction)


def test_seed_population_validation():
    problem = small_problem()
    with pytest.raises(ParameterError):
        seed_population([], problem)
    with pytest.raises(ParameterError):
        seed_population([S("1010")], problem)
    pop = seed_population([S("000000"), S("100000")], problem)
    assert pop.fitnesses == [problem.evaluate(S("000000")), problem.evaluate(S("100000"))]


# ---------------------------------------------------------------------------
# Quality targets


def test_quality_target_semantics():
    t = QualityTarget(threshold=10)
    assert t.met(10, 0, True, Direction.MAXIMIZE)
    assert not t.met(9, 0, True, Direction.MAXIMIZE)
    assert not t.met(12, 0, False, Direction.MAXIMIZE)
    assert QualityTarget(10, require_feasible=False).met(12, 0, False, Direction.MAXIMIZE)
    assert not QualityTarget(10, strict=True).met(10, 0, True, Direction.MAXIMIZE)
    assert QualityTarget(10, required_cell=3).met(11, 3, True, Direction.MAXIMIZE)
    assert not QualityTarget(10, required_cell=3).met(11, 2, True, Direction.MAXIMIZE)
    assert QualityTarget(10).met(9, 0, True, Direction.MINIMIZE)


# ---------------------------------------------------------------------------
# Full runs: accounting, determinism, invariants


def test_run_config_validation():
    with pytest.raises(ParameterError):
        RunConfig(budget=5, init_count=6, seed=0)
    with pytest.raises(ParameterError):
        RunConfig(budget=5, init_count=0, seed=0)
    with pytest.raises(ParameterError):
        RunConfig(budget=5, init_count=2, seed=0, initial_population=(S("1"),))
    with pytest.raises(ParameterError):
        RunConfig(budget=5, init_count=2, seed=0, milestone_every=0)
    assert RunConfig(budget=2000, init_count=5, seed=0).milestone_interval == 2
    assert RunConfig(budget=100, init_count=5, seed=0).milestone_interval == 1


def test_budget_is_spent_exactly():
    problem = small_problem()
    for budget in (7, 50, 383):
        trace = run_map_elites(problem, RunConfig(budget=budget, init_count=7, seed=1))
        assert trace.evaluations_used == budget
        trace = run_ea(problem, RunConfig(budget=budget, init_count=7, seed=1))
        assert trace.evaluations_used == budget


def test_same_seed_reproduces_trace_exactly():
    problem = small_problem(2)
    cfg = RunConfig(budget=500, init_count=7, seed=77)
    assert run_map_elites(problem, cfg) == run_map_elites(problem, cfg)
    assert run_ea(problem, cfg) == run_ea(problem, cfg)
    assert run_map_elites(problem, cfg) != run_map_elites(
        problem, RunConfig(budget=500, init_count=7, seed=78)
    )


def test_first_hit_is_exact_even_during_init():
    problem = small_problem()
    # A target any solution meets: first evaluation hits it, init still completes.
    trace = run_map_elites(
        problem,
        RunConfig(
            budget=100,
            init_count=7,
            seed=5,
            target=QualityTarget(threshold=-10, require_feasible=False),
        ),
    )
    assert trace.first_hit == 1
    assert trace.evaluations_used == 7  # init always completes, then the run stops
    # With stopping disabled the full budget is spent but first_hit is unchanged.
    trace2 = run_map_elites(
        problem,
        RunConfig(
            budget=100,
            init_count=7,
            seed=5,
            target=QualityTarget(threshold=-10, require_feasible=False),
            stop_on_target=False,
        ),
    )
    assert trace2.first_hit == 1
    assert trace2.evaluations_used == 100


def test_milestones_are_ordered_and_monotone():
    problem = small_problem(4)
    trace = run_map_elites(problem, RunConfig(budget=400, init_count=7, seed=12))
    evals = [m.evaluations for m in trace.milestones]
    assert evals == sorted(evals)
    assert trace.milestones[-1].evaluations == trace.evaluations_used
    best_values = [m.best_fitness for m in trace.milestones if m.best_fitness is not None]
    for before, after in zip(best_values, best_values[1:]):
        assert not is_better(before, after, problem.direction)
    occupancies = [m.occupied for m in trace.milestones]
    for before, after in zip(occupancies, occupancies[1:]):
        assert after >= before
    assert trace.best_fitness == trace.milestones[-1].best_fitness


def test_map_elites_rejects_seeded_population():
    problem = small_problem()
    with pytest.raises(ParameterError):
        run_map_elites(
            problem,
            RunConfig(
                budget=10,
                init_count=1,
                seed=0,
                initial_population=(Solution.zero(6),),
            ),
        )


def test_seeded_ea_run_matches_seed_population():
    params = Example2Params(8)
    problem = make_problem(example2_set_cover(params))
    local = example2_local_optimum(params)
    cfg = RunConfig(
        budget=3000,
        init_count=9,
        seed=31,
        initial_population=(local,) * 9,
        target=QualityTarget(
            threshold=problem.evaluate(local), strict=True, require_feasible=False
        ),
    )
    trace = run_ea(problem, cfg)
    assert trace.evaluations_used == 3000
    assert trace.first_hit is None
    assert trace.population.solutions == [local] * 9  # nothing ever improved
    assert trace.best_fitness == problem.evaluate(local)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_archive_fitness_only_improves(seed, use_cover):
    if use_cover:
        problem = make_problem(random_set_cover(6, 7, 0.4, 5, RandomSource(seed + 1)))
    else:
        problem = make_problem(random_max_coverage(6, 7, 0.4, 3, RandomSource(seed + 1)))
    rng = RandomSource(seed)
    archive = map_elites_init(problem, 5, rng)
    snapshot = list(archive.fitnesses)
    for _ in range(150):
        map_elites_step(archive, problem, rng)
        for cell in range(archive.num_cells):
            before, after = snapshot[cell], archive.fitnesses[cell]
            if before is not None:
                assert after is not None
                assert not is_better(before, after, problem.direction)
            if after is not None:
                sol = archive.solutions[cell]
                assert problem.descriptor(sol) == cell
        snapshot = list(archive.fitnesses)


def test_run_on_reference_families_smoke():
    p1 = make_problem(example1_max_coverage(Example1Params(9, Fraction(1, 3))))
    trace = run_map_elites(p1, RunConfig(budget=4000, init_count=10, seed=3))
    assert trace.best_fitness is not None and trace.best_fitness > 0
    p2 = make_problem(example2_set_cover(Example2Params(6)))
    trace2 = run_ea(p2, RunConfig(budget=4000, init_count=6, seed=3))
    assert trace2.best_fitness is not None
