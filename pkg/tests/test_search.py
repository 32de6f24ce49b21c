import numpy as np
import pytest

from gridsynth import dsl
from gridsynth.factored import FactoredDistribution, factored_literal
from gridsynth.search import SearchConfig, best_first_search, ranked_stream, scored_stream
from gridsynth.speakers import SpeakerConfig, speak_pragmatic

import reduced
from conftest import CHICKEN_FRAME


def random_factored(rng, arities):
    return FactoredDistribution([rng.random(a) + 1e-3 for a in arities], normalize=True)


def brute_force_order(space, q):
    """Full sort of all member programs by (-log score, choices)."""
    scored = []
    for row in space.programs:
        choices = tuple(int(c) for c in row)
        total = 0.0
        dead = False
        for i, c in enumerate(choices):
            f = q.factors[i][c]
            if f == 0.0:
                dead = True
                break
            total += float(np.log(q.factors[i])[c])
        if not dead:
            scored.append((-total, choices))
    scored.sort()
    return [c for _, c in scored]


def test_point_mass_found_at_rank_one(space):
    q = FactoredDistribution.point_mass(CHICKEN_FRAME, space.arities)
    spec = dsl.valid_utterances(CHICKEN_FRAME)[:3]
    result = best_first_search(space, q, spec, SearchConfig(50))
    assert result.found and result.program == CHICKEN_FRAME and result.rank == 1


def test_found_results_are_consistent(space):
    rng = np.random.default_rng(8)
    for k in range(5):
        idx = int(rng.integers(space.n_programs))
        target = space.choices_of(idx)
        spec = speak_pragmatic(space, target, SpeakerConfig("pragmatic", 10))
        q = factored_literal(space, spec)
        result = best_first_search(space, q, spec, SearchConfig(50))
        if result.found:
            assert dsl.consistent(result.program, spec)
            assert result.rank <= 50


def test_budget_is_respected(space):
    # uniform scores with a specific spec: the first dequeue misses
    q = FactoredDistribution.uniform(space.arities)
    spec = dsl.valid_utterances(CHICKEN_FRAME)[:5]
    result = best_first_search(space, q, spec, SearchConfig(1))
    assert not result.found
    assert result.explored == 1


def test_exhausted_when_stream_dries_up(reduced_space):
    # point mass on the interval [2, 2]; a reveal of cell 0 contradicts it
    q = FactoredDistribution.point_mass((2, 2, 0), reduced.ARITIES)
    result = best_first_search(reduced_space, q, [reduced.CELLS[0]], SearchConfig(50))
    assert not result.found
    assert result.explored == 1  # only one program has nonzero probability


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(0)


def test_stream_scores_non_increasing(reduced_space, space):
    rng = np.random.default_rng(5)
    for sp in (reduced_space, space):
        q = random_factored(rng, sp.arities)
        scores = [s for _, s in zip(range(200), (x[1] for x in scored_stream(sp, q)))]
        assert all(a >= b - 1e-12 for a, b in zip(scores, scores[1:]))


def test_stream_has_no_duplicates(reduced_space):
    rng = np.random.default_rng(2)
    q = random_factored(rng, reduced.ARITIES)
    programs = ranked_stream(reduced_space, q, 100)
    assert len(programs) == len(set(programs)) == len(reduced.PROGRAMS)


def test_stream_matches_brute_force_sort_on_reduced(reduced_space):
    rng = np.random.default_rng(33)
    for _ in range(20):
        q = random_factored(rng, reduced.ARITIES)
        got = ranked_stream(reduced_space, q, 10)
        assert got == brute_force_order(reduced_space, q)


def test_stream_matches_brute_force_under_uniform_ties(reduced_space):
    q = FactoredDistribution.uniform(reduced.ARITIES)
    got = ranked_stream(reduced_space, q, 10)
    expected = brute_force_order(reduced_space, q)
    assert got == expected
    # with all scores tied the order is exactly lexicographic
    assert expected == sorted(expected)


def test_stream_first_element_is_all_best_when_member(reduced_space):
    q = FactoredDistribution([np.array([0.5, 0.3, 0.2]), np.array([0.2, 0.3, 0.5]), np.array([1.0])])
    first = ranked_stream(reduced_space, q, 1)[0]
    assert first == (0, 2, 0)


def test_invalid_seed_is_skipped_but_charged(reduced_space):
    # best rules per factor form (lo=1, hi=0), an invalid interval
    q = FactoredDistribution(
        [np.array([0.1, 0.6, 0.3]), np.array([0.6, 0.3, 0.1]), np.array([1.0])]
    )
    programs = ranked_stream(reduced_space, q, 10)
    assert (1, 0, 0) not in programs
    assert programs == brute_force_order(reduced_space, q)
    # the invalid seed still counts against the budget
    result = best_first_search(reduced_space, q, [reduced.CELLS[0]], SearchConfig(2))
    assert result.explored <= 2


def test_stream_deterministic(space):
    rng = np.random.default_rng(14)
    q = random_factored(rng, space.arities)
    a = ranked_stream(space, q, 30)
    b = ranked_stream(space, q, 30)
    assert a == b


def test_zero_probability_rules_never_emitted(reduced_space):
    q = FactoredDistribution(
        [np.array([0.5, 0.5, 0.0]), np.array([0.2, 0.3, 0.5]), np.array([1.0])]
    )
    programs = ranked_stream(reduced_space, q, 10)
    assert all(p[0] != 2 for p in programs)
    assert len(programs) == 5  # every member program with lo < 2


def test_pragmatic_spec_solves_within_budget(space):
    # specs from the greedy speaker pin the target's pattern quickly under
    # its own literal marginals
    rng = np.random.default_rng(77)
    hits = 0
    for _ in range(10):
        idx = int(rng.integers(space.n_programs))
        target = space.choices_of(idx)
        spec = speak_pragmatic(space, target, SpeakerConfig("pragmatic", 15))
        q = factored_literal(space, spec)
        result = best_first_search(space, q, spec, SearchConfig(50))
        hits += bool(result.found and space.same_pattern(result.program, target))
    assert hits >= 8
