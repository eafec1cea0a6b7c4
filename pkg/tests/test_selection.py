import math

import numpy as np
import pytest
from pytest import approx

from app.calibration import fit_bias_params, target_distribution
from app.core.exceptions import CalibrationError, SelectionError
from app.selection import (
    OracleComparison,
    SelectionProblem,
    brute_force_select,
    compare_with_oracle,
    greedy_select,
    greedy_step_certificate,
    greedy_to_optimal_ratio,
    random_problem,
    read_rankings,
    rerank_users,
    write_rankings,
)
from app.schemas.calibration import BiasParams, Distribution, LambdaPolicy, SmoothingParams, TradeOffSpec
from app.schemas.dataset import ItemGenres
from app.schemas.recommendation import CandidateItem, CandidateList

NO_BIAS = BiasParams(mu=0.0)


def _problem(scored, catalog, p, lambda_u=0.0, n=2, **spec_kwargs) -> SelectionProblem:
    spec = TradeOffSpec(**spec_kwargs)
    return SelectionProblem(
        candidates=CandidateList.from_scores("u", [CandidateItem(i, w) for i, w in scored]),
        p=p,
        spec=spec,
        bias=NO_BIAS,
        catalog=catalog,
        n=n,
        lambda_u=lambda_u,
    )


@pytest.fixture
def xy_catalog():
    return {
        "A": ItemGenres("A", frozenset({"X"})),
        "B": ItemGenres("B", frozenset({"Y"})),
        "C": ItemGenres("C", frozenset({"X"})),
        "D": ItemGenres("D", frozenset({"X", "Y"})),
    }


@pytest.fixture
def uniform_xy():
    return Distribution.uniform(("X", "Y"))


def test_full_calibration_picks_covering_pair(xy_catalog, uniform_xy):
    prob = _problem([("A", 5.0), ("B", 4.0), ("C", 3.0)], xy_catalog, uniform_xy, lambda_u=1.0)
    ranked = greedy_select(prob)
    assert set(ranked.item_ids) == {"A", "B"}
    assert greedy_step_certificate(prob, ranked)


def test_lambda_zero_is_candidate_prefix(xy_catalog, uniform_xy):
    prob = _problem([("A", 5.0), ("B", 4.0), ("C", 3.0), ("D", 1.0)], xy_catalog, uniform_xy, n=3)
    ranked = greedy_select(prob)
    assert ranked.item_ids == ["A", "B", "C"]
    assert ranked.objective_trace == (approx(5.0), approx(9.0), approx(12.0))


def test_ties_go_to_candidate_order(xy_catalog, uniform_xy):
    prob = _problem([("C", 2.0), ("A", 2.0), ("B", 2.0)], xy_catalog, uniform_xy, n=1)
    assert greedy_select(prob).item_ids == ["A"]


def test_short_candidate_list(xy_catalog, uniform_xy):
    prob = _problem([("A", 5.0)], xy_catalog, uniform_xy, n=10)
    assert prob.size == 1
    assert greedy_select(prob).item_ids == ["A"]


def test_problem_validation(xy_catalog, uniform_xy):
    with pytest.raises(SelectionError):
        _problem([("A", 5.0)], xy_catalog, uniform_xy, n=0)
    with pytest.raises(SelectionError):
        _problem([("A", 5.0)], xy_catalog, uniform_xy, lambda_u=1.5)
    with pytest.raises(SelectionError, match="missing from the genre catalogue"):
        _problem([("Z", 5.0)], xy_catalog, uniform_xy)
    with pytest.raises(SelectionError, match="no candidates"):
        greedy_select(_problem([], xy_catalog, uniform_xy))


def test_negative_weights_need_lambda_zero(xy_catalog, uniform_xy):
    scored = [("A", -1.0), ("B", -2.0)]
    assert greedy_select(_problem(scored, xy_catalog, uniform_xy)).item_ids == ["A", "B"]
    with pytest.raises(CalibrationError):
        greedy_select(_problem(scored, xy_catalog, uniform_xy, lambda_u=0.5))


@pytest.mark.parametrize("divergence", ["kl", "he", "chi"])
@pytest.mark.parametrize("balance", ["lin", "log"])
@pytest.mark.parametrize("mode", ["genre", "steck"])
def test_trace_matches_scalar_objective(divergence, balance, mode):
    prob = random_problem(7, n_candidates=10, n=4, lambda_u=0.6, divergence=divergence, balance=balance)
    prob = SelectionProblem(
        candidates=prob.candidates,
        p=prob.p,
        spec=TradeOffSpec(balance=balance, divergence=divergence, distribution_mode=mode),
        bias=prob.bias,
        catalog=prob.catalog,
        n=prob.n,
        lambda_u=prob.lambda_u,
    )
    ranked = greedy_select(prob)
    for k in range(1, len(ranked) + 1):
        assert ranked.objective_trace[k - 1] == approx(prob.value_of(list(ranked.items[:k])), rel=1e-9, abs=1e-12)
    assert greedy_step_certificate(prob, ranked)


def test_certificate_rejects_other_lists(xy_catalog, uniform_xy):
    prob = _problem([("A", 5.0), ("B", 4.0), ("C", 3.0)], xy_catalog, uniform_xy, lambda_u=1.0)
    ranked = greedy_select(prob)
    swapped = type(ranked)(ranked.user_id, (prob.candidates.items[0], prob.candidates.items[2]))
    assert not greedy_step_certificate(prob, swapped)


def test_log_balance_user_bias(xy_catalog, uniform_xy):
    bias = BiasParams(mu=3.0, sigma=0.01, item_bias={"A": 0.5})
    spec = TradeOffSpec(balance="log")
    prob = SelectionProblem(
        candidates=CandidateList.from_scores("u", [CandidateItem("A", 5.0)]),
        p=uniform_xy,
        spec=spec,
        bias=bias,
        catalog=xy_catalog,
        n=1,
    )
    ranked = greedy_select(prob)
    expected = math.log(6.0) + (5.0 - 3.0 - 0.5) / 1.01
    assert ranked.objective_trace[0] == approx(expected)


def test_calibration_moves_lists_towards_target(movielens_split):
    dataset, lists = movielens_split
    bias = fit_bias_params(dataset.train)
    relevance = rerank_users(lists, dataset.train, TradeOffSpec(lambda_policy=LambdaPolicy("constant", 0.0)), bias, 5)
    calibrated = rerank_users(lists, dataset.train, TradeOffSpec(lambda_policy=LambdaPolicy("constant", 0.9)), bias, 5)

    def mean_kl(rankings):
        from app.calibration import divergence, realized_distribution, smooth

        values = []
        for user_id, ranked in rankings.items():
            profile = [(dataset.train.items[i], w) for i, w in dataset.train.profiles[user_id]]
            p = target_distribution(profile, dataset.train.genre_universe)
            q = realized_distribution(
                [(dataset.train.items[item.item_id], item.predicted_weight) for item in ranked.items],
                p.genres,
            )
            values.append(divergence("kl", p, smooth(q, p, SmoothingParams(0.01))))
        return float(np.mean(values))

    assert set(relevance) == set(calibrated) == set(lists)
    assert mean_kl(calibrated) <= mean_kl(relevance)


def test_rankings_file(movielens_split, tmp_path):
    dataset, lists = movielens_split
    rankings = rerank_users(lists, dataset.train, TradeOffSpec(), fit_bias_params(dataset.train), 3)
    path = write_rankings(rankings, tmp_path / "rankings.csv")
    again = read_rankings(path)
    assert set(again) == set(rankings)
    user_id = sorted(rankings)[0]
    assert again[user_id].item_ids == rankings[user_id].item_ids
    assert again[user_id].objective_trace == approx(rankings[user_id].objective_trace)


def test_brute_force_matches_greedy_on_modular_objective(xy_catalog, uniform_xy):
    prob = _problem([("A", 5.0), ("B", 4.0), ("C", 3.0), ("D", 1.0)], xy_catalog, uniform_xy, n=2)
    best, value = brute_force_select(prob)
    assert best == frozenset({"A", "B"})
    assert value == approx(9.0)


def test_brute_force_prefers_covering_pair(xy_catalog, uniform_xy):
    prob = _problem([("A", 5.0), ("B", 4.0), ("C", 3.0)], xy_catalog, uniform_xy, lambda_u=1.0)
    best, value = brute_force_select(prob)
    assert best == frozenset({"A", "B"})
    assert value == approx(prob.value_of(list(greedy_select(prob).items)))


def test_brute_force_size_guard(xy_catalog, uniform_xy):
    catalog = {f"i{k:02d}": ItemGenres(f"i{k:02d}", frozenset({"X"})) for k in range(21)}
    prob = _problem([(item_id, 1.0) for item_id in catalog], catalog, uniform_xy, n=2)
    with pytest.raises(SelectionError, match="instance too large"):
        brute_force_select(prob)
    with pytest.raises(SelectionError, match="instance too large"):
        brute_force_select(_problem([("A", 1.0)], xy_catalog, uniform_xy, n=6))


def test_random_problem_is_seeded():
    first = random_problem(3)
    second = random_problem(3)
    assert first.candidates == second.candidates
    np.testing.assert_array_equal(first.p.probs, second.p.probs)
    assert first.size == 3


def test_oracle_comparison():
    comparisons = compare_with_oracle(range(25))
    summary = greedy_to_optimal_ratio(comparisons)

    assert summary["instances"] == 25
    assert all(c.gap >= -1e-9 for c in comparisons)
    assert summary["optimal_hits"] >= 1
    assert summary["ratio_min"] <= 1.0 + 1e-9


def test_oracle_ratio_undefined_for_non_positive_optimum():
    assert math.isnan(OracleComparison(0, -1.0, 0.0).ratio)
    assert OracleComparison(0, 2.0, 4.0).ratio == approx(0.5)
    with pytest.raises(SelectionError):
        greedy_to_optimal_ratio([])


PAIRS = [(divergence, balance) for divergence in ("kl", "he", "chi") for balance in ("lin", "log")]


def test_certificate_holds_on_random_problems():
    for seed in range(500):
        divergence, balance = PAIRS[seed % len(PAIRS)]
        prob = random_problem(
            seed,
            n_candidates=10,
            n=5,
            lambda_u=(seed % 11) / 10,
            divergence=divergence,
            balance=balance,
        )
        ranked = greedy_select(prob)
        assert len(ranked) == 5
        assert greedy_step_certificate(prob, ranked), f"seed {seed} ({divergence}, {balance})"


@pytest.mark.parametrize("divergence", ["kl", "he", "chi"])
def test_linear_lambda_zero_returns_prefix_on_random_problems(divergence):
    for seed in range(100):
        prob = random_problem(seed, n_candidates=10, n=4, lambda_u=0.0, divergence=divergence)
        assert greedy_select(prob).item_ids == prob.candidates.item_ids[:4]


@pytest.mark.parametrize("divergence", ["kl", "he", "chi"])
@pytest.mark.parametrize("balance", ["lin", "log"])
def test_greedy_never_beats_exhaustive_search(divergence, balance):
    comparisons = compare_with_oracle(range(200), n_candidates=8, n=3, divergence=divergence, balance=balance)
    assert len(comparisons) == 200
    assert all(c.gap >= -1e-9 for c in comparisons)


@pytest.fixture
def larger_candidates(larger_movielens):
    from app.ingest import load_movielens, preprocess, split
    from app.recommend import generate_candidates, train
    from app.schemas.dataset import PreprocessConfig
    from app.schemas.recommendation import RecommenderConfig

    cfg = PreprocessConfig(min_profile_size=8, min_item_interactions=2, seed=4)
    dataset = split(preprocess(load_movielens(*larger_movielens), cfg, "movie"), cfg)
    model = train(dataset.train, RecommenderConfig(name="UserKNN", algorithm="user_knn", k_neighbors=10), "movie")
    return dataset, generate_candidates(model, dataset.train, 20)


@pytest.mark.parametrize("divergence", ["kl", "he", "chi"])
def test_miscalibration_falls_as_lambda_grows(larger_candidates, divergence):
    from app.calibration import divergence as measure
    from app.calibration import realized_distribution, smooth

    dataset, lists = larger_candidates
    bias = fit_bias_params(dataset.train)
    assert len(lists) >= 100

    def mean_miscalibration(value: float) -> float:
        spec = TradeOffSpec(divergence=divergence, lambda_policy=LambdaPolicy("constant", value))
        rankings = rerank_users(lists, dataset.train, spec, bias, 5)
        assert set(rankings) == set(lists)
        values = []
        for user_id, ranked in rankings.items():
            profile = [(dataset.train.items[i], w) for i, w in dataset.train.profiles[user_id]]
            p = target_distribution(profile, dataset.train.genre_universe)
            q = realized_distribution(
                [(dataset.train.items[item.item_id], item.predicted_weight) for item in ranked.items],
                p.genres,
            )
            values.append(measure(divergence, p, smooth(q, p, SmoothingParams(0.01)), q))
        return float(np.mean(values))

    relevance, balanced, calibrated = (mean_miscalibration(value) for value in (0.0, 0.5, 1.0))
    assert relevance >= balanced - 1e-12
    assert balanced >= calibrated - 1e-12
    assert calibrated < relevance
