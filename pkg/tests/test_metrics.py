import pandas as pd
import pytest
from pytest import approx

from app.core.exceptions import EvaluationError
from app.evaluation import (
    ace,
    aggregate,
    average_precision,
    evaluate_user,
    evaluate_users,
    lambda_order,
    lambda_series,
    metrics_frame,
    prefix_distributions,
    read_metrics,
    read_user_evaluations,
    rmc,
    write_metrics,
    write_user_evaluations,
)
from app.schemas.calibration import Distribution
from app.schemas.dataset import InteractionTable, ItemGenres, RawInteraction
from app.schemas.evaluation import EvaluationConfig, SystemEvaluation, SystemId, UserEvaluation
from app.schemas.recommendation import CandidateItem, RankedList

CATALOG = {
    "a": ItemGenres("a", frozenset({"X"})),
    "b": ItemGenres("b", frozenset({"X"})),
    "c": ItemGenres("c", frozenset({"X"})),
    "d": ItemGenres("d", frozenset({"Y"})),
}
UNIFORM = Distribution.uniform(("X", "Y"))


def ranked(*item_ids, user_id="u") -> RankedList:
    return RankedList(user_id, tuple(CandidateItem(item_id, 1.0) for item_id in item_ids))


def test_average_precision():
    assert average_precision(ranked("a", "b", "c"), {"a", "c"}, 3) == approx(0.833333, abs=1e-5)
    assert average_precision(ranked("a", "b", "c"), {"d"}, 3) == 0.0
    assert average_precision(ranked("a", "b", "c"), set(), 3) == 0.0
    # the denominator is capped by the depth
    assert average_precision(ranked("a", "b"), {"a", "b", "c", "d"}, 2) == approx(1.0)


def test_list_shorter_than_depth():
    with pytest.raises(EvaluationError, match="list shorter than evaluation depth"):
        average_precision(ranked("a", "b"), {"a"}, 3)


def test_ace_of_single_genre_list():
    cfg = EvaluationConfig(n=3, alpha=0.0)
    assert ace(ranked("a", "b", "c"), UNIFORM, cfg, CATALOG) == approx(0.5)


def test_rmc_hellinger():
    cfg = EvaluationConfig(n=3, alpha=0.0, eval_divergence="he")
    assert rmc(ranked("a", "b", "c"), UNIFORM, cfg, CATALOG) == approx(1.082392, abs=1e-6)


def test_prefix_distributions():
    cfg = EvaluationConfig(n=2, alpha=0.1)
    q, q_tilde = prefix_distributions(ranked("a", "d", "b"), UNIFORM, cfg, CATALOG)
    assert q.shape == (2, 2)
    assert q[0].tolist() == [1.0, 0.0]
    assert q[1].tolist() == [approx(0.5), approx(0.5)]
    assert q_tilde[0].tolist() == [approx(0.95), approx(0.05)]


def test_calibrated_list_scores_better():
    cfg = EvaluationConfig(n=2, alpha=0.01)
    mixed = evaluate_user(ranked("a", "d"), {"d"}, UNIFORM, cfg, CATALOG)
    skewed = evaluate_user(ranked("a", "b"), {"d"}, UNIFORM, cfg, CATALOG)
    assert mixed.ace < skewed.ace
    assert mixed.rmc < skewed.rmc
    assert mixed.ap == approx(0.5)
    assert skewed.ap == 0.0


@pytest.mark.parametrize("divergence", ["kl", "he", "chi"])
@pytest.mark.parametrize("mode", ["genre", "steck"])
def test_list_matching_the_target_at_every_depth(divergence, mode):
    catalog = {item_id: ItemGenres(item_id, frozenset({"X", "Y"})) for item_id in ("e", "f", "g", "h")}
    cfg = EvaluationConfig(n=4, alpha=0.01, eval_divergence=divergence, distribution_mode=mode)
    evaluation = evaluate_user(ranked("e", "f", "g", "h"), {"f"}, UNIFORM, cfg, catalog)

    assert evaluation.ace == approx(0.0, abs=1e-12)
    assert evaluation.rmc == approx(0.0, abs=1e-12)
    assert evaluation.ap == approx(0.5)


def test_evaluate_users_skips_users_without_test_items():
    train = InteractionTable.build(
        [RawInteraction("u1", "a", 4.0), RawInteraction("u1", "d", 4.0), RawInteraction("u2", "a", 5.0)],
        CATALOG.values(),
    )
    test = InteractionTable.build([RawInteraction("u1", "b", 5.0)], CATALOG.values())
    rankings = {"u1": ranked("b", "c", user_id="u1"), "u2": ranked("b", "c", user_id="u2")}

    results = evaluate_users(rankings, train, test, EvaluationConfig(n=2))
    assert [r.user_id for r in results] == ["u1"]
    assert results[0].ap == approx(1.0)


def test_aggregate_means_over_users_then_repetitions():
    first = [UserEvaluation("u1", 1.0, 0.2, 0.4), UserEvaluation("u2", 0.0, 0.4, 0.2)]
    second = [UserEvaluation("u1", 0.5, 0.1, 0.1)]
    result = aggregate([first, second])
    assert result.map_mean == approx(0.5)
    assert result.mace_mean == approx(0.2)
    assert result.mrmc_mean == approx(0.2)
    assert result.repetitions == 2


def test_aggregate_empty():
    with pytest.raises(EvaluationError, match="cannot aggregate an empty evaluation"):
        aggregate([])
    with pytest.raises(EvaluationError):
        aggregate([[]])


def test_user_evaluation_file(tmp_path):
    rows = [UserEvaluation("u2", 0.5, 0.1, 0.2), UserEvaluation("u1", 1.0, 0.3, 0.4)]
    path = write_user_evaluations(rows, tmp_path / "eval.csv")
    assert [r.user_id for r in read_user_evaluations(path)] == ["u1", "u2"]


def test_lambda_order():
    labels = ["cgr", "1.0", "var", "0.1", "0.0", "ALL"]
    assert sorted(labels, key=lambda_order) == ["0.0", "0.1", "1.0", "var", "cgr", "ALL"]


def test_metrics_frame_and_series(tmp_path):
    records = []
    for repetition, shift in ((0, 0.0), (1, 0.2)):
        for label in ("var", "0.5", "0.0"):
            records.append(
                (SystemId("SVD", "kl", "lin", label), repetition, SystemEvaluation(0.1 + shift, 0.3, 0.5 + shift))
            )
    frame = metrics_frame(records)
    assert frame["lambda"].tolist() == ["0.0", "0.0", "0.5", "0.5", "var", "var"]
    assert frame["repetition"].tolist() == [0, 1, 0, 1, 0, 1]

    series = lambda_series(frame)
    assert series["lambda"].tolist() == ["0.0", "0.5", "var"]
    assert series["map"].tolist() == [approx(0.2)] * 3

    path = write_metrics(frame, tmp_path / "metrics.csv")
    again = read_metrics(path)
    assert again["lambda"].tolist() == frame["lambda"].tolist()
    assert again["map"].tolist() == approx(frame["map"].tolist())


def test_read_metrics_defaults(tmp_path):
    path = tmp_path / "metrics.csv"
    pd.DataFrame(
        [("SVD", "kl", "lin", 0.1, 0.2, 0.3)],
        columns=["recommender", "divergence", "balance", "map", "mace", "mrmc"],
    ).to_csv(path, index=False)
    frame = read_metrics(path)
    assert frame["lambda"].tolist() == ["ALL"]
    assert frame["repetition"].tolist() == [0]


def test_lambda_series_empty():
    with pytest.raises(EvaluationError):
        lambda_series(metrics_frame([]))
