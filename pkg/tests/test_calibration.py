import math
from decimal import Decimal, localcontext

import numpy as np
import pytest
from pytest import approx

from app.calibration import (
    divergence,
    fit_bias_params,
    genre_prob,
    item_bias,
    lambda_cgr,
    lambda_var,
    list_miscalibration,
    log_balance,
    objective,
    realized_distribution,
    relevance_sum,
    resolve_lambda,
    smooth,
    target_distribution,
    tradeoff_lin,
    tradeoff_log,
    user_bias,
)
from app.core.exceptions import CalibrationError
from app.schemas.calibration import (
    BiasParams,
    Distribution,
    LambdaPolicy,
    SmoothingParams,
    TradeOffSpec,
)
from app.schemas.dataset import ItemGenres
from app.schemas.recommendation import CandidateItem

GENRES_2 = ("A", "B")


def dist(*probs, genres=None) -> Distribution:
    genres = genres or tuple(f"g{k}" for k in range(len(probs)))
    return Distribution(tuple(genres), np.array(probs, dtype=float))


@pytest.fixture
def u001_prefs(toy_catalog):
    return [(toy_catalog["I-001"], 1.0), (toy_catalog["I-002"], 4.0), (toy_catalog["I-008"], 5.0)]


def test_genre_prob(toy_catalog):
    assert genre_prob(toy_catalog["I-001"], "Pop") == approx(0.5)
    assert genre_prob(toy_catalog["I-008"], "Funk") == approx(0.25)
    assert genre_prob(toy_catalog["I-002"], "Rock") == 0.0


def test_target_distribution_u001(u001_prefs, toy_table):
    p = target_distribution(u001_prefs, toy_table.genre_universe)

    assert p.raw[p.genres.index("Pop")] == approx(0.575)
    assert p.raw[p.genres.index("Rock")] == approx(0.29167, abs=1e-5)
    assert p["Pop"] == approx(0.42073, abs=1e-5)
    assert p["Rock"] == approx(0.21341, abs=1e-5)
    assert p["Pagode"] == approx(0.18293, abs=1e-5)
    assert p["Funk"] == approx(0.18293, abs=1e-5)
    assert p["Blues"] == 0.0
    assert p.probs.sum() == approx(1.0, abs=1e-9)


def test_steck_mode_is_already_normalised(u001_prefs, toy_table):
    p = target_distribution(u001_prefs, toy_table.genre_universe, mode="steck")
    assert p.raw.sum() == approx(1.0)
    # (0.5 * 1 + 4 + 0.25 * 5) / 10
    assert p["Pop"] == approx(0.575)


def test_distributions_sum_to_one_on_random_profiles():
    rng = np.random.default_rng(0)
    universe = tuple(f"g{k}" for k in range(6))
    for _ in range(1000):
        size = int(rng.integers(1, 8))
        prefs = []
        for k in range(size):
            genres = rng.choice(6, size=int(rng.integers(1, 4)), replace=False)
            prefs.append((ItemGenres(f"i{k}", frozenset(universe[g] for g in genres)), float(rng.uniform(0.5, 5))))
        p = target_distribution(prefs, universe)
        q = realized_distribution(prefs, universe, mode="steck")
        assert p.probs.sum() == approx(1.0, abs=1e-9)
        assert q.probs.sum() == approx(1.0, abs=1e-9)


def test_no_genre_mass(toy_catalog):
    with pytest.raises(CalibrationError, match="user has no genre mass"):
        target_distribution([(toy_catalog["I-002"], 0.0)], ("Pop", "Rock"))


def test_empty_list_rejected(toy_table):
    with pytest.raises(CalibrationError):
        realized_distribution([], toy_table.genre_universe)


def test_distribution_must_sum_to_one():
    with pytest.raises(CalibrationError):
        dist(0.5, 0.6)


def test_smooth():
    q = dist(1.0, 0.0)
    p = dist(0.5, 0.5)
    smoothed = smooth(q, p, SmoothingParams(0.01))
    np.testing.assert_allclose(smoothed.probs, [0.995, 0.005])


def test_smooth_needs_same_universe():
    with pytest.raises(CalibrationError):
        smooth(dist(1.0, 0.0), dist(0.5, 0.5, genres=GENRES_2), SmoothingParams())


def test_kl():
    assert divergence("kl", dist(0.6, 0.4), dist(0.5, 0.5)) == approx(0.029049, abs=1e-6)
    assert divergence("kl", dist(0.3, 0.7), dist(0.3, 0.7)) == 0.0


def test_chi_square():
    assert divergence("chi", dist(0.5, 0.5), dist(0.25, 0.75)) == approx(1 / 3, abs=1e-6)


def test_hellinger_disjoint_supports():
    p = dist(1.0, 0.0)
    q = dist(0.0, 1.0)
    assert divergence("he", p, q, q) == approx(2.0)


def test_hellinger_uses_unsmoothed_q():
    p = dist(0.5, 0.5)
    q = dist(0.5, 0.5)
    q_tilde = dist(0.9, 0.1)
    assert divergence("he", p, q_tilde, q) == 0.0


def test_zero_support():
    with pytest.raises(CalibrationError, match="unsmoothed zero support"):
        divergence("kl", dist(0.5, 0.5), dist(1.0, 0.0))
    with pytest.raises(CalibrationError, match="unsmoothed zero support"):
        divergence("chi", dist(0.5, 0.5), dist(1.0, 0.0))


def test_chi_square_skips_empty_genres():
    assert divergence("chi", dist(0.5, 0.5, 0.0), dist(0.5, 0.5, 0.0)) == 0.0


def test_relevance_sum():
    assert relevance_sum([CandidateItem("I-004", 2.0), CandidateItem("I-007", 10.0)]) == 12.0
    assert relevance_sum([]) == 0.0


def test_lambda_var():
    assert lambda_var(dist(1.0, 0.0)) == approx(0.75)
    assert lambda_var(dist(1.0, 0.0, 0.0, 0.0)) == approx(0.8125)
    assert lambda_var(dist(0.25, 0.25, 0.25, 0.25)) == approx(1.0)


def test_lambda_cgr():
    universe = tuple(f"g{k}" for k in range(16))
    assert lambda_cgr({"g0", "g3", "g7", "g9"}, universe) == approx(0.25)
    with pytest.raises(CalibrationError):
        lambda_cgr({"g0"}, ())


def test_resolve_lambda(toy_table):
    p = Distribution.uniform(toy_table.genre_universe)
    assert resolve_lambda(LambdaPolicy("constant", 0.3), p, set()) == 0.3
    assert resolve_lambda(LambdaPolicy("var"), p, set()) == approx(1.0)
    touched = toy_table.genres_touched("U-003")
    expected = len(touched) / len(toy_table.genre_universe)
    assert resolve_lambda(LambdaPolicy("cgr"), p, touched) == approx(expected)


def test_lambda_policy_labels():
    grid = LambdaPolicy.default_grid()
    assert len(grid) == 13
    assert [policy.label for policy in grid][-3:] == ["1.0", "var", "cgr"]
    assert LambdaPolicy.parse("0.3") == LambdaPolicy("constant", 0.3)
    assert LambdaPolicy.parse("VAR") == LambdaPolicy("var")
    with pytest.raises(CalibrationError):
        LambdaPolicy.parse("sometimes")
    with pytest.raises(CalibrationError):
        LambdaPolicy("constant", 1.5)


def test_item_and_user_bias():
    bp = BiasParams(mu=4.0, alpha_b=0.01, sigma=0.01, item_bias={"x": 0.2})
    assert item_bias([5.0, 5.0], bp) == approx(0.995025, abs=1e-6)
    assert item_bias([], bp) == 0.0
    assert user_bias([CandidateItem("x", 4.5)], bp) == approx(0.297030, abs=1e-6)


def test_bias_params_positive():
    with pytest.raises(CalibrationError):
        BiasParams(mu=1.0, alpha_b=0.0)


def test_log_balance():
    assert log_balance(math.e - 1, 0.0) == approx(1.0)
    assert log_balance(-(math.e - 1), 0.5) == approx(-0.5)
    assert log_balance(0.0, 0.25) == 0.25
    assert log_balance(9.0, 0.0, base=10) == approx(1.0)


def test_tradeoff_lin(toy_catalog, toy_table):
    items = [(toy_catalog["I-004"], 2.0), (toy_catalog["I-007"], 10.0)]
    p = target_distribution(items, toy_table.genre_universe)
    spec = TradeOffSpec(divergence="kl")

    assert tradeoff_lin(0.0, items, p, spec) == 12.0
    # the list is its own target: smoothing keeps q~ = p
    assert tradeoff_lin(0.5, items, p, spec) == approx(6.0, abs=1e-12)
    assert tradeoff_lin(1.0, items, p, spec) == approx(0.0, abs=1e-12)
    with pytest.raises(CalibrationError):
        tradeoff_lin(1.5, items, p, spec)


def test_tradeoff_lin_penalises_miscalibration(toy_catalog, toy_table):
    p = target_distribution([(toy_catalog["I-003"], 1.0), (toy_catalog["I-004"], 1.0)], toy_table.genre_universe)
    items = [(toy_catalog["I-003"], 3.0), (toy_catalog["I-005"], 3.0)]
    spec = TradeOffSpec(divergence="chi")
    penalty = list_miscalibration(items, p, spec)
    assert penalty > 0
    assert tradeoff_lin(0.4, items, p, spec) == approx(0.6 * 6.0 - 0.4 * penalty)


def test_tradeoff_log(toy_catalog, toy_table):
    items = [(toy_catalog["I-004"], 2.0), (toy_catalog["I-007"], 10.0)]
    p = target_distribution(items, toy_table.genre_universe)
    spec = TradeOffSpec(balance="log")
    bp = BiasParams(mu=6.0, item_bias={"I-004": -4.0, "I-007": 4.0})

    # residuals are 0, so the user bias vanishes
    assert tradeoff_log(0.0, items, p, spec, bp) == approx(math.log(13.0))
    assert objective(0.0, items, p, spec, bp) == approx(math.log(13.0))
    assert objective(0.0, items, p, TradeOffSpec(balance="lin"), bp) == 12.0


def test_fit_bias_params(toy_table):
    bp = fit_bias_params(toy_table, alpha_b=0.01, sigma=0.01)
    assert bp.mu == approx(45.0 / 8)
    assert bp.bias_of("I-004") == approx(((2.0 - bp.mu) + (3.0 - bp.mu)) / 2.01)
    assert bp.bias_of("I-006") == 0.0


def test_trade_off_spec_validation():
    with pytest.raises(CalibrationError):
        TradeOffSpec(divergence="js")
    with pytest.raises(CalibrationError):
        TradeOffSpec(log_base=1.0)
    assert TradeOffSpec(divergence="he", balance="log", lambda_policy=LambdaPolicy("var")).label == "he-log-var"


def _random_distribution(rng: np.random.Generator, k: int, zero_share: float = 0.0) -> np.ndarray:
    probs = rng.dirichlet(np.ones(k))
    probs[rng.random(k) < zero_share] = 0.0
    if probs.sum() == 0:
        probs[rng.integers(k)] = 1.0
    return probs / probs.sum()


def _reference(kind: str, p: np.ndarray, q_tilde: np.ndarray, q: np.ndarray) -> Decimal:
    """The three measures in 50-digit decimal arithmetic."""
    with localcontext() as ctx:
        ctx.prec = 50
        ps = [Decimal(float(v)) for v in p]
        qts = [Decimal(float(v)) for v in q_tilde]
        if kind == "kl":
            ln2 = Decimal(2).ln()
            return sum((a * (a / b).ln() / ln2 for a, b in zip(ps, qts) if a > 0), Decimal(0))
        if kind == "chi":
            return sum(((a - b) ** 2 / b for a, b in zip(ps, qts) if b > 0), Decimal(0))
        qs = [Decimal(float(v)) for v in q]
        return (2 * sum(((a.sqrt() - b.sqrt()) ** 2 for a, b in zip(ps, qs)), Decimal(0))).sqrt()


@pytest.mark.parametrize("kind", ["kl", "he", "chi"])
def test_divergences_match_decimal_reference(kind):
    rng = np.random.default_rng(101)
    for _ in range(1000):
        k = int(rng.integers(2, 9))
        genres = tuple(f"g{j}" for j in range(k))
        p = Distribution(genres, _random_distribution(rng, k, zero_share=0.2))
        q = Distribution(genres, _random_distribution(rng, k, zero_share=0.3))
        q_tilde = smooth(q, p, SmoothingParams(0.01))

        expected = _reference(kind, p.probs, q_tilde.probs, q.probs)
        assert divergence(kind, p, q_tilde, q) == approx(float(expected), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("kind", ["kl", "he", "chi"])
def test_divergence_of_a_distribution_with_itself(kind):
    rng = np.random.default_rng(7)
    for _ in range(1000):
        k = int(rng.integers(1, 9))
        p = Distribution(tuple(f"g{j}" for j in range(k)), _random_distribution(rng, k, zero_share=0.2))
        assert divergence(kind, p, p, p) == approx(0.0, abs=1e-12)


def test_hellinger_bounded_by_two():
    rng = np.random.default_rng(8)
    for _ in range(1000):
        k = int(rng.integers(2, 9))
        genres = tuple(f"g{j}" for j in range(k))
        p = Distribution(genres, _random_distribution(rng, k, zero_share=0.3))
        q = Distribution(genres, _random_distribution(rng, k, zero_share=0.3))
        assert divergence("he", p, q, q) <= 2.0 + 1e-12

        # split the genres in two and give p and q one side each
        cut = int(rng.integers(1, k))
        left = np.r_[_random_distribution(rng, cut), np.zeros(k - cut)]
        right = np.r_[np.zeros(cut), _random_distribution(rng, k - cut)]
        far = Distribution(genres, right)
        assert divergence("he", Distribution(genres, left), far, far) == approx(2.0)


def test_log_balance_is_odd_without_bias():
    rng = np.random.default_rng(9)
    values = np.concatenate([rng.normal(scale=5.0, size=500), rng.uniform(-1e4, 1e4, size=500)])
    for t in values:
        assert log_balance(-float(t), 0.0) == -log_balance(float(t), 0.0)
    assert log_balance(math.e - 1, 0.0) == approx(1.0, abs=1e-12)
    assert log_balance(0.0, 0.0) == 0.0
