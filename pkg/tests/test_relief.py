import numpy as np
import pytest

from fobprint.errors import RankingError
from fobprint.relief import FeatureRanking, rank_features, relieff_weights
from oracles import relieff_loop


def two_class(rng, n=40):
    """Column 0 separates the classes; columns 1 and 2 are noise."""
    y = np.array(["legit"] * n + ["playback"] * n)
    x = rng.standard_normal((2 * n, 3))
    x[n:, 0] += 6.0
    return x, y


def test_informative_feature_ranks_first(rng):
    x, y = two_class(rng)
    r = rank_features(x, y, ["a", "b", "c"])
    assert r.top == "a"
    assert r.weights[0] > 0 and r.weights[0] == max(r.weights)


@pytest.mark.parametrize("k", [1, 5, 10])
def test_matches_loop_oracle(rng, k):
    x, y = two_class(rng, 15)
    np.testing.assert_allclose(relieff_weights(x, y, k), relieff_loop(x, y, k), atol=1e-12)


def test_three_classes_unbalanced(rng):
    x = rng.standard_normal((33, 4))
    y = ["legit"] * 20 + ["playback"] * 8 + ["digital_relay"] * 5
    np.testing.assert_allclose(relieff_weights(x, y, 10), relieff_loop(x, y, 10), atol=1e-12)


def test_weights_bounded(rng):
    x, y = two_class(rng)
    w = relieff_weights(x, y)
    assert np.all(np.abs(w) <= 1.0)


def test_scale_invariant(rng):
    x, y = two_class(rng)
    a = relieff_weights(x, y)
    b = relieff_weights(x * np.array([1e3, 2.0, 1e-4]), y)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_constant_column_weighs_zero(rng):
    x, y = two_class(rng)
    x[:, 2] = 7.0
    assert relieff_weights(x, y)[2] == 0.0


def test_single_class_fails(rng):
    with pytest.raises(RankingError):
        relieff_weights(rng.standard_normal((10, 2)), ["legit"] * 10)


def test_bad_shapes(rng):
    with pytest.raises(RankingError):
        relieff_weights(rng.standard_normal((10, 2)), ["legit"] * 9)
    with pytest.raises(RankingError):
        rank_features(rng.standard_normal((10, 2)), ["a", "b"] * 5, ["only_one"])
    with pytest.raises(RankingError):
        relieff_weights(np.r_[[[np.nan, 1.0]], np.ones((3, 2))], ["a", "b", "a", "b"])


def test_ranking_contract():
    r = FeatureRanking(("x", "y"), (0.5, 0.1))
    assert r.as_dict() == {"x": 0.5, "y": 0.1}
    with pytest.raises(RankingError):
        FeatureRanking(("x",), (0.5, 0.1))
