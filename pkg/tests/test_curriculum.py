import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from rlcs.curriculum import (
    AllTiersEmpty, CurriculumState, PoolExhausted, TaskSample, TierOutOfRange, bucket, draw_batch,
    grade_offline, grade_online, reweight, sample_from_record, tier_populations,
)

S = CurriculumState()


def sample(i, tier, rate=0.5):
    return TaskSample(f"s{i:04d}", "math", "p", "r", offline_tier=tier, blended_pass_rate=rate)


def test_bucket_edges():
    assert [bucket(r, S.tier_edges) for r in (0.0, 0.1, 0.29, 0.3, 0.75, 0.9, 1.0)] == [0, 1, 1, 2, 3, 4, 4]


def test_grade_offline_examples():
    assert grade_offline({"a": 0.75}) == {"a": 3}
    assert grade_offline({"a": 0.75}, {"a": 1}) == {"a": 2}
    assert grade_offline({"a": 0.0}) == {"a": 0}
    assert grade_offline({"a": 0.75}, {"a": 0}) == {"a": 2}  # 1.5 rounds half up
    with pytest.raises(TierOutOfRange):
        grade_offline({"a": 0.5}, {"a": 5})


def test_grade_online_examples():
    s = grade_online(sample(0, 2, 0.5), 6, 8, S)
    assert s.blended_pass_rate == pytest.approx(0.55, abs=1e-15)
    assert s.exposures == 1 and s.tier == 2
    assert grade_online(sample(0, 0, 0.0), 0, 8, CurriculumState(blend_factor=0.3)).blended_pass_rate == 0.0
    with pytest.raises(ValueError):
        grade_online(sample(0, 0), 9, 8, S)


def test_grade_online_pass_at_k():
    st_ = CurriculumState(online_metric="pass_at_k")
    assert grade_online(sample(0, 2, 0.5), 1, 8, st_).blended_pass_rate == pytest.approx(0.6)


@given(st.floats(0, 1), st.integers(0, 8), st.floats(0, 1))
def test_grade_online_contraction(old, correct, blend):
    state = CurriculumState(blend_factor=blend)
    obs = correct / 8
    new = grade_online(sample(0, 0, old), correct, 8, state).blended_pass_rate
    assert abs(new - obs) <= blend * abs(old - obs) + 1e-12


def test_reweight_examples():
    assert reweight(S, [5, 5, 5, 5, 5]).tier_weights == pytest.approx([0.1, 0.2, 0.4, 0.2, 0.1], abs=1e-15)
    w = reweight(S, [0, 5, 5, 5, 5]).tier_weights
    assert w == pytest.approx([0, 0.2 / 0.9, 0.4 / 0.9, 0.2 / 0.9, 0.1 / 0.9], abs=1e-15)
    assert reweight(S, [0, 0, 7, 0, 0]).tier_weights == (0.0, 0.0, 1.0, 0.0, 0.0)
    with pytest.raises(AllTiersEmpty):
        reweight(S, [0] * 5)


def test_easy_tier_damped_when_crowded():
    w = reweight(S, [1, 1, 1, 1, 96]).tier_weights
    assert w[4] < 0.1 * 0.5


pops = st.lists(st.integers(0, 50), min_size=5, max_size=5).filter(any)


@given(pops)
def test_weights_are_probability_vector_on_nonempty(p):
    w = reweight(S, p).tier_weights
    assert sum(w) == pytest.approx(1.0, abs=1e-12)
    assert all((wi > 0) == (pi > 0) for wi, pi in zip(w, p))


@given(pops, st.integers(1, 30))
def test_easiest_weight_nonincreasing_as_share_grows(p, moved):
    # rates rise: mass moves from a harder nonempty tier into the easiest one,
    # keeping the set of nonempty tiers fixed
    nonempty = [i for i, x in enumerate(p) if x > 0]
    easiest = nonempty[-1]
    donors = [i for i in nonempty[:-1] if p[i] > 1]
    assume(donors)
    d = donors[0]
    k = min(moved, p[d] - 1)
    q = list(p)
    q[d] -= k
    q[easiest] += k
    assert q[easiest] / sum(q) >= p[easiest] / sum(p)
    assert reweight(S, q).tier_weights[easiest] <= reweight(S, p).tier_weights[easiest] + 1e-15


def pool(n_per_tier=40):
    return [sample(i, t) for t in range(5) for i in range(t * 1000, t * 1000 + n_per_tier)]


def test_draw_batch_examples():
    only2 = CurriculumState(tier_weights=(0, 0, 1, 0, 0))
    assert {s.tier for s in draw_batch(only2, pool(), 30, 1)} == {2}
    assert draw_batch(S, pool(), 50, 9) == draw_batch(S, pool(), 50, 9)
    p = pool()
    got = draw_batch(S, p, len(p), 3)
    assert sorted(s.id for s in got) == sorted(s.id for s in p)


def test_draw_batch_exhausted_warns():
    p = pool(2)
    with pytest.warns(PoolExhausted):
        got = draw_batch(S, p, 100, 0)
    assert len(got) == len(p)


def test_draw_batch_falls_back_past_weighted_tiers():
    only2 = CurriculumState(tier_weights=(0, 0, 1, 0, 0))
    got = draw_batch(only2, pool(5), 10, 0)
    assert sum(s.tier == 2 for s in got) == 5 and len({s.id for s in got}) == 10


def test_draw_frequencies_match_weights():
    p = pool(1)  # one per tier: each draw is a fresh batch of 1
    rng = np.random.default_rng(42)
    counts = np.zeros(5)
    for _ in range(10_000):
        counts[draw_batch(S, p, 1, rng)[0].tier] += 1
    np.testing.assert_allclose(counts / 10_000, S.tier_weights, atol=0.02)


def test_tier_populations_and_records():
    p = pool(3)
    assert tier_populations(p, 5) == [3] * 5
    s = sample_from_record({"id": "x", "reference": "1", "human_tier": 0}, S, pass_rate=0.95)
    assert s.offline_tier == 2 and s.blended_pass_rate == pytest.approx(0.5)
    with pytest.raises(TierOutOfRange):
        sample_from_record({"id": "x", "offline_tier": 7}, S)


@pytest.mark.parametrize("kw", [dict(tier_edges=(0.3, 0.1)), dict(tier_edges=(0.5,), tier_weights=(0.5, 0.5), tent=(1, 1)),
                                dict(tier_weights=(1, 0, 0, 0, 0.5)), dict(blend_factor=1.5), dict(online_metric="x")])
def test_state_validation(kw):
    with pytest.raises(ValueError):
        CurriculumState(**kw)


def test_warning_free_default_draw():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        draw_batch(S, pool(), 10, 0)
