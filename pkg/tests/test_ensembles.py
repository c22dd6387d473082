"""Ensemble behavior: Poisson weighting, vote combination, detector-driven
member replacement, and chunk weighting."""

import math

import numpy as np
import pytest

import olstream.ensembles as ensembles_module
from olstream import (
    AdaptiveRandomForest,
    ChunkWeightedEnsemble,
    HoeffdingTreeClassifier,
    InvalidArgumentError,
    MajorityClass,
    OzaBagging,
    SeaConcept,
    SeaStream,
    ensemble_predict,
    make_rng,
    poisson_draw,
)
from olstream.evaluate import _make_sea


# ---------------------------------------------------------------------------
# Poisson draws
# ---------------------------------------------------------------------------


def test_poisson_zero_probability_matches_closed_form():
    rng = make_rng(0)
    draws = [poisson_draw(1.0, rng) for _ in range(100000)]
    zero_freq = draws.count(0) / len(draws)
    assert abs(zero_freq - math.exp(-1.0)) <= 0.01


def test_poisson_mean_at_rate_six():
    rng = make_rng(1)
    draws = [poisson_draw(6.0, rng) for _ in range(100000)]
    assert 5.9 <= float(np.mean(draws)) <= 6.1


def test_poisson_is_deterministic_per_seed():
    a = [poisson_draw(2.5, make_rng(3)) for _ in range(1)]
    first = [poisson_draw(2.5, rng) for rng in [make_rng(9)] for _ in range(50)]
    rng = make_rng(9)
    second = [poisson_draw(2.5, rng) for _ in range(50)]
    rng = make_rng(9)
    assert second == [poisson_draw(2.5, rng) for _ in range(50)]


def test_poisson_rejects_non_positive_rate():
    with pytest.raises(InvalidArgumentError):
        poisson_draw(0.0, make_rng(0))


# ---------------------------------------------------------------------------
# Vote combination
# ---------------------------------------------------------------------------


def test_single_member_vote_is_identity():
    assert np.allclose(ensemble_predict([[0.8, 0.2]], [1.0]), [0.8, 0.2])


def test_equal_weight_average():
    combined = ensemble_predict([[0.8, 0.2], [0.4, 0.6]], [1.0, 1.0])
    assert np.allclose(combined, [0.6, 0.4])


def test_zero_weight_member_is_excluded():
    combined = ensemble_predict([[0.8, 0.2], [0.1, 0.9]], [1.0, 0.0])
    assert np.allclose(combined, [0.8, 0.2])


def test_all_zero_weights_fall_back_to_unweighted():
    combined = ensemble_predict([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    assert np.allclose(combined, [0.5, 0.5])


def test_combined_vote_is_a_probability_vector():
    rng = make_rng(4)
    for _ in range(50):
        probas = rng.random((3, 4))
        probas /= probas.sum(axis=1, keepdims=True)
        combined = ensemble_predict(probas, rng.random(3))
        assert abs(combined.sum() - 1.0) <= 1e-9
        assert np.all(combined >= 0)


# ---------------------------------------------------------------------------
# Online bagging
# ---------------------------------------------------------------------------


def test_single_member_with_unit_weight_equals_base(monkeypatch):
    monkeypatch.setattr(ensembles_module, "poisson_draw", lambda lam, rng: 1)
    rng = make_rng(5)
    X = rng.random((50, 3))
    y = [int(v) for v in rng.integers(2, size=50)]

    bag = OzaBagging(base=HoeffdingTreeClassifier(n_classes=2), n_members=1, seed=0)
    solo = HoeffdingTreeClassifier(n_classes=2)
    bag.fit(X, y)
    solo.fit(X, y)
    for _ in range(300):
        x = rng.random(3)
        label = int(x[0] > 0.5)
        assert np.allclose(bag.predict_proba(x), solo.predict_proba(x))
        bag.partial_fit(x, label)
        solo.partial_fit(x, label)


def test_bagging_members_stay_constant_and_seeded():
    rng = make_rng(6)
    X = rng.random((30, 2))
    y = [int(v) for v in rng.integers(2, size=30)]
    a = OzaBagging(base=MajorityClass(n_classes=2), n_members=5, seed=9).fit(X, y)
    b = OzaBagging(base=MajorityClass(n_classes=2), n_members=5, seed=9).fit(X, y)
    for _ in range(100):
        x = rng.random(2)
        label = int(rng.integers(2))
        a.partial_fit(x, label)
        b.partial_fit(x, label)
    assert len(a.members_) == 5
    probe = rng.random(2)
    assert np.array_equal(a.predict_proba(probe), b.predict_proba(probe))


# ---------------------------------------------------------------------------
# Adaptive random forest
# ---------------------------------------------------------------------------


def _drifting_stream(seed):
    return _make_sea(seed, threshold=8.0, drift_at=1500, threshold_after=11.0)


def _run_arf(arf, stream, n):
    pre = stream.take(300)
    X = np.stack([p.features for p in pre])
    arf.fit(X, [p.label for p in pre])
    preds = []
    for _ in range(n):
        inst = next(stream)
        preds.append(arf.predict(inst.features))
        arf.partial_fit(inst.features, inst.label)
    return preds


def test_arf_is_deterministic_for_a_seed():
    a = AdaptiveRandomForest(n_classes=2, n_members=3, seed=11)
    b = AdaptiveRandomForest(n_classes=2, n_members=3, seed=11)
    preds_a = _run_arf(a, _drifting_stream(2), 2500)
    preds_b = _run_arf(b, _drifting_stream(2), 2500)
    assert preds_a == preds_b
    assert a.n_replacements_ == b.n_replacements_


def test_arf_member_count_is_constant_and_drift_triggers_replacement():
    arf = AdaptiveRandomForest(n_classes=2, n_members=3, seed=11)
    _run_arf(arf, _drifting_stream(2), 3000)
    assert len(arf.members_) == 3
    assert arf.n_replacements_ >= 1


def test_arf_zero_poisson_weight_leaves_members_unchanged(monkeypatch):
    arf = AdaptiveRandomForest(n_classes=2, n_members=3, seed=1)
    stream = SeaStream(SeaConcept(8.0), seed=3)
    pre = stream.take(200)
    X = np.stack([p.features for p in pre])
    arf.fit(X, [p.label for p in pre])

    inst = next(stream)
    probe = next(stream).features
    before = arf.predict_proba(probe)
    monkeypatch.setattr(ensembles_module, "poisson_draw", lambda lam, rng: 0)
    arf.partial_fit(inst.features, inst.label)
    assert np.array_equal(arf.predict_proba(probe), before)
    assert all(m.warning.n_ == 1 for m in arf.members_)  # detectors still fed


def test_arf_masks_are_sqrt_sized_and_srp_uses_fraction():
    rng = make_rng(12)
    X = rng.random((100, 9))
    y = [int(v) for v in rng.integers(2, size=100)]
    arf = AdaptiveRandomForest(n_classes=2, n_members=4, seed=0).fit(X, y)
    assert all(len(m.mask) == 3 for m in arf.members_)
    srp = AdaptiveRandomForest(n_classes=2, n_members=4, mode="srp",
                               subspace_fraction=0.6, seed=0).fit(X, y)
    assert all(len(m.mask) == 5 for m in srp.members_)


def test_srp_mode_replaces_without_background():
    srp = AdaptiveRandomForest(n_classes=2, n_members=3, mode="srp", seed=4)
    _run_arf(srp, _drifting_stream(2), 3000)
    assert all(m.background is None for m in srp.members_)
    assert srp.n_replacements_ >= 1


def test_arf_stationary_stream_triggers_no_replacements():
    """On a clean stationary stream the detectors stay quiet for 10k steps."""
    arf = AdaptiveRandomForest(n_classes=2, n_members=3, seed=0)
    stream = _make_sea(50, threshold=8.0)
    pre = stream.take(500)
    arf.fit(np.stack([p.features for p in pre]), [p.label for p in pre])
    for _ in range(9500):
        inst = next(stream)
        arf.partial_fit(inst.features, inst.label)
    assert arf.n_replacements_ == 0


# ---------------------------------------------------------------------------
# Chunk-weighted ensemble
# ---------------------------------------------------------------------------


class _StubLearner:
    """Fixed decision rule; enough surface for weighting and prediction."""

    def __init__(self, rule):
        self.rule = rule

    def predict_proba(self, x):
        return np.asarray(self.rule(x), dtype=np.float64)


def _chunk_ensemble_with_stubs(stubs, chunk):
    ensemble = ChunkWeightedEnsemble(base=MajorityClass(n_classes=2),
                                     n_classes=2, chunk_size=len(chunk),
                                     max_members=10)
    X0 = np.zeros((2, 1))
    ensemble.fit(X0, [0, 1])
    ensemble.members_ = list(stubs)
    ensemble.weights_ = [1.0] * len(stubs)
    for x, label in chunk:
        ensemble.partial_fit(np.asarray(x, dtype=float), label)
    return ensemble


def _balanced_chunk(n=100):
    # Class equals the sign of the single feature.
    return [((-1.0,), 0) if i % 2 == 0 else ((1.0,), 1) for i in range(n)]


def test_perfect_member_weight_equals_reference_error():
    perfect = _StubLearner(lambda x: [1.0, 0.0] if x[0] < 0 else [0.0, 1.0])
    ensemble = _chunk_ensemble_with_stubs([perfect], _balanced_chunk())
    # Balanced binary chunk: mse_r = 0.5; a perfect member scores the full reference.
    assert ensemble.weights_[0] == pytest.approx(0.5)


def test_uniform_member_weight_on_balanced_binary_chunk():
    uniform = _StubLearner(lambda x: [0.5, 0.5])
    ensemble = _chunk_ensemble_with_stubs([uniform], _balanced_chunk())
    assert ensemble.weights_[0] == pytest.approx(0.25)  # 0.5 - 0.25


def test_worse_than_random_member_weight_clamps_to_zero():
    wrong = _StubLearner(lambda x: [0.0, 1.0] if x[0] < 0 else [1.0, 0.0])
    ensemble = _chunk_ensemble_with_stubs([wrong], _balanced_chunk())
    assert ensemble.weights_[0] == 0.0


def test_perfect_member_outweighs_everyone():
    perfect = _StubLearner(lambda x: [1.0, 0.0] if x[0] < 0 else [0.0, 1.0])
    uniform = _StubLearner(lambda x: [0.5, 0.5])
    ensemble = _chunk_ensemble_with_stubs([perfect, uniform], _balanced_chunk())
    assert ensemble.weights_[0] >= max(ensemble.weights_)


def test_single_class_chunk_gives_new_member_the_floor_weight():
    chunk = [((1.0,), 1)] * 40
    ensemble = _chunk_ensemble_with_stubs([_StubLearner(lambda x: [0.5, 0.5])], chunk)
    assert ensemble.weights_[-1] == pytest.approx(ChunkWeightedEnsemble.WEIGHT_FLOOR)


def test_chunk_ensemble_respects_max_members_and_evicts_lowest():
    rng = make_rng(14)
    ensemble = ChunkWeightedEnsemble(base=MajorityClass(n_classes=2), n_classes=2,
                                     chunk_size=20, max_members=3)
    X = rng.random((10, 2))
    ensemble.fit(X, [int(v) for v in rng.integers(2, size=10)])
    for _ in range(200):
        x = rng.random(2)
        ensemble.partial_fit(x, int(x[0] > 0.5))
        assert len(ensemble.members_) <= 3
    assert all(w >= 0 for w in ensemble.weights_)


def test_chunk_ensemble_buffer_commits_on_boundary():
    ensemble = ChunkWeightedEnsemble(base=MajorityClass(n_classes=2),
                                     n_classes=2, chunk_size=10, max_members=5)
    rng = make_rng(15)
    ensemble.fit(rng.random((4, 2)), [0, 1, 0, 1])
    for i in range(9):
        ensemble.partial_fit(rng.random(2), i % 2)
    assert len(ensemble.members_) == 1
    ensemble.partial_fit(rng.random(2), 1)
    assert len(ensemble.members_) == 2
    assert len(ensemble._buffer_x) == 0
