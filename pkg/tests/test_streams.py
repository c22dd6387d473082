"""Generator determinism, labeling rules, drift mixing, and CSV round-trips."""

import math

import numpy as np
import pytest

from olstream import (
    CsvStream,
    DriftSchedule,
    EmptySeriesError,
    HyperplaneConcept,
    HyperplaneStream,
    ParseError,
    SchemaError,
    SeaConcept,
    SeaStream,
    concept_mix,
    hyperplane_label,
    sea_label,
    write_stream_csv,
)


def test_sea_label_rule():
    assert sea_label(3.0, 4.0, 8.0) == 1
    assert sea_label(6.0, 5.0, 8.0) == 0
    assert sea_label(4.0, 4.0, 8.0) == 1  # boundary is inclusive


def test_hyperplane_label_rule():
    assert hyperplane_label([1.0, 0.0], [1.0, 0.0], 0.0) == 1
    assert hyperplane_label([-1.0, 0.0], [1.0, 0.0], 0.0) == 0
    assert hyperplane_label([0.0, 0.0], [1.0, 1.0], 0.0) == 1  # boundary -> class 1


def test_hyperplane_label_dimension_mismatch():
    with pytest.raises(SchemaError):
        hyperplane_label([1.0, 2.0, 3.0], [1.0, 0.0], 0.0)


def _schedule(position, width):
    return DriftSchedule(position, width, SeaConcept(8.0), SeaConcept(9.5))


def test_concept_mix_sigmoid_midpoint():
    assert concept_mix(1000, _schedule(1000, 1000)) == pytest.approx(0.5)


def test_concept_mix_abrupt():
    sched = _schedule(100, 0)
    assert concept_mix(99, sched) == 0.0
    assert concept_mix(100, sched) == 1.0


def test_concept_mix_one_width_past_midpoint():
    # Closed-form evaluation of the mixing curve.
    expected = 1.0 / (1.0 + math.exp(-4.0))
    assert concept_mix(2000, _schedule(1000, 1000)) == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(0.98201, abs=1e-5)


def test_sea_stream_is_deterministic_for_a_seed():
    first = SeaStream(seed=7).take(50)
    second = SeaStream(seed=7).take(50)
    assert first == second
    assert [inst.index for inst in first] == list(range(50))


def test_sea_noise_free_abrupt_drift_follows_each_concept_exactly():
    before, after = SeaConcept(8.0, 0.0), SeaConcept(9.5, 0.0)
    stream = SeaStream(before, drift=DriftSchedule(200, 0, before, after), seed=3)
    for inst in stream.take(400):
        concept = before if inst.index < 200 else after
        assert inst.label == sea_label(inst.features[0], inst.features[1], concept.threshold)


def test_sea_label_noise_flips_at_the_configured_rate():
    stream = SeaStream(SeaConcept(8.0, 0.2), seed=5)
    flips = 0
    for inst in stream.take(5000):
        if inst.label != sea_label(inst.features[0], inst.features[1], 8.0):
            flips += 1
    assert 0.17 <= flips / 5000 <= 0.23


def test_empirical_mixing_frequency_matches_concept_mix():
    """At a fixed step the concept choice is Bernoulli(concept_mix(t))."""
    before, after = SeaConcept(0.5, 0.0), SeaConcept(19.5, 0.0)
    schedule = DriftSchedule(3, 2, before, after)
    t = 3
    expected = concept_mix(t, schedule)
    drew_after = 0
    total = 0
    for seed in range(10000):
        inst = SeaStream(before, drift=schedule, seed=seed).take(t + 1)[t]
        f1, f2 = inst.features[0], inst.features[1]
        # Only instances where the two concepts disagree identify the draw.
        if sea_label(f1, f2, before.threshold) == sea_label(f1, f2, after.threshold):
            continue
        total += 1
        if inst.label == sea_label(f1, f2, after.threshold):
            drew_after += 1
    assert total > 9000
    assert abs(drew_after / total - expected) <= 0.02


def test_hyperplane_stream_boundary_and_determinism():
    concept = HyperplaneConcept((1.0, -1.0), 0.0)
    a = HyperplaneStream(concept, seed=11).take(200)
    b = HyperplaneStream(concept, seed=11).take(200)
    assert a == b
    for inst in a:
        assert inst.label == hyperplane_label(inst.features, concept.weights, concept.bias)


def test_hyperplane_concept_rejects_all_zero_weights():
    with pytest.raises(SchemaError):
        HyperplaneConcept((0.0, 0.0), 1.0)


def test_csv_round_trip_reproduces_the_stream(tmp_path):
    path = tmp_path / "sea.csv"
    original = SeaStream(seed=9).take(100)
    write_stream_csv(original, path)
    stream = CsvStream(path)
    replayed = stream.take(100)
    assert replayed == original
    with pytest.raises(StopIteration):
        next(stream)


def test_csv_stream_counts_rows(tmp_path):
    path = tmp_path / "data.csv"
    write_stream_csv(SeaStream(seed=1).take(100), path)
    assert len(CsvStream(path)) == 100


def test_csv_parse_error_reports_row_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("f0,f1,label\n1.0,abc,0\n", encoding="utf-8")
    with pytest.raises(ParseError) as err:
        CsvStream(path)
    assert err.value.row == 1


def test_csv_rejects_non_finite_values(tmp_path):
    path = tmp_path / "inf.csv"
    path.write_text("f0,f1,label\n1.0,inf,0\n", encoding="utf-8")
    with pytest.raises(ParseError):
        CsvStream(path)


def test_csv_missing_label_column(tmp_path):
    path = tmp_path / "nolabel.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        CsvStream(path)


def test_csv_schema_inference(tmp_path):
    clf = tmp_path / "clf.csv"
    clf.write_text("f0,label\n0.5,0\n0.25,2\n", encoding="utf-8")
    schema = CsvStream(clf).schema
    assert schema.is_classification and schema.n_classes == 3

    reg = tmp_path / "reg.csv"
    reg.write_text("f0,label\n0.5,1.25\n0.25,-0.5\n", encoding="utf-8")
    assert not CsvStream(reg).schema.is_classification


def test_csv_headerless_with_index_label_column(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("0.5,1.5,1\n0.25,0.75,0\n", encoding="utf-8")
    stream = CsvStream(path, label_column=2, has_header=False)
    instances = stream.take(2)
    assert instances[0].label == 1
    assert np.allclose(instances[0].features, [0.5, 1.5])


def test_csv_shuffle_is_seeded(tmp_path):
    path = tmp_path / "data.csv"
    write_stream_csv(SeaStream(seed=2).take(50), path)
    a = [inst.label for inst in CsvStream(path, shuffle_seed=3).take(50)]
    b = [inst.label for inst in CsvStream(path, shuffle_seed=3).take(50)]
    c = [inst.label for inst in CsvStream(path, shuffle_seed=4).take(50)]
    assert a == b
    assert a != c


def test_write_stream_csv_rejects_empty(tmp_path):
    with pytest.raises(EmptySeriesError):
        write_stream_csv([], tmp_path / "out.csv")
