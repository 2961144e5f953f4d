import json

import numpy as np
import pytest

from bayesassess.pool import (CostMatrix, IngestError, PartitionError,
                              PartitionSpec, assign_groups, build_pool,
                              estimate_group_weights, ingest_predictions,
                              load_cost_matrix, make_record, score_bin_of)
from bayesassess.synth import SynthSpec, synth_pool


def write_jsonl(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


class TestIngest:
    def test_three_line_jsonl(self, tmp_path):
        path = write_jsonl(tmp_path / "p.jsonl", [
            {"id": "a", "scores": [0.7, 0.3]},
            {"id": "b", "scores": [0.2, 0.8], "label": 1},
            {"id": "c", "scores": [0.5, 0.5], "attributes": {"gender": "F"}},
        ])
        pool = ingest_predictions(path, "jsonl")
        assert len(pool) == 3
        assert pool.num_classes == 2
        assert pool.record("b").label == 1
        assert pool.record("c").attributes == {"gender": "F"}

    def test_unnormalized_scores_name_the_row(self, tmp_path):
        path = write_jsonl(tmp_path / "p.jsonl", [
            {"id": "a", "scores": [0.7, 0.3]},
            {"id": "bad", "scores": [0.5, 0.6]},
        ])
        with pytest.raises(IngestError, match="line 2"):
            ingest_predictions(path, "jsonl")

    def test_label_out_of_range(self, tmp_path):
        path = write_jsonl(tmp_path / "p.jsonl", [
            {"id": "a", "scores": [0.2, 0.2, 0.2, 0.2, 0.2], "label": 7},
        ])
        with pytest.raises(IngestError, match="label 7"):
            ingest_predictions(path, "jsonl")

    def test_duplicate_id(self, tmp_path):
        path = write_jsonl(tmp_path / "p.jsonl", [
            {"id": "a", "scores": [0.7, 0.3]},
            {"id": "a", "scores": [0.6, 0.4]},
        ])
        with pytest.raises(IngestError, match="duplicate"):
            ingest_predictions(path, "jsonl")

    def test_inconsistent_k(self, tmp_path):
        path = write_jsonl(tmp_path / "p.jsonl", [
            {"id": "a", "scores": [0.7, 0.3]},
            {"id": "b", "scores": [0.5, 0.25, 0.25]},
        ])
        with pytest.raises(IngestError, match="length 3"):
            ingest_predictions(path, "jsonl")

    def test_csv_roundtrip_of_semantics(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("id,score_0,score_1,label\nx,0.9,0.1,0\ny,0.4,0.6,\n")
        pool = ingest_predictions(path, "csv")
        assert pool.record("x").label == 0
        assert pool.record("y").label is None
        assert pool.record("y").predicted == 1

    def test_jsonl_roundtrip_reproduces_groups(self, tmp_path):
        pool = synth_pool(SynthSpec(num_classes=4, size=200, seed=3,
                                    accuracy_profile=(0.9, 0.7, 0.6, 0.5)))
        out = tmp_path / "out.jsonl"
        pool.to_jsonl(out)
        again = ingest_predictions(out, "jsonl")
        spec = PartitionSpec(kind="class-and-bin", num_bins=10)
        before, after = assign_groups(pool, spec), assign_groups(again, spec)
        assert before.group_of == after.group_of
        for a, b in zip(pool, again):
            assert a.predicted == b.predicted
            assert a.confidence == pytest.approx(b.confidence, abs=1e-12)


class TestRecords:
    def test_argmax_tie_breaks_low_index(self):
        rec = make_record("t", [0.4, 0.4, 0.2])
        assert rec.predicted == 0

    def test_tie_break_stable_under_permuting_other_rows(self):
        # permuting two equal entries never changes y-hat for other records
        a = make_record("a", [0.25, 0.25, 0.5])
        b = make_record("b", [0.5, 0.25, 0.25])
        assert a.predicted == 2 and b.predicted == 0

    def test_scores_renormalized_within_tolerance(self):
        rec = make_record("n", [0.5000004, 0.5000001])
        assert rec.scores.sum() == pytest.approx(1.0, abs=1e-15)


class TestPartitions:
    def test_predicted_class_groups(self):
        pool = build_pool([
            make_record("a", [0.7, 0.2, 0.1]),
            make_record("b", [0.1, 0.8, 0.1]),
            make_record("c", [0.2, 0.2, 0.6]),
        ])
        index = assign_groups(pool, PartitionSpec(kind="predicted-class"))
        assert index.num_groups == 3
        assert [index.group_of[i] for i in ("a", "b", "c")] == [0, 1, 2]

    def test_last_bin_closed_at_one(self):
        assert score_bin_of(1.0, 10) == 9
        assert score_bin_of(0.999999, 10) == 9
        assert score_bin_of(0.0, 10) == 0

    def test_hand_counted_bin_weights(self):
        # confidences {0.05, 0.55, 0.55, 0.95} over B=10 bins; K=20 so a
        # confidence of 0.05 is attainable (max score >= 1/K)
        pool = build_pool([
            make_record("a", _conf_vec(0.05, 20)),
            make_record("b", _conf_vec(0.55, 20)),
            make_record("c", _conf_vec(0.55, 20)),
            make_record("d", _conf_vec(0.95, 20)),
        ])
        index = assign_groups(pool, PartitionSpec(kind="score-bin", num_bins=10))
        expected = [0.25, 0, 0, 0, 0, 0.5, 0, 0, 0, 0.25]
        assert np.allclose(index.weights, expected)

    def test_partition_exhaustive_and_disjoint(self):
        pool = synth_pool(SynthSpec(num_classes=5, size=300, seed=8,
                                    accuracy_profile=(0.9, 0.8, 0.7, 0.6, 0.5)))
        for spec in (PartitionSpec(kind="predicted-class"),
                     PartitionSpec(kind="score-bin", num_bins=7),
                     PartitionSpec(kind="class-and-bin", num_bins=4)):
            index = assign_groups(pool, spec)
            counted = sum(len(m) for m in index.members)
            assert counted == len(pool)
            assert len(index.group_of) == len(pool)
            for g, members in enumerate(index.members):
                for pos in members:
                    assert index.group_of[pool.records[pos].id] == g

    def test_class_and_bin_keeps_empty_groups(self):
        pool = build_pool([make_record("a", _conf_vec(0.9, 3))])
        index = assign_groups(pool, PartitionSpec(kind="class-and-bin", num_bins=10))
        assert index.num_groups == 30
        assert index.weights.sum() == pytest.approx(1.0)
        assert (index.weights == 0).sum() == 29

    def test_attribute_partition(self):
        pool = build_pool([
            make_record("a", [0.6, 0.4], attributes={"site": "x"}),
            make_record("b", [0.6, 0.4], attributes={"site": "y"}),
        ])
        index = assign_groups(pool, PartitionSpec(kind="attribute", attribute_name="site"))
        assert index.names == ("site=x", "site=y")

    def test_attribute_missing_errors(self):
        pool = build_pool([
            make_record("a", [0.6, 0.4], attributes={"site": "x"}),
            make_record("b", [0.6, 0.4]),
        ])
        with pytest.raises(PartitionError, match="missing attribute"):
            assign_groups(pool, PartitionSpec(kind="attribute", attribute_name="site"))


class TestWeights:
    def test_simple_frequencies(self):
        pool = build_pool(
            [make_record(f"a{i}", [0.9, 0.1]) for i in range(6)]
            + [make_record(f"b{i}", [0.1, 0.9]) for i in range(4)])
        index = assign_groups(pool, PartitionSpec(kind="predicted-class"))
        assert np.allclose(estimate_group_weights(index), [0.6, 0.4])

    def test_uniform_pool_concentrates(self):
        pool = synth_pool(SynthSpec(num_classes=10, size=1000, seed=17,
                                    accuracy_profile=tuple([0.8] * 10)))
        index = assign_groups(pool, PartitionSpec(kind="predicted-class"))
        weights = estimate_group_weights(index)
        assert np.all(np.abs(weights - 0.1) < 0.05)


class TestCostMatrix:
    def test_zero_one_matrix(self):
        cm = CostMatrix.zero_one(3)
        assert cm.c.diagonal().sum() == 0
        assert cm.column(1).tolist() == [1.0, 0.0, 1.0]

    def test_load_and_validate(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("0,1\n10,0\n")
        cm = load_cost_matrix(path)
        assert cm.c[1, 0] == 10

    def test_human_style_matrix_100(self, tmp_path):
        # person rows cost 10x, everything else 1, zero diagonal
        k, person = 100, range(10)
        c = np.ones((k, k))
        for j in person:
            c[j, :] = 10.0
        np.fill_diagonal(c, 0.0)
        path = tmp_path / "human.csv"
        with open(path, "w") as fh:
            for row in c:
                fh.write(",".join(str(v) for v in row) + "\n")
        cm = load_cost_matrix(path)
        assert cm.num_classes == 100
        assert cm.c[0, 50] == 10.0 and cm.c[50, 0] == 1.0

    def test_negative_entry_rejected(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("0,1\n-1,0\n")
        with pytest.raises(ValueError, match="non-negative"):
            load_cost_matrix(path)

    def test_non_square_rejected(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("0,1,2\n1,0,2\n")
        with pytest.raises(ValueError, match="square"):
            load_cost_matrix(path)


def _conf_vec(confidence, k):
    rest = (1.0 - confidence) / (k - 1)
    return [confidence] + [rest] * (k - 1)
