"""Voting, signal-length classification, sweeps, and the latency benchmark."""

import numpy as np
import pytest

from emgrt.errors import ConfigError, UnsupportedLengthError, WindowingError
from emgrt.model_io import load_model, save_model
from emgrt.postprocess import (
    Decision,
    bench_latency,
    classify_signal,
    majority_vote,
    per_class_accuracy,
    sweep,
)
from emgrt.reports import sweep_table, sweep_to_dict, write_sweep_csv
from emgrt.signal import Recording

from oracles import naive_vote


def _decisions(predictions):
    out = []
    for i, p in enumerate(predictions):
        probs = np.full(4, 0.1)
        probs[p] = 0.7
        out.append(Decision.from_probabilities(i, probs))
    return out


class TestMajorityVote:
    def test_simple_majority(self):
        assert majority_vote(_decisions([1, 1, 2])) == 1

    def test_single_decision(self):
        assert majority_vote(_decisions([2])) == 2

    def test_tie_breaks_to_lowest_class(self):
        assert majority_vote(_decisions([3, 1, 3, 1])) == 1

    def test_empty_rejected(self):
        with pytest.raises(ConfigError, match="at least one"):
            majority_vote([])

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(30)
        for _ in range(200):
            preds = list(rng.integers(0, 4, size=rng.integers(1, 30)))
            assert majority_vote(_decisions(preds)) == naive_vote(preds)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(31)
        preds = list(rng.integers(0, 4, size=15))
        base = majority_vote(_decisions(preds))
        for _ in range(10):
            rng.shuffle(preds)
            assert majority_vote(_decisions(preds)) == base

    def test_duplicating_the_winner_never_changes_the_vote(self):
        rng = np.random.default_rng(32)
        for _ in range(50):
            preds = list(rng.integers(0, 4, size=rng.integers(1, 20)))
            winner = majority_vote(_decisions(preds))
            assert majority_vote(_decisions(preds + [winner])) == winner


class TestClassifySignal:
    def test_600ms_same_mode_votes_eleven_decisions(self, tiny_model, tiny_split):
        _, test_recs = tiny_split
        label, decisions = classify_signal(test_recs[0], tiny_model, 600)
        assert len(decisions) == 11
        assert label == majority_vote(decisions)

    def test_300ms_sequential_gives_exactly_one_decision(self, tiny_model_seq, tiny_split):
        _, test_recs = tiny_split
        label, decisions = classify_signal(test_recs[0], tiny_model_seq, 300)
        assert len(decisions) == 1
        assert label == decisions[0].predicted

    def test_250ms_sequential_is_unsupported(self, tiny_model_seq, tiny_split):
        _, test_recs = tiny_split
        with pytest.raises(UnsupportedLengthError):
            classify_signal(test_recs[0], tiny_model_seq, 250)

    def test_recording_shorter_than_requested_length(self, tiny_model):
        rec = Recording(samples=np.zeros((2, 800)), sample_rate=4000.0, label=0)
        with pytest.raises(WindowingError, match="cannot classify"):
            classify_signal(rec, tiny_model, 600)

    def test_decisions_are_deterministic(self, tiny_model, tiny_split):
        _, test_recs = tiny_split
        a = classify_signal(test_recs[1], tiny_model, 400)
        b = classify_signal(test_recs[1], tiny_model, 400)
        assert a[0] == b[0]
        for da, db in zip(a[1], b[1]):
            np.testing.assert_array_equal(da.probabilities, db.probabilities)

    def test_end_to_end_beats_chance(self, tiny_model, tiny_split):
        _, test_recs = tiny_split
        hits = sum(
            1 for rec in test_recs if classify_signal(rec, tiny_model, 600)[0] == rec.label
        )
        assert hits / len(test_recs) > 0.5


class TestSweep:
    LENGTHS = [100, 150, 200, 250, 300, 350, 400, 450, 500, 550, 600]

    def test_rows_and_dashes(self, tiny_model, tiny_model_seq, tiny_split):
        _, test_recs = tiny_split
        report = sweep(
            {"brnn-same": tiny_model, "rnn-sequential": tiny_model_seq},
            test_recs,
            self.LENGTHS,
        )
        same_row = next(r for r in report.rows if r.name == "brnn-same")
        seq_row = next(r for r in report.rows if r.name == "rnn-sequential")
        assert all(same_row.accuracy[m] is not None for m in self.LENGTHS)
        for m in (100, 150, 200, 250):
            assert seq_row.accuracy[m] is None
        for m in (300, 600):
            assert seq_row.accuracy[m] is not None

    def test_accuracy_matches_direct_recount(self, tiny_model, tiny_split):
        _, test_recs = tiny_split
        report = sweep({"m": tiny_model}, test_recs, [300, 600])
        for length in (300, 600):
            hits = sum(
                1 for rec in test_recs if classify_signal(rec, tiny_model, length)[0] == rec.label
            )
            assert report.rows[0].accuracy[length] == pytest.approx(100.0 * hits / len(test_recs))

    def test_confusion_trace_equals_overall_accuracy(self, tiny_model, tiny_split):
        _, test_recs = tiny_split
        per_class, confusion = per_class_accuracy(tiny_model, test_recs, 600)
        total = confusion.sum()
        overall = 100.0 * np.trace(confusion) / total
        report = sweep({"m": tiny_model}, test_recs, [600])
        assert report.rows[0].accuracy[600] == pytest.approx(overall)
        assert total == len(test_recs)
        assert set(per_class) == {0, 1}

    def test_report_serialization_shapes(self, tiny_model, tiny_split, tmp_path):
        _, test_recs = tiny_split
        report = sweep({"brnn-same": tiny_model}, test_recs, [100, 600], per_class_length=600)
        table = sweep_table(report)
        assert "brnn-same" in table and "100" in table and "600" in table
        d = sweep_to_dict(report)
        assert d["rows"][0]["accuracy_pct"]["600"] is not None
        assert "brnn-same" in d["confusion"]
        csv_path = tmp_path / "sweep.csv"
        write_sweep_csv(csv_path, report)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "structure,arch,input_mode,100,600"
        assert len(lines) == 2


class TestModelRoundTrip:
    def test_save_load_preserves_everything(self, tiny_model, tiny_split, tmp_path):
        path = tmp_path / "model.json"
        save_model(path, tiny_model)
        back = load_model(path)
        assert back.arch == tiny_model.arch
        assert back.input_mode == tiny_model.input_mode
        assert back.dims == tiny_model.dims
        np.testing.assert_array_equal(back.normalizer.mean, tiny_model.normalizer.mean)
        for ua, ub in zip(tiny_model.units, back.units):
            np.testing.assert_array_equal(ua.w0, ub.w0)
            np.testing.assert_array_equal(ua.wa_back, ub.wa_back)
        # identical decisions after the round trip
        _, test_recs = tiny_split
        assert (
            classify_signal(test_recs[0], back, 600)[0]
            == classify_signal(test_recs[0], tiny_model, 600)[0]
        )

    def test_save_twice_is_byte_identical(self, tiny_model, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_model(p1, tiny_model)
        save_model(p2, tiny_model)
        assert p1.read_bytes() == p2.read_bytes()


class TestBenchLatency:
    def test_report_shape_and_positivity(self, tiny_model, tiny_split):
        _, test_recs = tiny_split
        report = bench_latency(tiny_model, test_recs[0], iterations=3, signal_length_ms=600)
        assert report.windows_per_iteration == 11
        assert report.decisions_per_iteration == 11
        for summary in (report.feature_extraction, report.classification):
            assert summary.mean_ms > 0
            assert summary.p95_ms >= summary.p50_ms >= 0
