import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docsmell.corpus import SMELLS, Corpus, DocUnit, SmellLabels
from docsmell.errors import BadFeatureIndex, LengthMismatch, TooFewInstances, UnlabeledCorpus
from docsmell.evaluation import (
    EvalReport,
    cohen_kappa,
    cross_validate,
    fold_label_deviation,
    iterative_stratified_folds,
    label_metrics,
    multilabel_metrics,
    permutation_importance,
    phi_coefficient,
    phi_matrix,
    random_folds,
    reports_csv,
    reports_markdown,
)
from docsmell.pipeline import ModelSpec
from oracles import tail_capture_recall
from synth import bloated_only_corpus, benchmark_like_labels, single_label_dataset, token_determined_corpus

label_rows = st.lists(st.tuples(*[st.booleans()] * 5), min_size=1, max_size=40)


def one_label(flags):
    Y = np.zeros((len(flags), 5), dtype=bool)
    Y[:, 0] = flags
    return Y


class TestFolds:
    def test_five_positives_ten_units(self):
        Y = one_label([True] * 5 + [False] * 5)
        folds = iterative_stratified_folds(Y, k=5, seed=0)
        for f in range(5):
            test = folds.test_indices(f)
            assert len(test) == 2
            assert sum(Y[i, 0] for i in test) == 1

    def test_all_negative_quota_split(self):
        folds = iterative_stratified_folds(np.zeros((4, 5), dtype=bool), k=2, seed=3)
        assert folds.sizes() == [2, 2]

    def test_too_few(self):
        with pytest.raises(TooFewInstances):
            iterative_stratified_folds(np.zeros((3, 5), dtype=bool), k=5)

    def test_k_must_be_two(self):
        with pytest.raises((TooFewInstances, ValueError)):
            iterative_stratified_folds(np.zeros((5, 5), dtype=bool), k=1)

    def test_same_seed_same_assignment(self):
        Y = benchmark_like_labels(1)
        assert iterative_stratified_folds(Y, 5, 7).folds == iterative_stratified_folds(Y, 5, 7).folds

    @pytest.mark.parametrize("seed", range(30))
    def test_single_label_balance(self, seed):
        Y = single_label_dataset(seed)
        folds = iterative_stratified_folds(Y, k=5, seed=seed)
        sizes = folds.sizes()
        assert sum(sizes) == len(Y) and max(sizes) - min(sizes) <= 1
        for l in range(5):
            counts = [int(Y[folds.test_indices(f), l].sum()) for f in range(5)]
            assert max(counts) - min(counts) <= 1

    @given(label_rows.filter(lambda r: len(r) >= 3), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_every_unit_one_fold(self, rows, seed):
        folds = iterative_stratified_folds(np.array(rows), k=3, seed=seed)
        assert len(folds.folds) == len(rows)
        assert set(folds.folds) == {0, 1, 2}
        assert sorted(i for f in range(3) for i in folds.test_indices(f)) == list(range(len(rows)))

    def test_beats_random_on_benchmark_distribution(self):
        wins = 0
        for trial in range(10):
            Y = benchmark_like_labels(trial)
            strat = fold_label_deviation(Y, iterative_stratified_folds(Y, 5, trial))
            rand = fold_label_deviation(Y, random_folds(len(Y), 5, trial))
            wins += strat < rand
        assert wins >= 9

    def test_random_folds_sizes(self):
        assert sorted(random_folds(11, 5, 0).sizes()) == [2, 2, 2, 2, 3]


class TestLabelMetrics:
    def test_hand_count(self):
        s = label_metrics([1, 1, 0, 0], [1, 0, 1, 0])
        assert (s.counts.tp, s.counts.fp, s.counts.tn, s.counts.fn) == (1, 1, 1, 1)
        assert s.as_dict() == {"A": 0.5, "P": 0.5, "R": 0.5, "F1": 0.5}

    def test_identity(self):
        assert label_metrics([1, 0, 1], [1, 0, 1]).as_dict() == {"A": 1.0, "P": 1.0, "R": 1.0, "F1": 1.0}

    def test_all_negative_convention(self):
        assert label_metrics([0, 0, 0], [0, 0, 0]).as_dict() == {"A": 1.0, "P": 0.0, "R": 0.0, "F1": 0.0}

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            label_metrics([1, 0], [1])

    @given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=60))
    def test_consistency(self, pairs):
        t, p = zip(*pairs)
        s = label_metrics(t, p)
        c = s.counts
        assert c.total == len(pairs)
        assert math.isclose(s.accuracy * c.total, c.tp + c.tn)
        assert (s.f1 == 0) == (c.tp == 0)
        assert all(0 <= v <= 1 for v in s.as_dict().values())


class TestMultilabel:
    def test_hand_count(self):
        l1 = (True, False, False, False, False)
        l2 = (False, True, False, False, False)
        assert multilabel_metrics([l1, l2], [l1, l1]) == {"EMR": 0.5, "HL": 0.2}

    def test_identity_and_complement(self):
        Y = np.array([[1, 0, 1, 0, 0], [0, 0, 0, 0, 1]], dtype=bool)
        assert multilabel_metrics(Y, Y) == {"EMR": 1.0, "HL": 0.0}
        assert multilabel_metrics(Y, ~Y) == {"EMR": 0.0, "HL": 1.0}

    def test_accepts_smell_labels(self):
        a = [SmellLabels(lazy=True), SmellLabels()]
        assert multilabel_metrics(a, a)["EMR"] == 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            multilabel_metrics(np.zeros((2, 5)), np.zeros((3, 5)))

    @given(label_rows, st.data())
    def test_hl_zero_iff_emr_one(self, rows, data):
        pred = data.draw(st.lists(st.tuples(*[st.booleans()] * 5), min_size=len(rows), max_size=len(rows)))
        m = multilabel_metrics(rows, pred)
        assert (m["HL"] == 0) == (m["EMR"] == 1)
        assert 0 <= m["HL"] <= 1 and 0 <= m["EMR"] <= 1


class TestCrossValidate:
    def test_token_corpus_ovr_bow(self):
        report = cross_validate(token_determined_corpus(300, seed=1), "bow", "ovr", k=5, seed=0)
        assert all(s["F1"] >= 0.95 for s in report.per_smell.values())

    def test_rules_tail_capture_matches_oracle(self):
        corpus = bloated_only_corpus(200, seed=2)
        report = cross_validate(corpus, "rules", ModelSpec("rules", selector="p90"), k=5, seed=4)
        folds = iterative_stratified_folds(corpus.label_matrix(), 5, 4).folds
        lengths = [len(u.description_text.rstrip(".").split()) for u in corpus.units]
        gold = [l.bloated for l in corpus.labels]
        assert report.per_smell["bloated"]["R"] == pytest.approx(tail_capture_recall(lengths, gold, folds, 90))
        assert 0 < report.per_smell["bloated"]["R"] < 1

    def test_k_greater_than_m(self):
        with pytest.raises(TooFewInstances):
            cross_validate(token_determined_corpus(4), "bow", "ovr", k=5)

    def test_unlabeled(self):
        corpus = Corpus([DocUnit("a", "void f()", "text")])
        with pytest.raises(UnlabeledCorpus):
            cross_validate(corpus)

    def test_report_ranges_and_json(self):
        report = cross_validate(token_determined_corpus(100, seed=3), "rules", "cc", k=4, seed=1)
        assert report.seed == 1 and len(report.folds) == 4
        for scores in report.per_smell.values():
            assert all(0 <= v <= 1 for v in scores.values())
        again = EvalReport.from_json(report.to_json())
        assert again.to_json() == report.to_json()

    def test_deterministic(self):
        corpus = token_determined_corpus(120, seed=5)
        a = cross_validate(corpus, "both", "lps", k=3, seed=9)
        b = cross_validate(corpus, "both", "lps", k=3, seed=9)
        assert a.to_json() == b.to_json()

    def test_renderers(self):
        report = cross_validate(token_determined_corpus(60, seed=6), "rules", ModelSpec("mlknn", knn_k=3), k=3)
        md = reports_markdown([report])
        assert md.splitlines()[2].startswith("| MLkNN (k=3) | rules |")
        csv_lines = reports_csv([report]).splitlines()
        assert csv_lines[0].startswith("model,features,smell")
        assert len(csv_lines) == 1 + len(SMELLS)


class _ThresholdModel:
    """Predicts every label as x[:, 0] > 0.5."""

    def predict(self, X):
        return np.repeat((np.asarray(X)[:, :1] > 0.5), 5, axis=1)


class TestPermutationImportance:
    def _data(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([rng.random(200), np.full(200, 3.0), rng.random(200)])
        Y = np.repeat(X[:, :1] > 0.5, 5, axis=1)
        return X, Y

    def test_constant_feature_zero(self):
        X, Y = self._data()
        res = permutation_importance(_ThresholdModel(), X, Y, 1, repeats=5, seed=1)
        assert res.overall == 0 and all(v == 0 for v in res.per_smell.values())

    def test_determining_feature(self):
        X, Y = self._data()
        res = permutation_importance(_ThresholdModel(), X, Y, 0, repeats=5, seed=1)
        assert res.per_smell["bloated"] >= 0.3
        assert res.baseline_f1["bloated"] == 1.0

    def test_bad_index(self):
        X, Y = self._data()
        with pytest.raises(BadFeatureIndex):
            permutation_importance(_ThresholdModel(), X, Y, 3)

    def test_seeded(self):
        X, Y = self._data()
        a = permutation_importance(_ThresholdModel(), X, Y, 0, repeats=3, seed=5)
        b = permutation_importance(_ThresholdModel(), X, Y, 0, repeats=3, seed=5)
        assert a == b


class TestAgreement:
    def test_kappa_identity(self):
        assert cohen_kappa([1, 0, 1, 1], [1, 0, 1, 1]) == 1.0

    def test_kappa_chance(self):
        assert cohen_kappa([1, 1, 0, 0], [1, 0, 1, 0]) == 0.0

    def test_kappa_constant_raters(self):
        assert cohen_kappa([1, 1], [1, 1]) == 1.0
        assert cohen_kappa([1, 1], [0, 0]) == 0.0

    def test_kappa_length(self):
        with pytest.raises(LengthMismatch):
            cohen_kappa([1], [1, 0])

    @given(st.lists(st.booleans(), min_size=2).filter(lambda a: 0 < sum(a) < len(a)))
    def test_kappa_self(self, a):
        assert cohen_kappa(a, a) == pytest.approx(1.0)

    def test_phi_identical_and_complement(self):
        x = [1, 0, 1, 1, 0]
        assert phi_coefficient(x, x) == pytest.approx(1.0)
        assert phi_coefficient(x, [1 - v for v in x]) == pytest.approx(-1.0)

    def test_phi_constant_absent(self):
        Y = np.array([[1, 0, 1, 0, 0], [0, 0, 1, 1, 0], [1, 0, 1, 0, 1]], dtype=bool)
        phi = phi_matrix(Y)
        assert phi[1][0] is None and phi[1][1] is None and phi[2][3] is None
        assert phi[0][0] == 1.0

    @given(st.lists(st.tuples(*[st.booleans()] * 5), min_size=2, max_size=40))
    def test_phi_symmetric_bounded(self, rows):
        phi = phi_matrix(rows)
        for i in range(5):
            for j in range(5):
                assert phi[i][j] == phi[j][i]
                if phi[i][j] is not None:
                    assert -1 - 1e-12 <= phi[i][j] <= 1 + 1e-12

    def test_phi_too_few(self):
        with pytest.raises(TooFewInstances):
            phi_matrix([(True,) * 5])
