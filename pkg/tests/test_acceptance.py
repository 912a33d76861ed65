"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible with
``pytest -s`` or in the terminal summary) before asserting.
"""

import json
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest

from docsmell.cli import main
from docsmell.corpus import load_corpus
from docsmell.evaluation import (
    cross_validate,
    fold_label_deviation,
    iterative_stratified_folds,
    label_metrics,
    multilabel_metrics,
    permutation_importance,
    random_folds,
)
from docsmell.learn import TrainConfig, predict_mlknn, train_mlknn, train_ovr
from docsmell.metrics import MetricVector, flesch_reading_ease, levenshtein
from docsmell.pipeline import ModelSpec
from docsmell.rules import fit_thresholds
from oracles import levenshtein_table, mlknn_brute_force
from synth import benchmark_like_labels, single_label_dataset, token_determined_corpus

pytestmark = pytest.mark.acceptance

RESULTS: list[str] = []


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_levenshtein_oracle():
    rng = random.Random(1)
    alphabet = "abcde"
    pairs = [
        ("".join(rng.choices(alphabet, k=rng.randint(0, 12))), "".join(rng.choices(alphabet, k=rng.randint(0, 12))))
        for _ in range(1000)
    ]
    start = time.perf_counter()
    mismatches = sum(levenshtein(a, b) != levenshtein_table(a, b) for a, b in pairs)
    elapsed = time.perf_counter() - start
    report(1, mismatches == 0 and elapsed < 5, f"{mismatches} mismatches on 1000 pairs in {elapsed:.2f}s (limit 5s)")


READABILITY_FIXTURES = {
    "The cat sat.": 119.19,
    "Go. Go.": 121.22,
    "Returns the size.": 90.99,
    "Create a new table. Make it simple!": 118.6825,
    "Initializes the buffer capacity": -51.025,
}


def test_criterion_2_readability_fixtures():
    errors = {t: abs(flesch_reading_ease(t) - v) for t, v in READABILITY_FIXTURES.items()}
    worst = max(errors.values())
    report(2, worst <= 1e-9, f"5 fixtures, max abs error {worst:.2e} (tolerance 1e-9)")


def test_criterion_3_multilabel_fixtures():
    l1 = (True, False, False, False, False)
    l2 = (False, True, False, False, False)
    Y = np.array([[1, 0, 1, 0, 0], [0, 0, 0, 0, 1]], dtype=bool)
    checks = [
        label_metrics([1, 1, 0, 0], [1, 0, 1, 0]).as_dict() == {"A": 0.5, "P": 0.5, "R": 0.5, "F1": 0.5},
        label_metrics([1, 0, 1], [1, 0, 1]).as_dict() == {"A": 1.0, "P": 1.0, "R": 1.0, "F1": 1.0},
        label_metrics([0, 0, 0], [0, 0, 0]).as_dict() == {"A": 1.0, "P": 0.0, "R": 0.0, "F1": 0.0},
        multilabel_metrics([l1, l2], [l1, l1]) == {"EMR": 0.5, "HL": 0.2},
        multilabel_metrics(Y, Y) == {"EMR": 1.0, "HL": 0.0},
        multilabel_metrics(Y, ~Y) == {"EMR": 0.0, "HL": 1.0},
    ]
    report(3, all(checks), f"{sum(checks)}/{len(checks)} hand-counted examples exact")


def test_criterion_4_fold_balance():
    violations = 0
    for seed in range(50):
        Y = single_label_dataset(1000 + seed)
        folds = iterative_stratified_folds(Y, k=5, seed=seed)
        sizes = folds.sizes()
        counts = [[int(Y[folds.test_indices(f), l].sum()) for f in range(5)] for l in range(5)]
        if max(sizes) - min(sizes) > 1 or any(max(c) - min(c) > 1 for c in counts):
            violations += 1
    wins = 0
    for trial in range(50):
        Y = benchmark_like_labels(trial)
        strat = fold_label_deviation(Y, iterative_stratified_folds(Y, 5, trial))
        rand = fold_label_deviation(Y, random_folds(len(Y), 5, trial))
        wins += strat < rand
    report(4, violations == 0 and wins >= 45, f"{violations}/50 balance violations; stratified wins {wins}/50 (need >= 45)")


def test_criterion_5_mlknn_oracle():
    two_point = train_mlknn([[0.0], [10.0]], [[True] + [False] * 4, [False] * 5], k=1, s=1)
    worked = predict_mlknn(two_point, [0.1]).bloated is False
    rng = np.random.default_rng(5)
    queries = mismatches = 0
    while queries < 200:
        m = int(rng.integers(6, 51))
        d = int(rng.integers(1, 6))
        k = int(rng.choice([1, 3, 5]))
        X = rng.integers(-2, 3, size=(m, d)).astype(float)
        Y = rng.random((m, 5)) < 0.4
        Q = rng.integers(-2, 3, size=(10, d)).astype(float)
        expected, _, _ = mlknn_brute_force(X.tolist(), Y.tolist(), Q.tolist(), k=k)
        got = train_mlknn(X, Y, k=k).predict(Q).tolist()
        mismatches += sum(g != e for g, e in zip(got, expected))
        queries += len(Q)
    report(5, worked and mismatches == 0, f"{mismatches} mismatches on {queries} queries; 2-point query 0.1 negative: {worked}")


def test_criterion_6_rule_tail_property():
    failures = []
    for trial in range(20):
        rng = random.Random(trial)
        cols = [rng.sample(range(1, 100_000), 100) for _ in range(6)]
        metrics = [MetricVector(*(float(c[i]) for c in cols)) for i in range(100)]
        pred = fit_thresholds(metrics, "p90").predict(metrics)
        top = {name: set(np.argsort(cols[c])[-10:]) for name, c in
               (("doc_length", 0), ("jargon", 2), ("urls", 3), ("struct", 4))}
        low_read = set(np.argsort(cols[1])[:10])
        checks = {
            "bloated": (0, top["doc_length"]),
            "excess_struct": (2, top["struct"]),
            "fragmented": (4, top["urls"]),
            "tangled": (3, top["jargon"] | low_read),
        }
        for name, (col, want) in checks.items():
            if set(np.flatnonzero(pred[:, col])) != want:
                failures.append((trial, name))
    report(6, not failures, f"20 corpora x 4 upward metrics, {len(failures)} tail mismatches")


def test_criterion_7_permutation_direction():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    n = 400
    X = np.column_stack([rng.normal(size=n), np.full(n, 2.5), rng.normal(size=n)])
    Y = np.zeros((n, 5), dtype=bool)
    Y[:, 0] = X[:, 0] > 0
    Y[:, 1:] = rng.random((n, 4)) < 0.3
    train, test = slice(0, 300), slice(300, n)
    model = train_ovr(X[train], Y[train], TrainConfig(1e-3, 30, 0))
    determining = permutation_importance(model, X[test], Y[test], 0, repeats=10, seed=1)
    constant = permutation_importance(model, X[test], Y[test], 1, repeats=10, seed=1)
    elapsed = time.perf_counter() - start
    drop = determining.per_smell["bloated"]
    const_zero = constant.overall == 0 and all(v == 0 for v in constant.per_smell.values())
    report(7, drop >= 0.3 and const_zero and elapsed < 30,
           f"determining dF1 {drop:.3f} (need >= 0.3); constant dF1 {constant.overall}; {elapsed:.2f}s (limit 30s)")


def test_criterion_8_separable_learning():
    start = time.perf_counter()
    rep = cross_validate(token_determined_corpus(500, seed=0), "bow", "ovr", k=5, seed=42)
    elapsed = time.perf_counter() - start
    report(8, rep.macro_f1 >= 0.95 and elapsed < 60, f"macro-F1 {rep.macro_f1:.4f} (need >= 0.95) in {elapsed:.2f}s (limit 60s)")


def _benchmark_path() -> Path | None:
    env = os.environ.get("DOCSMELL_BENCHMARK")
    candidates = [Path(env)] if env else []
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "benchmark.jsonl")
    return next((p for p in candidates if p.is_file()), None)


@pytest.mark.benchmark
def test_criterion_9_benchmark_reproduction(tmp_path, capsys):
    path = _benchmark_path()
    if path is None:
        RESULTS.append("criterion 9: SKIP benchmark not found in data/benchmark.jsonl")
        pytest.skip("benchmark not downloaded into data/")
    start = time.perf_counter()
    corpus = load_corpus(path)
    p90 = cross_validate(corpus, "rules", ModelSpec("rules", selector="p90"), k=5, seed=42)
    p25 = cross_validate(corpus, "rules", ModelSpec("rules", selector="p25"), k=5, seed=42)
    ovr = cross_validate(corpus, "rules", "ovr", k=5, seed=42)
    bloated90 = p90.per_smell["bloated"]["F1"]
    lazy25 = p25.per_smell["lazy"]["F1"]
    ovr_bloated = ovr.per_smell["bloated"]["F1"]

    with capsys.disabled():
        code = main(["stats", "--corpus", str(path), "--out-dir", str(tmp_path)])
    dist = json.loads((tmp_path / "distribution.json").read_text(encoding="utf-8"))
    elapsed = time.perf_counter() - start
    stats_ok = (
        code == 0
        and dist["per_smell"]["lazy"] == 275
        and dist["per_smell"]["bloated"] == 141
        and dist["at_least_one"] == 778
    )
    ok = (
        abs(bloated90 - 0.90) <= 0.08
        and abs(lazy25 - 0.95) <= 0.08
        and abs(ovr_bloated - 0.88) <= 0.10
        and stats_ok
        and elapsed < 600
    )
    report(9, ok, f"Bloated@90P {bloated90:.3f}, Lazy@25P {lazy25:.3f}, OVR Bloated {ovr_bloated:.3f}, "
                  f"stats {'exact' if stats_ok else dist}, {elapsed:.1f}s")
