"""Cross-validation, scoring, feature importance and agreement statistics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from docsmell.corpus import N_SMELLS, SMELL_TITLES, SMELLS, Corpus, SmellLabels
from docsmell.errors import (
    BadFeatureIndex,
    EmptyInput,
    LengthMismatch,
    TooFewInstances,
    UnlabeledCorpus,
)
from docsmell.metrics import Lexicon, MetricVector, compute_metrics
from docsmell.pipeline import FeatureSpec, ModelSpec, fit_model


def _labels(Y) -> np.ndarray:
    if isinstance(Y, np.ndarray):
        return np.asarray(Y, dtype=bool).reshape(len(Y), -1)
    rows = [y.as_tuple() if isinstance(y, SmellLabels) else tuple(y) for y in Y]
    return np.array(rows, dtype=bool).reshape(len(rows), -1)


# --------------------------------------------------------------------------
# fold assignment


@dataclass(frozen=True)
class FoldAssignment:
    folds: tuple[int, ...]
    k: int
    seed: int

    def test_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.folds) if f == fold]

    def train_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.folds) if f != fold]

    def sizes(self) -> list[int]:
        return [self.folds.count(j) for j in range(self.k)]


def iterative_stratified_folds(Y, k: int = 5, seed: int = 42) -> FoldAssignment:
    """Greedy multilabel stratification that places the rarest label first.

    Quotas are tracked in units of 1/k (a fold's desired size m/k is stored
    as m, each assignment subtracts k) so ties compare exactly.
    """
    Y = _labels(Y)
    m = len(Y)
    if k < 2 or m < k:
        raise TooFewInstances(m, max(k, 2))
    rng = np.random.default_rng(seed)
    n_labels = Y.shape[1]
    total_quota = [m] * k
    label_quota = [[int(Y[:, l].sum())] * k for l in range(n_labels)]
    folds = [-1] * m
    remaining = set(range(m))

    def assign(i: int, fold: int) -> None:
        folds[i] = fold
        remaining.discard(i)
        total_quota[fold] -= k
        for l in np.flatnonzero(Y[i]):
            label_quota[l][fold] -= k

    def pick(candidates: list[int], key: Callable[[int], int]) -> list[int]:
        best = max(key(j) for j in candidates)
        return [j for j in candidates if key(j) == best]

    while True:
        counts = {l: sum(1 for i in remaining if Y[i, l]) for l in range(n_labels)}
        live = [l for l, c in counts.items() if c > 0]
        if not live:
            break
        label = min(live, key=lambda l: (counts[l], l))
        for i in sorted(i for i in remaining if Y[i, label]):
            cands = pick(list(range(k)), lambda j: label_quota[label][j])
            if len(cands) > 1:
                cands = pick(cands, lambda j: total_quota[j])
            fold = cands[0] if len(cands) == 1 else int(rng.choice(cands))
            assign(i, fold)

    for i in sorted(remaining):
        cands = pick(list(range(k)), lambda j: total_quota[j])
        assign(i, cands[0] if len(cands) == 1 else int(rng.choice(cands)))
    return FoldAssignment(tuple(folds), k, seed)


def random_folds(m: int, k: int = 5, seed: int = 42) -> FoldAssignment:
    """Unstratified baseline: a seeded shuffle cut into k near-equal folds."""
    if k < 2 or m < k:
        raise TooFewInstances(m, max(k, 2))
    order = np.random.default_rng(seed).permutation(m)
    folds = [0] * m
    for j, chunk in enumerate(np.array_split(order, k)):
        for i in chunk:
            folds[int(i)] = j
    return FoldAssignment(tuple(folds), k, seed)


def fold_label_deviation(Y, assignment: FoldAssignment) -> float:
    """Mean absolute gap between each fold's positive rate and the overall rate."""
    Y = _labels(Y)
    folds = np.array(assignment.folds)
    overall = Y.mean(axis=0)
    gaps = []
    for j in range(assignment.k):
        part = Y[folds == j]
        if len(part):
            gaps.append(np.abs(part.mean(axis=0) - overall))
    return float(np.mean(gaps))


# --------------------------------------------------------------------------
# scores


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class LabelScores:
    accuracy: float
    precision: float
    recall: float
    f1: float
    counts: ConfusionCounts

    def as_dict(self) -> dict:
        return {"A": self.accuracy, "P": self.precision, "R": self.recall, "F1": self.f1}


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def label_metrics(y_true: Sequence[bool], y_pred: Sequence[bool]) -> LabelScores:
    t = np.asarray(y_true, dtype=bool).ravel()
    p = np.asarray(y_pred, dtype=bool).ravel()
    if len(t) != len(p):
        raise LengthMismatch(len(t), len(p))
    if len(t) == 0:
        raise EmptyInput("label sequences")
    tp = int(np.sum(t & p))
    fp = int(np.sum(~t & p))
    tn = int(np.sum(~t & ~p))
    fn = int(np.sum(t & ~p))
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    return LabelScores(
        accuracy=(tp + tn) / len(t),
        precision=precision,
        recall=recall,
        f1=_ratio(2 * precision * recall, precision + recall),
        counts=ConfusionCounts(tp, fp, tn, fn),
    )


def multilabel_metrics(Y_true, Y_pred) -> dict[str, float]:
    """Exact match ratio and Hamming loss."""
    T = _labels(Y_true)
    P = _labels(Y_pred)
    if len(T) != len(P):
        raise LengthMismatch(len(T), len(P))
    if len(T) == 0:
        raise EmptyInput("label sequences")
    if T.shape != P.shape:
        raise LengthMismatch(T.shape[1], P.shape[1])
    wrong = T != P
    return {"EMR": float(np.mean(~wrong.any(axis=1))), "HL": float(wrong.sum() / wrong.size)}


def per_smell_f1(Y_true, Y_pred) -> np.ndarray:
    T = _labels(Y_true)
    P = _labels(Y_pred)
    return np.array([label_metrics(T[:, l], P[:, l]).f1 for l in range(T.shape[1])])


# --------------------------------------------------------------------------
# cross-validation


@dataclass
class FoldResult:
    fold: int
    n_test: int
    per_smell: dict[str, dict[str, float]]
    emr: float
    hl: float


@dataclass
class EvalReport:
    model: str
    features: str
    k: int
    seed: int
    folds: list[FoldResult] = field(default_factory=list)

    @property
    def per_smell(self) -> dict[str, dict[str, float]]:
        """Per-smell scores macro-averaged over folds."""
        return {
            name: {key: float(np.mean([f.per_smell[name][key] for f in self.folds])) for key in ("A", "P", "R", "F1")}
            for name in SMELLS
        }

    @property
    def emr(self) -> float:
        return float(np.mean([f.emr for f in self.folds]))

    @property
    def hl(self) -> float:
        return float(np.mean([f.hl for f in self.folds]))

    @property
    def macro_f1(self) -> float:
        return float(np.mean([s["F1"] for s in self.per_smell.values()]))

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "features": self.features,
            "k": self.k,
            "seed": self.seed,
            "mean": {"per_smell": self.per_smell, "EMR": self.emr, "HL": self.hl, "macro_F1": self.macro_f1},
            "folds": [asdict(f) for f in self.folds],
        }

    @classmethod
    def from_json(cls, obj: dict) -> EvalReport:
        folds = [FoldResult(**f) for f in obj["folds"]]
        return cls(obj["model"], obj["features"], obj["k"], obj["seed"], folds)


def _fmt(x: float) -> str:
    return f"{x:.2f}".lstrip("0") if x < 1 else f"{x:.2f}"


def reports_markdown(reports: Sequence[EvalReport]) -> str:
    """Rows = models, column groups = smells with A/P/R/F1, then EMR and HL."""
    head = ["Model", "Features"]
    for name in SMELLS:
        head += [f"{SMELL_TITLES[name]} {key}" for key in ("A", "P", "R", "F1")]
    head += ["EMR", "HL"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for rep in reports:
        cells = [rep.model, rep.features]
        scores = rep.per_smell
        for name in SMELLS:
            cells += [_fmt(scores[name][key]) for key in ("A", "P", "R", "F1")]
        cells += [_fmt(rep.emr), _fmt(rep.hl)]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def reports_csv(reports: Sequence[EvalReport]) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "features", "smell", "A", "P", "R", "F1", "EMR", "HL"])
    for rep in reports:
        for name, s in rep.per_smell.items():
            writer.writerow([rep.model, rep.features, name, s["A"], s["P"], s["R"], s["F1"], rep.emr, rep.hl])
    return buf.getvalue()


def _fold_result(fold: int, T: np.ndarray, P: np.ndarray) -> FoldResult:
    per_smell = {name: label_metrics(T[:, l], P[:, l]).as_dict() for l, name in enumerate(SMELLS)}
    ml = multilabel_metrics(T, P)
    return FoldResult(fold, len(T), per_smell, ml["EMR"], ml["HL"])


def cross_validate(
    corpus: Corpus,
    features: FeatureSpec | str = "rules",
    model: ModelSpec | str = "ovr",
    k: int = 5,
    seed: int = 42,
    lexicon: Lexicon | None = None,
    metrics: Sequence[MetricVector] | None = None,
) -> EvalReport:
    """k-fold iterative stratified CV; every fitted component sees only its training folds."""
    if not corpus.labeled:
        raise UnlabeledCorpus()
    if isinstance(features, str):
        features = FeatureSpec(features)
    if isinstance(model, str):
        model = ModelSpec(model)
    if metrics is None:
        metrics = [compute_metrics(u, lexicon) for u in corpus.units]
    Y = corpus.label_matrix()
    assignment = iterative_stratified_folds(Y, k, seed)
    units = corpus.units
    report = EvalReport(model.name, "metrics" if model.kind == "rules" else features.kind, k, seed)
    for fold in range(k):
        train = assignment.train_indices(fold)
        test = assignment.test_indices(fold)
        fitted = fit_model(
            model,
            [units[i] for i in train],
            [metrics[i] for i in train],
            Y[train],
            features,
            seed + fold,
        )
        pred = fitted.predict([units[i] for i in test], [metrics[i] for i in test])
        report.folds.append(_fold_result(fold, Y[test], pred))
    return report


# --------------------------------------------------------------------------
# permutation importance


@dataclass(frozen=True)
class ImportanceResult:
    feature_index: int
    overall: float
    per_smell: dict[str, float]
    baseline_f1: dict[str, float]


def permutation_importance(model, X_test, Y_test, feature_index: int, repeats: int = 10, seed: int = 42) -> ImportanceResult:
    """F1 drop when one test column is shuffled, overall (macro over smells) and per smell.

    ``model`` is anything with ``predict(X) -> (n, labels)`` booleans.
    """
    X = np.array(X_test, dtype=float)
    T = _labels(Y_test)
    if X.ndim != 2 or not 0 <= feature_index < X.shape[1]:
        raise BadFeatureIndex(feature_index, X.shape[1] if X.ndim == 2 else 0)
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    base = per_smell_f1(T, model.predict(X))
    rng = np.random.default_rng(seed)
    drops = []
    column = X[:, feature_index].copy()
    for _ in range(repeats):
        Xp = X.copy()
        Xp[:, feature_index] = column[rng.permutation(len(column))]
        drops.append(base - per_smell_f1(T, model.predict(Xp)))
    drop = np.mean(drops, axis=0)
    names = SMELLS if T.shape[1] == N_SMELLS else tuple(str(i) for i in range(T.shape[1]))
    return ImportanceResult(
        feature_index=feature_index,
        overall=float(np.mean(drop)),
        per_smell={n: float(d) for n, d in zip(names, drop)},
        baseline_f1={n: float(b) for n, b in zip(names, base)},
    )


# --------------------------------------------------------------------------
# agreement and correlation


def cohen_kappa(a: Sequence[bool], b: Sequence[bool]) -> float:
    a = np.asarray(a, dtype=bool).ravel()
    b = np.asarray(b, dtype=bool).ravel()
    if len(a) != len(b):
        raise LengthMismatch(len(a), len(b))
    if len(a) == 0:
        raise EmptyInput("rating sequences")
    p_o = float(np.mean(a == b))
    pa, pb = float(a.mean()), float(b.mean())
    p_e = pa * pb + (1 - pa) * (1 - pb)
    if p_e == 1:
        return 1.0 if p_o == 1 else 0.0
    return (p_o - p_e) / (1 - p_e)


def phi_coefficient(x: Sequence[bool], y: Sequence[bool]) -> float | None:
    x = np.asarray(x, dtype=bool)
    y = np.asarray(y, dtype=bool)
    n11 = int(np.sum(x & y))
    n10 = int(np.sum(x & ~y))
    n01 = int(np.sum(~x & y))
    n00 = int(np.sum(~x & ~y))
    den = (n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00)
    if den == 0:
        return None
    return (n11 * n00 - n10 * n01) / math.sqrt(den)


def phi_matrix(Y) -> list[list[float | None]]:
    """Pairwise phi between label columns; ``None`` where a column is constant."""
    Y = _labels(Y)
    if len(Y) < 2:
        raise TooFewInstances(len(Y), 2)
    n = Y.shape[1]
    out: list[list[float | None]] = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            value = phi_coefficient(Y[:, i], Y[:, j])
            if i == j and value is not None:
                value = 1.0
            out[i][j] = out[j][i] = value
    return out
