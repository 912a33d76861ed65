"""Bag-of-words and standardized rule-metric features."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from docsmell.corpus import Corpus, DocUnit
from docsmell.errors import EmptyCorpus, UnfittedStandardizer
from docsmell.metrics import METRIC_NAMES, MetricVector, is_empty_readability, tokenize

# Flesch ceiling; stands in for the empty-text sentinel in feature space.
EMPTY_READABILITY_FEATURE = 206.835


@dataclass(frozen=True)
class FeatureVector:
    dimension: int
    data: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for i, v in self.data.items():
            if not 0 <= i < self.dimension:
                raise IndexError(f"index {i} outside dimension {self.dimension}")
            if v != 0:
                clean[int(i)] = float(v)
        object.__setattr__(self, "data", clean)

    @classmethod
    def from_dense(cls, row) -> FeatureVector:
        row = np.asarray(row, dtype=float).ravel()
        return cls(len(row), {int(i): float(row[i]) for i in np.flatnonzero(row)})

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        for i, v in self.data.items():
            out[i] = v
        return out


def as_matrix(X) -> np.ndarray:
    """Stack FeatureVectors (or pass an array through) into a 2-D float array."""
    if isinstance(X, np.ndarray):
        return np.atleast_2d(np.asarray(X, dtype=float))
    X = list(X)
    if X and isinstance(X[0], FeatureVector):
        dims = {x.dimension for x in X}
        if len(dims) > 1:
            from docsmell.errors import DimensionMismatch

            dims = sorted(dims)
            raise DimensionMismatch(dims[0], dims[-1])
        return np.vstack([x.to_dense() for x in X])
    return np.atleast_2d(np.asarray(X, dtype=float))


# --------------------------------------------------------------------------
# bag of words


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    df: dict[str, int]
    min_df: int = 1
    max_features: int | None = None

    def __len__(self) -> int:
        return len(self.index)

    def to_json(self) -> dict:
        return dict(self.index)

    @classmethod
    def from_json(cls, obj: dict) -> Vocabulary:
        return cls(index={k: int(v) for k, v in obj.items()}, df={})


def _texts(docs) -> list[str]:
    if isinstance(docs, Corpus):
        docs = docs.units
    return [d.description_text if isinstance(d, DocUnit) else d for d in docs]


def build_vocabulary(
    corpus: Corpus | Sequence[DocUnit] | Sequence[str],
    min_df: int = 2,
    max_features: int | None = 5000,
) -> Vocabulary:
    texts = _texts(corpus)
    if not texts:
        raise EmptyCorpus()
    df: Counter = Counter()
    for text in texts:
        df.update(set(tokenize(text)))
    kept = [tok for tok, n in df.items() if n >= min_df]
    if max_features is not None and len(kept) > max_features:
        kept = sorted(kept, key=lambda t: (-df[t], t))[:max_features]
    kept.sort()
    return Vocabulary(
        index={tok: i for i, tok in enumerate(kept)},
        df={tok: df[tok] for tok in kept},
        min_df=min_df,
        max_features=max_features,
    )


def bow_vector(tokens: Iterable[str], vocab: Vocabulary) -> FeatureVector:
    counts: Counter = Counter()
    for tok in tokens:
        idx = vocab.index.get(tok)
        if idx is not None:
            counts[idx] += 1
    return FeatureVector(len(vocab), dict(counts))


def bow_matrix(texts: Sequence[str], vocab: Vocabulary) -> np.ndarray:
    out = np.zeros((len(texts), len(vocab)))
    for row, text in enumerate(texts):
        for tok in tokenize(text):
            idx = vocab.index.get(tok)
            if idx is not None:
                out[row, idx] += 1
    return out


# --------------------------------------------------------------------------
# rule features


def metric_row(m: MetricVector) -> np.ndarray:
    row = np.array(m.as_tuple(), dtype=float)
    if is_empty_readability(m.readability):
        row[1] = EMPTY_READABILITY_FEATURE
    return row


@dataclass
class Standardizer:
    means: np.ndarray | None = None
    stds: np.ndarray | None = None

    @property
    def fitted(self) -> bool:
        return self.means is not None

    def fit(self, metrics: Sequence[MetricVector] | np.ndarray) -> Standardizer:
        M = self._rows(metrics)
        if len(M) == 0:
            raise EmptyCorpus()
        self.means = M.mean(axis=0)
        stds = M.std(axis=0)
        stds[stds == 0] = 1.0
        self.stds = stds
        return self

    @staticmethod
    def _rows(metrics) -> np.ndarray:
        if isinstance(metrics, np.ndarray):
            return np.atleast_2d(metrics).astype(float)
        return np.array([metric_row(m) for m in metrics], dtype=float).reshape(-1, len(METRIC_NAMES))

    def transform(self, metrics) -> np.ndarray:
        if not self.fitted:
            raise UnfittedStandardizer()
        return (self._rows(metrics) - self.means) / self.stds

    def to_json(self) -> dict:
        if not self.fitted:
            raise UnfittedStandardizer()
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> Standardizer:
        return cls(np.array(obj["means"], dtype=float), np.array(obj["stds"], dtype=float))


def rule_features(m: MetricVector, s: Standardizer) -> FeatureVector:
    return FeatureVector.from_dense(s.transform([m])[0])


# --------------------------------------------------------------------------
# fitted feature space

FEATURE_KINDS = ("rules", "bow", "both")


@dataclass
class FeatureSpace:
    """A feature extractor fitted on one training split.

    ``kind`` is ``"rules"`` (six z-scored metrics), ``"bow"`` (raw term
    counts) or ``"both"`` (rule features followed by BoW columns).
    """

    kind: str = "rules"
    min_df: int = 2
    max_features: int | None = 5000
    vocabulary: Vocabulary | None = None
    standardizer: Standardizer | None = None

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")

    def fit(self, units: Sequence[DocUnit], metrics: Sequence[MetricVector]) -> FeatureSpace:
        if self.kind in ("rules", "both"):
            self.standardizer = Standardizer().fit(metrics)
        if self.kind in ("bow", "both"):
            self.vocabulary = build_vocabulary(units, self.min_df, self.max_features)
        return self

    @property
    def dimension(self) -> int:
        dim = 0
        if self.kind in ("rules", "both"):
            dim += len(METRIC_NAMES)
        if self.kind in ("bow", "both"):
            dim += len(self.vocabulary)
        return dim

    def transform(self, units: Sequence[DocUnit], metrics: Sequence[MetricVector]) -> np.ndarray:
        blocks = []
        if self.kind in ("rules", "both"):
            if self.standardizer is None:
                raise UnfittedStandardizer()
            blocks.append(self.standardizer.transform(metrics))
        if self.kind in ("bow", "both"):
            blocks.append(bow_matrix([u.description_text for u in units], self.vocabulary))
        return np.hstack(blocks) if len(blocks) > 1 else blocks[0]

    def column_names(self) -> list[str]:
        names = []
        if self.kind in ("rules", "both"):
            names += list(METRIC_NAMES)
        if self.kind in ("bow", "both"):
            names += [f"bow:{tok}" for tok in sorted(self.vocabulary.index, key=self.vocabulary.index.get)]
        return names

    def to_json(self) -> dict:
        obj: dict = {"kind": self.kind}
        if self.vocabulary is not None:
            obj["vocabulary"] = self.vocabulary.to_json()
        if self.standardizer is not None:
            obj["standardizer"] = self.standardizer.to_json()
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> FeatureSpace:
        space = cls(kind=obj["kind"])
        if "vocabulary" in obj:
            space.vocabulary = Vocabulary.from_json(obj["vocabulary"])
        if "standardizer" in obj:
            space.standardizer = Standardizer.from_json(obj["standardizer"])
        return space
