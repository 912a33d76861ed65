"""Model specifications, fitting glue, and the on-disk model envelope."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from docsmell.corpus import Corpus, DocUnit
from docsmell.errors import UnlabeledCorpus
from docsmell.features import FeatureSpace
from docsmell.learn import (
    ChainModel,
    MlknnModel,
    OvrModel,
    PowersetModel,
    TrainConfig,
    random_chain_order,
    train_cc,
    train_lps,
    train_mlknn,
    train_ovr,
)
from docsmell.metrics import Lexicon, MetricVector, compute_metrics
from docsmell.rules import RuleModel, ThresholdSelector, fit_thresholds

MODEL_KINDS = ("rules", "ovr", "cc", "lps", "mlknn")

_DISPLAY = {"ovr": "OVR-SVM", "cc": "CC-SVM", "lps": "LPS-SVM", "mlknn": "MLkNN"}


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "ovr"
    selector: str = "p90"
    lam: float = 1e-3
    epochs: int = 20
    knn_k: int = 10
    smoothing: float = 1.0
    random_chain: bool = False

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.kind == "rules":
            object.__setattr__(self, "selector", ThresholdSelector(self.selector).mode)

    @property
    def name(self) -> str:
        if self.kind == "rules":
            return f"Rule Based {ThresholdSelector(self.selector).label}"
        if self.kind == "mlknn":
            return f"MLkNN (k={self.knn_k})"
        return _DISPLAY[self.kind]


@dataclass(frozen=True)
class FeatureSpec:
    kind: str = "rules"
    min_df: int = 2
    max_features: int | None = 5000

    def new_space(self) -> FeatureSpace:
        return FeatureSpace(self.kind, self.min_df, self.max_features)


@dataclass
class FittedModel:
    """A trained predictor together with the feature space it was fitted in."""

    spec: ModelSpec
    model: RuleModel | OvrModel | ChainModel | PowersetModel | MlknnModel
    space: FeatureSpace | None = None
    meta: dict = field(default_factory=dict)

    def features(self, units: Sequence[DocUnit], metrics: Sequence[MetricVector]) -> np.ndarray:
        return self.space.transform(units, metrics)

    def predict(self, units: Sequence[DocUnit], metrics: Sequence[MetricVector]) -> np.ndarray:
        if isinstance(self.model, RuleModel):
            return self.model.predict(metrics)
        return self.model.predict(self.features(units, metrics))

    def scores(self, units, metrics) -> np.ndarray | None:
        """Per-smell decision values where the model has them."""
        if isinstance(self.model, OvrModel):
            return self.model.decision_function(self.features(units, metrics))
        return None

    def to_json(self) -> dict:
        if isinstance(self.model, RuleModel):
            return {"model_type": "rules", "feature_space": {"kind": "metrics"}, "payload": self.model.to_json()}
        payload = self.model.to_json(sparse=self.space.kind != "rules") if isinstance(
            self.model, MlknnModel
        ) else self.model.to_json()
        spec = {
            "lam": self.spec.lam,
            "epochs": self.spec.epochs,
            "knn_k": self.spec.knn_k,
            "smoothing": self.spec.smoothing,
        }
        return {
            "model_type": self.spec.kind,
            "feature_space": self.space.to_json(),
            "payload": payload,
            "config": spec,
            **({"meta": self.meta} if self.meta else {}),
        }

    @classmethod
    def from_json(cls, obj: dict) -> FittedModel:
        kind = obj["model_type"]
        if kind == "rules":
            model = RuleModel.from_json(obj["payload"])
            return cls(ModelSpec("rules", selector=model.selector.mode), model)
        cfg = obj.get("config", {})
        spec = ModelSpec(kind, **{k: cfg[k] for k in ("lam", "epochs", "knn_k", "smoothing") if k in cfg})
        model_cls = {"ovr": OvrModel, "cc": ChainModel, "lps": PowersetModel, "mlknn": MlknnModel}[kind]
        return cls(spec, model_cls.from_json(obj["payload"]), FeatureSpace.from_json(obj["feature_space"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> FittedModel:
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def fit_model(
    spec: ModelSpec,
    units: Sequence[DocUnit],
    metrics: Sequence[MetricVector],
    Y: np.ndarray,
    features: FeatureSpec = FeatureSpec(),
    seed: int = 42,
) -> FittedModel:
    if spec.kind == "rules":
        return FittedModel(spec, fit_thresholds(metrics, spec.selector))
    space = features.new_space().fit(units, metrics)
    X = space.transform(units, metrics)
    cfg = TrainConfig(spec.lam, spec.epochs, seed)
    if spec.kind == "ovr":
        model = train_ovr(X, Y, cfg)
    elif spec.kind == "cc":
        order = random_chain_order(seed) if spec.random_chain else None
        model = train_cc(X, Y, cfg, order)
    elif spec.kind == "lps":
        model = train_lps(X, Y, cfg)
    else:
        model = train_mlknn(X, Y, spec.knn_k, spec.smoothing)
    return FittedModel(spec, model, space)


def fit_on_corpus(
    spec: ModelSpec,
    corpus: Corpus,
    features: FeatureSpec = FeatureSpec(),
    seed: int = 42,
    lexicon: Lexicon | None = None,
) -> FittedModel:
    metrics = [compute_metrics(u, lexicon) for u in corpus.units]
    if spec.kind == "rules":
        # thresholds come from metric distributions alone; labels are optional
        return FittedModel(spec, fit_thresholds(metrics, spec.selector))
    if not corpus.labeled:
        raise UnlabeledCorpus()
    return fit_model(spec, corpus.units, metrics, corpus.label_matrix(), features, seed)
