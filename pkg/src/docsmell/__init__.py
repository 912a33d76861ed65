"""Detection of smells in method-level API documentation.

Five smells are covered: bloated, lazy, excess structural information,
tangled and fragmented. The package offers percentile-threshold rule
classifiers over six documentation metrics, shallow multilabel learners
(one-vs-rest, classifier chains, label powerset over a linear max-margin
base learner, and ML-kNN), and iterative stratified cross-validation.
"""

__version__ = "0.1.0"

from docsmell.corpus import SMELLS, Corpus, DocUnit, SmellLabels, load_corpus, parse_jsonl, write_jsonl
from docsmell.evaluation import EvalReport, cross_validate, iterative_stratified_folds
from docsmell.metrics import Lexicon, MetricVector, compute_metrics, default_lexicon
from docsmell.pipeline import FeatureSpec, FittedModel, ModelSpec, fit_on_corpus
from docsmell.rules import RuleModel, ThresholdSelector, classify, fit_thresholds

__all__ = [
    "SMELLS",
    "Corpus",
    "DocUnit",
    "SmellLabels",
    "load_corpus",
    "parse_jsonl",
    "write_jsonl",
    "EvalReport",
    "cross_validate",
    "iterative_stratified_folds",
    "Lexicon",
    "MetricVector",
    "compute_metrics",
    "default_lexicon",
    "FeatureSpec",
    "FittedModel",
    "ModelSpec",
    "fit_on_corpus",
    "RuleModel",
    "ThresholdSelector",
    "classify",
    "fit_thresholds",
]
