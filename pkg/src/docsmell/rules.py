"""Percentile-threshold classifiers over rule metrics."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from docsmell.corpus import SmellLabels
from docsmell.errors import EmptyInput
from docsmell.metrics import MetricVector, is_empty_readability

SELECTORS = ("average", "p25", "p50", "p75", "p90")
_ALIASES = {"avg": "average", "mean": "average", "25p": "p25", "50p": "p50", "75p": "p75", "90p": "p90"}

THRESHOLD_KEYS = (
    "bloated_len",
    "lazy_edit",
    "excess_refs",
    "tangled_readability",
    "tangled_jargon",
    "fragmented_urls",
)

# threshold key -> (metric field, inverted)
_WIRING = {
    "bloated_len": ("doc_length", False),
    "lazy_edit": ("edit_distance", True),
    "excess_refs": ("struct_ref_count", False),
    "tangled_readability": ("readability", True),
    "tangled_jargon": ("jargon_count", False),
    "fragmented_urls": ("url_count", False),
}


@dataclass(frozen=True)
class ThresholdSelector:
    mode: str

    def __post_init__(self):
        mode = _ALIASES.get(self.mode.lower(), self.mode.lower())
        if mode not in SELECTORS:
            raise ValueError(f"unknown selector {self.mode!r}; expected one of {SELECTORS}")
        object.__setattr__(self, "mode", mode)

    @property
    def percent(self) -> int | None:
        return None if self.mode == "average" else int(self.mode[1:])

    @property
    def label(self) -> str:
        return "AVG" if self.mode == "average" else f"{self.percent}P"


def percentile(values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    if len(values) == 0:
        raise EmptyInput()
    if not 0 <= p <= 100:
        raise ValueError(f"percentile {p} outside [0, 100]")
    ordered = sorted(values)
    rank = math.ceil(Fraction(p).limit_denominator(10**6) * len(ordered) / 100)
    return ordered[max(rank, 1) - 1]


@dataclass(frozen=True)
class RuleModel:
    selector: ThresholdSelector
    bloated_len: float
    lazy_edit: float
    excess_refs: float
    tangled_readability: float
    tangled_jargon: float
    fragmented_urls: float

    def thresholds(self) -> dict[str, float]:
        return {key: getattr(self, key) for key in THRESHOLD_KEYS}

    def to_json(self) -> dict:
        return {"selector": self.selector.mode, "thresholds": self.thresholds()}

    @classmethod
    def from_json(cls, obj: dict) -> RuleModel:
        th = obj["thresholds"]
        return cls(ThresholdSelector(obj["selector"]), **{k: float(th[k]) for k in THRESHOLD_KEYS})

    def predict(self, metrics: Sequence[MetricVector]):
        import numpy as np

        return np.array([classify(m, self).as_tuple() for m in metrics], dtype=bool).reshape(-1, 5)


def _threshold(values: list[float], selector: ThresholdSelector, inverted: bool) -> float:
    if selector.mode == "average":
        return math.fsum(values) / len(values)
    p = selector.percent
    return float(percentile(values, 100 - p if inverted else p))


def fit_thresholds(metrics: Sequence[MetricVector], selector: ThresholdSelector | str) -> RuleModel:
    if isinstance(selector, str):
        selector = ThresholdSelector(selector)
    if len(metrics) == 0:
        raise EmptyInput("training metrics")
    fitted = {}
    for key, (name, inverted) in _WIRING.items():
        values = [getattr(m, name) for m in metrics]
        if name == "readability":
            values = [v for v in values if not is_empty_readability(v)]
            if not values:
                # no readable text in training: readability flags nothing
                fitted[key] = -sys.float_info.max
                continue
        fitted[key] = _threshold(values, selector, inverted)
    return RuleModel(selector=selector, **fitted)


def classify(m: MetricVector, model: RuleModel) -> SmellLabels:
    return SmellLabels(
        bloated=m.doc_length > model.bloated_len,
        lazy=m.edit_distance <= model.lazy_edit,
        excess_struct=m.struct_ref_count > model.excess_refs,
        tangled=m.readability <= model.tangled_readability or m.jargon_count > model.tangled_jargon,
        fragmented=m.url_count > model.fragmented_urls,
    )
