"""Documentation units, smell labels, and corpus ingestion/persistence.

JSONL is the canonical interchange format. Each line holds one object with
the keys ``id``, ``package``, ``class``, ``prototype`` and ``description``,
optionally ``description_html`` and a ``labels`` object carrying the five
smell flags. Javadoc-style HTML pages can be ingested as well; see
:func:`parse_javadoc_html` for the expected page structure.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import IO, Iterable, Iterator, Sequence

from docsmell.errors import (
    DuplicateId,
    MalformedBlock,
    MalformedLine,
    MixedLabeling,
    NoMethodBlocks,
    UnlabeledCorpus,
)

SMELLS = ("bloated", "lazy", "excess_struct", "tangled", "fragmented")
N_SMELLS = len(SMELLS)

SMELL_TITLES = {
    "bloated": "Bloated",
    "lazy": "Lazy",
    "excess_struct": "Excess Struct",
    "tangled": "Tangled",
    "fragmented": "Fragmented",
}


# --------------------------------------------------------------------------
# markup stripping

_COMMENT_RE = re.compile(r"<!--.*?(?:-->|$)", re.S)
_TAG_RE = re.compile(r"</?([A-Za-z!?][A-Za-z0-9]*)[^<>]*>")
_BLOCK_TAGS = frozenset(
    "p br div li ul ol dl dt dd pre table tr td th hr blockquote "
    "h1 h2 h3 h4 h5 h6".split()
)
_UNCLOSED_TAG_RE = re.compile(r"</?[A-Za-z!?][^<>]*$")
_ENTITY_RE = re.compile(r"&(amp|lt|gt|quot|nbsp|#[0-9]+|#[xX][0-9a-fA-F]+);")
_NAMED_ENTITIES = {"amp": "&", "lt": "<", "gt": ">", "quot": '"', "nbsp": " "}
_WS_RE = re.compile(r"\s+")


def _decode_entity(match: re.Match) -> str:
    name = match.group(1)
    if name in _NAMED_ENTITIES:
        return _NAMED_ENTITIES[name]
    try:
        code = int(name[2:], 16) if name[1] in "xX" else int(name[1:])
        return chr(code)
    except (ValueError, OverflowError):
        return match.group(0)


def _drop_tag(match: re.Match) -> str:
    return " " if match.group(1).lower() in _BLOCK_TAGS else ""


def _strip_once(text: str) -> str:
    text = _COMMENT_RE.sub(" ", text)
    text = _TAG_RE.sub(_drop_tag, text)
    text = _UNCLOSED_TAG_RE.sub(" ", text)
    text = _ENTITY_RE.sub(_decode_entity, text)
    return _WS_RE.sub(" ", text).strip()


def strip_markup(html: str) -> str:
    """Remove tags, decode basic entities, and collapse whitespace.

    Entity decoding can expose new tag-like text (``&lt;b&gt;``), so the
    rewrite is repeated until nothing changes. Every pass either shortens the
    string or leaves it untouched, which bounds the loop and makes the result
    idempotent.
    """
    prev = None
    text = html
    while text != prev:
        prev = text
        text = _strip_once(text)
    return text


# --------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class SmellLabels:
    bloated: bool = False
    lazy: bool = False
    excess_struct: bool = False
    tangled: bool = False
    fragmented: bool = False

    def as_tuple(self) -> tuple[bool, ...]:
        return tuple(getattr(self, name) for name in SMELLS)

    def as_dict(self) -> dict[str, bool]:
        return {name: getattr(self, name) for name in SMELLS}

    @classmethod
    def from_sequence(cls, values: Iterable) -> SmellLabels:
        values = [bool(v) for v in values]
        if len(values) != N_SMELLS:
            raise ValueError(f"expected {N_SMELLS} label values, got {len(values)}")
        return cls(*values)

    def count(self) -> int:
        return sum(self.as_tuple())

    def encoding(self) -> str:
        """Five-character bit string in smell order, e.g. ``"01000"`` for lazy."""
        return "".join("1" if v else "0" for v in self.as_tuple())

    def __iter__(self) -> Iterator[bool]:
        return iter(self.as_tuple())


@dataclass(frozen=True)
class DocUnit:
    id: str
    prototype: str
    description_text: str
    package_name: str = ""
    class_name: str = ""
    description_html: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("DocUnit.id must be non-empty")
        if not self.prototype:
            raise ValueError(f"DocUnit {self.id!r}: prototype must be non-empty")
        if strip_markup(self.description_text) != self.description_text:
            raise ValueError(f"DocUnit {self.id!r}: description_text is not normalized text")


@dataclass(frozen=True)
class Corpus:
    """Ordered documentation units, either all labeled or all unlabeled."""

    units: tuple[DocUnit, ...] = ()
    labels: tuple[SmellLabels, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        if not self.units:
            # an empty corpus carries no labeling information
            object.__setattr__(self, "labels", None)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.units):
                raise MixedLabeling()
        seen = set()
        for unit in self.units:
            if unit.id in seen:
                raise DuplicateId(unit.id)
            seen.add(unit.id)

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    def __len__(self) -> int:
        return len(self.units)

    def __iter__(self):
        return iter(self.units)

    def subset(self, indices: Iterable[int]) -> Corpus:
        indices = list(indices)
        units = [self.units[i] for i in indices]
        labels = None if self.labels is None else [self.labels[i] for i in indices]
        return Corpus(units, labels)

    def label_matrix(self):
        """Labels as an ``(n, 5)`` boolean numpy array."""
        import numpy as np

        if self.labels is None:
            raise UnlabeledCorpus()
        return np.array([lab.as_tuple() for lab in self.labels], dtype=bool).reshape(-1, N_SMELLS)


# --------------------------------------------------------------------------
# JSONL

_REQUIRED_KEYS = ("id", "package", "class", "prototype", "description")


def _parse_labels(obj, line_no: int) -> SmellLabels:
    if not isinstance(obj, dict) or set(obj) != set(SMELLS):
        raise MalformedLine(line_no, "labels must hold exactly the five smell keys")
    if not all(isinstance(obj[k], bool) for k in SMELLS):
        raise MalformedLine(line_no, "label values must be booleans")
    return SmellLabels(**obj)


def _parse_record(line: str, line_no: int) -> tuple[DocUnit, SmellLabels | None]:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(line_no, exc.msg) from None
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "record is not an object")
    for key in _REQUIRED_KEYS:
        if not isinstance(obj.get(key), str):
            raise MalformedLine(line_no, f"missing or non-string {key!r}")
    html = obj.get("description_html")
    if html is not None and not isinstance(html, str):
        raise MalformedLine(line_no, "description_html must be a string")
    try:
        unit = DocUnit(
            id=obj["id"],
            prototype=obj["prototype"],
            description_text=strip_markup(obj["description"]),
            package_name=obj["package"],
            class_name=obj["class"],
            description_html=html,
        )
    except ValueError as exc:
        raise MalformedLine(line_no, str(exc)) from None
    labels = _parse_labels(obj["labels"], line_no) if "labels" in obj else None
    return unit, labels


def parse_jsonl(data: bytes | str | Iterable[str]) -> Corpus:
    """Parse a JSONL byte stream (or text, or iterable of lines) into a corpus."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    # records are LF-delimited; str.splitlines would also split on U+0085 etc.
    lines = data.split("\n") if isinstance(data, str) else data
    units: list[DocUnit] = []
    labels: list[SmellLabels] = []
    seen: set[str] = set()
    labeled: bool | None = None
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        unit, lab = _parse_record(line, line_no)
        if unit.id in seen:
            raise DuplicateId(unit.id)
        seen.add(unit.id)
        if labeled is None:
            labeled = lab is not None
        elif labeled != (lab is not None):
            raise MixedLabeling(line_no)
        units.append(unit)
        if lab is not None:
            labels.append(lab)
    return Corpus(units, labels if labeled else None)


def unit_record(unit: DocUnit, labels: SmellLabels | None = None) -> dict:
    rec = {
        "id": unit.id,
        "package": unit.package_name,
        "class": unit.class_name,
        "prototype": unit.prototype,
        "description": unit.description_text,
    }
    if unit.description_html is not None:
        rec["description_html"] = unit.description_html
    if labels is not None:
        rec["labels"] = labels.as_dict()
    return rec


def write_jsonl(corpus: Corpus, out: IO[str] | None = None) -> str:
    """Serialize ``corpus`` to canonical JSONL; also written to ``out`` if given."""
    lines = []
    for i, unit in enumerate(corpus.units):
        lab = corpus.labels[i] if corpus.labels is not None else None
        lines.append(json.dumps(unit_record(unit, lab), ensure_ascii=False))
    text = "".join(line + "\n" for line in lines)
    if out is not None:
        out.write(text)
    return text


def load_corpus(path) -> Corpus:
    with open(path, "rb") as fh:
        return parse_jsonl(fh.read())


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_jsonl(corpus, fh)


# --------------------------------------------------------------------------
# Javadoc HTML


class _EventCollector(HTMLParser):
    """Flat list of (kind, tag, attrs, start, end) events with absolute offsets."""

    def __init__(self, source: str):
        super().__init__(convert_charrefs=False)
        self.source = source
        self.line_starts = [0]
        for m in re.finditer("\n", source):
            self.line_starts.append(m.end())
        self.events: list[tuple[str, str, dict, int, int]] = []

    def _offset(self) -> int:
        line, col = self.getpos()
        return self.line_starts[line - 1] + col

    def handle_starttag(self, tag, attrs):
        start = self._offset()
        end = start + len(self.get_starttag_text() or "")
        self.events.append(("start", tag, dict(attrs), start, end))

    def handle_startendtag(self, tag, attrs):
        start = self._offset()
        end = start + len(self.get_starttag_text() or "")
        self.events.append(("start", tag, dict(attrs), start, end))
        self.events.append(("end", tag, {}, end, end))

    def handle_endtag(self, tag):
        start = self._offset()
        close = self.source.find(">", start)
        end = len(self.source) if close < 0 else close + 1
        self.events.append(("end", tag, {}, start, end))


def _has_class(attrs: dict, name: str) -> bool:
    return name in (attrs.get("class") or "").split()


def _element_inner(events, i: int, source: str) -> tuple[str, int]:
    """Inner markup of the element opened at ``events[i]``; returns (html, index of close)."""
    tag = events[i][1]
    depth = 0
    for j in range(i, len(events)):
        kind, t, _, start, _ = events[j]
        if t != tag:
            continue
        if kind == "start":
            depth += 1
        else:
            depth -= 1
            if depth == 0:
                return source[events[i][4]:start], j
    return source[events[i][4]:], len(events)


def _page_names(events, source: str) -> tuple[str, str]:
    package = cls = ""
    for i, (kind, tag, attrs, _, _) in enumerate(events):
        if kind != "start":
            continue
        if not package and tag == "div" and _has_class(attrs, "subTitle"):
            package = strip_markup(_element_inner(events, i, source)[0])
        elif not cls and tag == "h2" and _has_class(attrs, "title"):
            title = attrs.get("title") or strip_markup(_element_inner(events, i, source)[0])
            words = title.split()
            cls = words[-1] if words else ""
    return package, cls


def parse_javadoc_html(document: str, source_id: str) -> list[DocUnit]:
    """Extract one :class:`DocUnit` per method-detail block of a Javadoc page.

    The page layout follows Java SE 7 Javadoc: an ``<h3>Method Detail</h3>``
    section (optional in minimal fixtures) containing blocks that each start
    with an ``<h4>`` heading, followed by a ``<pre>`` signature and a
    ``<div class="block">`` description. Unit ids are ``source_id#index``.
    """
    collector = _EventCollector(document)
    collector.feed(document)
    collector.close()
    events = collector.events

    lo, hi = 0, len(events)
    for i, (kind, tag, _, _, _) in enumerate(events):
        if kind == "start" and tag == "h3":
            heading, close = _element_inner(events, i, document)
            if strip_markup(heading).lower().startswith("method detail"):
                lo = close + 1
                hi = next(
                    (j for j in range(lo, len(events)) if events[j][:2] == ("start", "h3")),
                    len(events),
                )
                break

    heads = [i for i in range(lo, hi) if events[i][:2] == ("start", "h4")]
    if not heads:
        raise NoMethodBlocks(source_id)
    package, cls = _page_names(events, document)

    units = []
    for index, head in enumerate(heads):
        stop = heads[index + 1] if index + 1 < len(heads) else hi
        prototype = ""
        description_html = None
        for j in range(head, stop):
            kind, tag, attrs, _, _ = events[j]
            if kind != "start":
                continue
            if tag == "pre" and not prototype:
                prototype = strip_markup(_element_inner(events, j, document)[0])
            elif tag == "div" and description_html is None and _has_class(attrs, "block"):
                description_html = _element_inner(events, j, document)[0].strip()
        if not prototype:
            raise MalformedBlock(index, source_id)
        html = description_html or ""
        units.append(
            DocUnit(
                id=f"{source_id}#{index}",
                prototype=prototype,
                description_text=strip_markup(html),
                package_name=package,
                class_name=cls,
                description_html=html,
            )
        )
    return units


# --------------------------------------------------------------------------
# statistics


@dataclass
class LabelDistribution:
    total: int
    per_smell: dict[str, int]
    histogram: dict[int, int] = field(default_factory=dict)

    @property
    def smelly(self) -> int:
        return self.total - self.histogram.get(0, 0)

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "at_least_one": self.smelly,
            "per_smell": dict(self.per_smell),
            "smell_count_histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


def label_distribution(corpus: Corpus | Sequence[SmellLabels]) -> LabelDistribution:
    if isinstance(corpus, Corpus):
        if not corpus.labeled:
            raise UnlabeledCorpus()
        labels = corpus.labels
    else:
        labels = corpus
    per_smell = {name: 0 for name in SMELLS}
    hist: Counter = Counter()
    for lab in labels:
        for name, flag in zip(SMELLS, lab.as_tuple()):
            per_smell[name] += flag
        hist[lab.count()] += 1
    return LabelDistribution(total=len(labels), per_smell=per_smell, histogram=dict(hist))
