"""The six rule-based documentation metrics."""

from __future__ import annotations

import math
import os
import re
import sys
from dataclasses import astuple, dataclass, fields
from importlib import resources
from typing import Iterable, Sequence

from docsmell.corpus import DocUnit
from docsmell.errors import EmptyText

# Readability recorded for an empty description: the largest finite float, so
# "readability <= threshold" never fires on empty text.
EMPTY_READABILITY = sys.float_info.max

METRIC_NAMES = (
    "doc_length",
    "readability",
    "jargon_count",
    "url_count",
    "struct_ref_count",
    "edit_distance",
)

LEXICON_ENV = "DOCSMELL_LEXICON"

_TOKEN_RE = re.compile(r"[^\W_]+")
_TERMINATOR_RE = re.compile(r"[.!?]+")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")
_ACRONYM_RE = re.compile(r"[A-Z]{2,6}")


@dataclass(frozen=True)
class MetricVector:
    doc_length: int
    readability: float
    jargon_count: int
    url_count: int
    struct_ref_count: int
    edit_distance: int

    def as_tuple(self) -> tuple:
        return astuple(self)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Lexicon:
    common_words: frozenset[str]

    def __post_init__(self):
        if not self.common_words:
            raise ValueError("lexicon must be non-empty")
        for word in self.common_words:
            if word != word.lower() or not word or any(c.isspace() for c in word):
                raise ValueError(f"invalid lexicon entry {word!r}")

    def __contains__(self, word: str) -> bool:
        return word in self.common_words

    @classmethod
    def from_words(cls, words: Iterable[str]) -> Lexicon:
        return cls(frozenset(words))

    @classmethod
    def from_text(cls, text: str) -> Lexicon:
        words = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                words.append(line.lower())
        return cls(frozenset(words))

    @classmethod
    def load(cls, path) -> Lexicon:
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


_default_lexicon: Lexicon | None = None


def default_lexicon() -> Lexicon:
    """Lexicon named by ``$DOCSMELL_LEXICON``, else the bundled common-word list."""
    global _default_lexicon
    override = os.environ.get(LEXICON_ENV)
    if override:
        return Lexicon.load(override)
    if _default_lexicon is None:
        text = resources.files("docsmell").joinpath("data/common_words.txt").read_text("utf-8")
        _default_lexicon = Lexicon.from_text(text)
    return _default_lexicon


# --------------------------------------------------------------------------
# individual metrics


def tokenize_cased(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def tokenize(text: str) -> list[str]:
    """Split on runs of non-alphanumeric characters and lowercase."""
    return [tok.lower() for tok in _TOKEN_RE.findall(text)]


def doc_length(text: str) -> int:
    return len(tokenize(text))


def count_syllables(word: str) -> int:
    word = word.lower()
    groups = _VOWEL_GROUP_RE.findall(word)
    n = len(groups)
    # trailing silent 'e': a lone final 'e' after a consonant, with another vowel group before it
    if n > 1 and groups[-1] == "e" and word.endswith("e") and len(word) > 1 and word[-2] not in "aeiouy":
        n -= 1
    return max(n, 1)


def flesch_reading_ease(text: str) -> float:
    words = tokenize(text)
    if not words:
        raise EmptyText()
    sentences = max(len(_TERMINATOR_RE.findall(text)), 1)
    syllables = sum(count_syllables(w) for w in words)
    n = len(words)
    return 206.835 - 1.015 * (n / sentences) - 84.6 * (syllables / n)


def count_acronyms_jargon(tokens_cased: Sequence[str], lexicon: Lexicon) -> int:
    count = 0
    for tok in tokens_cased:
        if _ACRONYM_RE.fullmatch(tok):
            count += 1
            continue
        low = tok.lower()
        if low.isalpha() and len(low) >= 4 and low not in lexicon:
            count += 1
    return count


_SCHEME_RE = re.compile(r"https?://[^\s\"'<>]*")
_HREF_RE = re.compile(r"\bhref\s*=\s*(?:\"[^\"]*\"|'[^']*'|[^\s>]+)", re.I)
_LINK_TAG_RE = re.compile(r"\{@link(?:plain)?\b[^}]*\}")


def _merged_span_count(spans: list[tuple[int, int]]) -> int:
    count = 0
    last_end = -1
    for start, end in sorted(spans):
        if start >= last_end:
            count += 1
            last_end = end
        else:
            last_end = max(last_end, end)
    return count


def count_urls(unit: DocUnit) -> int:
    """Links in the description.

    With markup available, scheme URLs, ``href`` attributes and
    ``{@link}``/``{@linkplain}`` tags are matched in the markup and
    overlapping matches merge into one (an ``href="http://..."`` is a single
    link). Without markup, scheme URLs in the plain text are counted.
    """
    if unit.description_html:
        html = unit.description_html
        spans = [m.span() for pat in (_SCHEME_RE, _HREF_RE, _LINK_TAG_RE) for m in pat.finditer(html)]
        return _merged_span_count(spans)
    return len(_SCHEME_RE.findall(unit.description_text))


_EDGE_PUNCT = ",;:!?\"'`"
_DOTTED_RE = re.compile(r"[A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)+")
_CALL_RE = re.compile(r"[A-Za-z_$][\w$#.]*\([^()]*\)")
_LOWER_UPPER_RE = re.compile(r"[a-z][A-Z]")


def _case_transitions(word: str) -> int:
    letters = [c for c in word if c.isalpha()]
    return sum(1 for a, b in zip(letters, letters[1:]) if a.isupper() != b.isupper())


def is_struct_ref(word: str) -> bool:
    word = word.strip(_EDGE_PUNCT).rstrip(".").strip(_EDGE_PUNCT)
    if not word:
        return False
    if _DOTTED_RE.fullmatch(word) or _CALL_RE.fullmatch(word):
        return True
    return bool(_LOWER_UPPER_RE.search(word)) or _case_transitions(word) >= 2


def count_struct_refs(text: str) -> int:
    """Words that name code: qualified names, calls, or camel/Pascal-case identifiers."""
    return sum(1 for word in text.split() if is_struct_ref(word))


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def compute_metrics(unit: DocUnit, lexicon: Lexicon | None = None) -> MetricVector:
    lexicon = lexicon or default_lexicon()
    text = unit.description_text
    words = tokenize_cased(text)
    readability = flesch_reading_ease(text) if words else EMPTY_READABILITY
    return MetricVector(
        doc_length=len(words),
        readability=readability,
        jargon_count=count_acronyms_jargon(words, lexicon),
        url_count=count_urls(unit),
        struct_ref_count=count_struct_refs(text),
        edit_distance=levenshtein(text, unit.prototype),
    )


def is_empty_readability(value: float) -> bool:
    return value >= EMPTY_READABILITY or math.isinf(value)


def metrics_csv(ids: Sequence[str], vectors: Sequence[MetricVector]) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("id",) + METRIC_NAMES)
    for uid, vec in zip(ids, vectors):
        writer.writerow((uid,) + vec.as_tuple())
    return buf.getvalue()
