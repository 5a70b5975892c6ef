"""Word-level VAD lexicon: loading, lookup, and nearest-neighbor queries."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np

Source = Union[str, Path, IO[str]]


@dataclass(frozen=True)
class VadPoint:
    """A coordinate in the unit VAD cube: valence, arousal, dominance."""

    v: float
    a: float
    d: float

    def __post_init__(self) -> None:
        for name, value in (("v", self.v), ("a", self.a), ("d", self.d)):
            if not math.isfinite(value):
                raise ValueError(f"VAD coordinate {name} is not finite: {value!r}")
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"VAD coordinate {name} out of [0, 1]: {value!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.a, self.d], dtype=np.float64)


class VadLexicon:
    """Immutable word -> VadPoint map.

    Safe for concurrent reads once constructed; words are stored lowercase.
    """

    def __init__(self, entries: dict[str, VadPoint]):
        if not entries:
            raise ValueError("empty lexicon")
        self.entries = dict(entries)

    @property
    def size(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def lookup(self, word: str) -> VadPoint:
        """Return the point for a word (case-insensitive); error if absent."""
        point = self.entries.get(word.lower())
        if point is None:
            raise ValueError(f"label not in lexicon: {word!r}")
        return point

    @cached_property
    def _sorted_words(self) -> list[str]:
        return sorted(self.entries)

    @cached_property
    def _matrix(self) -> np.ndarray:
        return np.array(
            [self.entries[w].as_array() for w in self._sorted_words], dtype=np.float64
        )

    def nearest_neighbors(self, point: VadPoint, k: int) -> list[tuple[str, float]]:
        """The k entries closest to `point` in Euclidean distance, ascending.

        Ties are broken by lexicographic word order.
        """
        if not 1 <= k <= self.size:
            raise ValueError(f"k must be in [1, {self.size}], got {k}")
        deltas = self._matrix - point.as_array()
        distances = np.sqrt(np.sum(deltas * deltas, axis=1))
        # stable sort over a lexicographically pre-sorted word list gives the
        # documented (distance, word) order
        order = np.argsort(distances, kind="stable")[:k]
        return [(self._sorted_words[i], float(distances[i])) for i in order]


def load_lexicon(source: Source) -> VadLexicon:
    """Load a 4-column TSV lexicon (header row, then `word V A D` rows).

    UTF-8, LF or CRLF line endings.  Words are lowercased; a duplicate after
    lowercasing, a malformed row, or an out-of-range score is an error that
    names the offending line.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline=None) as handle:
            return _parse_lexicon(handle)
    return _parse_lexicon(source)


def _parse_lexicon(handle: Iterable[str]) -> VadLexicon:
    entries: dict[str, VadPoint] = {}
    lines = iter(handle)
    if next(lines, None) is None:
        raise ValueError("empty lexicon")
    for lineno, raw in enumerate(lines, start=2):
        line = raw.rstrip("\r\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ValueError(
                f"line {lineno}: expected 4 tab-separated fields, got {len(fields)}"
            )
        word = fields[0].lower()
        try:
            scores = [float(f) for f in fields[1:]]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: unparseable score: {exc}") from None
        try:
            point = VadPoint(*scores)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if word in entries:
            raise ValueError(f"line {lineno}: duplicate word {word!r}")
        entries[word] = point
    if not entries:
        raise ValueError("empty lexicon")
    return VadLexicon(entries)


def lexicon_from_text(text: str) -> VadLexicon:
    """Parse a lexicon from an in-memory TSV string (testing convenience)."""
    return load_lexicon(io.StringIO(text))


def min_max_rescale(scores: np.ndarray) -> np.ndarray:
    """Affinely map scores so min -> 0 and max -> 1.

    Requires length >= 2 and a non-degenerate range.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size < 2:
        raise ValueError("rescale needs a 1-D vector of length >= 2")
    lo, hi = float(np.min(scores)), float(np.max(scores))
    if hi <= lo:
        raise ValueError("degenerate rescale range")
    return (scores - lo) / (hi - lo)
