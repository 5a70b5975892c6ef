"""Dataset loading, reproducible splitting, and planted synthetic corpora.

One generic delimited interchange format covers categorical corpora:

    id<sep>text<sep>label            (single-label; one label name per row)
    id<sep>text<sep>joy<sep>fear...  (multi-label; one 0/1 column per label)

and VAD-annotated corpora:

    id<sep>text<sep>V<sep>A<sep>D    (scores in a declared source range)

The separator (tab or comma) is auto-detected from the header line; fields
follow standard delimited-text quoting; UTF-8, LF or CRLF.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .labelspace import AnnotationVector, Kind
from .lexicon import VadLexicon, VadPoint

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.7, 0.15, 0.15)
DEFAULT_SPLIT_SEED = 42
DEFAULT_VAD_RANGE = (1.0, 5.0)


@dataclass(frozen=True)
class LabeledExample:
    id: str
    text: str
    annotation: AnnotationVector | VadPoint


@dataclass(frozen=True)
class DatasetSplit:
    train: list[LabeledExample]
    valid: list[LabeledExample]
    test: list[LabeledExample]
    seed: int
    ratios: tuple[float, float, float]

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.valid), len(self.test)


def _detect_delimiter(header_line: str) -> str:
    return "\t" if "\t" in header_line else ","


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        first = handle.readline()
        if not first:
            raise ValueError(f"{path}: empty file")
        delimiter = _detect_delimiter(first)
        header = next(csv.reader([first], delimiter=delimiter))
        rows = list(csv.reader(handle, delimiter=delimiter))
    return header, rows


def load_categorical(
    path: str | Path, labels: Sequence[str] | None = None
) -> tuple[list[LabeledExample], list[str], Kind]:
    """Load a categorical corpus; returns examples, canonical names, kind.

    The header decides the shape: a third column literally named `label`
    means single-label rows; otherwise columns 3..N are the label names of a
    multi-hot layout.  For single-label data the canonical order is the order
    of first appearance unless `labels` pins it explicitly.
    """
    header, rows = _read_rows(path)
    if len(header) < 3 or [h.lower() for h in header[:2]] != ["id", "text"]:
        raise ValueError(f"{path}: header must start with id,text")
    if len(header) == 3 and header[2].lower() == "label":
        return _load_single_label(path, rows, labels)
    return _load_multi_hot(path, header, rows, labels)


def _load_single_label(path, rows, labels):
    declared = list(labels) if labels else None
    seen: list[str] = []
    parsed: list[tuple[str, str, str]] = []
    ids: set[str] = set()
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        ex_id, text, label = row
        if ex_id in ids:
            raise ValueError(f"{path}:{lineno}: duplicate id {ex_id!r}")
        ids.add(ex_id)
        if declared is not None and label not in declared:
            raise ValueError(f"{path}:{lineno}: unknown label {label!r}")
        if label not in seen:
            seen.append(label)
        parsed.append((ex_id, text, label))
    names = declared if declared is not None else seen
    if len(names) < 2:
        raise ValueError(f"{path}: fewer than 2 distinct labels")
    index = {name: i for i, name in enumerate(names)}
    examples = []
    for ex_id, text, label in parsed:
        values = np.zeros(len(names))
        values[index[label]] = 1.0
        examples.append(
            LabeledExample(ex_id, text, AnnotationVector(values, "single"))
        )
    return examples, list(names), "single"


def _load_multi_hot(path, header, rows, labels):
    names = header[2:]
    if labels is not None and list(labels) != names:
        raise ValueError(
            f"{path}: declared labels {list(labels)} do not match header {names}"
        )
    if len(names) != len(set(names)):
        raise ValueError(f"{path}: duplicate label columns")
    if len(names) < 2:
        raise ValueError(f"{path}: fewer than 2 label columns")
    examples = []
    ids: set[str] = set()
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        ex_id, text = row[0], row[1]
        if ex_id in ids:
            raise ValueError(f"{path}:{lineno}: duplicate id {ex_id!r}")
        ids.add(ex_id)
        values = np.zeros(len(names))
        for i, cell in enumerate(row[2:]):
            if cell not in ("0", "1"):
                raise ValueError(
                    f"{path}:{lineno}: non-binary cell {cell!r} in column "
                    f"{names[i]!r}"
                )
            values[i] = float(cell)
        examples.append(LabeledExample(ex_id, text, AnnotationVector(values, "multi")))
    return examples, names, "multi"


def load_vad(
    path: str | Path, source_range: tuple[float, float] = DEFAULT_VAD_RANGE
) -> list[LabeledExample]:
    """Load a VAD-annotated corpus, rescaling scores from source_range to [0, 1]."""
    lo, hi = source_range
    if not lo < hi:
        raise ValueError(f"bad source range: {source_range}")
    header, rows = _read_rows(path)
    if len(header) != 5 or [h.lower() for h in header] != ["id", "text", "v", "a", "d"]:
        raise ValueError(f"{path}: header must be id,text,V,A,D")
    examples = []
    ids: set[str] = set()
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
        ex_id, text = row[0], row[1]
        if ex_id in ids:
            raise ValueError(f"{path}:{lineno}: duplicate id {ex_id!r}")
        ids.add(ex_id)
        try:
            scores = [float(cell) for cell in row[2:]]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: unparseable score") from None
        rescaled = []
        for score in scores:
            if not lo <= score <= hi:
                raise ValueError(
                    f"{path}:{lineno}: score {score} outside [{lo}, {hi}]"
                )
            rescaled.append(rescale_score(score, lo, hi))
        examples.append(LabeledExample(ex_id, text, VadPoint(*rescaled)))
    return examples


def rescale_score(score: float, lo: float, hi: float) -> float:
    return (score - lo) / (hi - lo)


def write_categorical(
    path: str | Path,
    examples: Sequence[LabeledExample],
    label_names: Sequence[str],
    kind: Kind,
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        if kind == "single":
            writer.writerow(["id", "text", "label"])
            for ex in examples:
                label = label_names[int(np.argmax(ex.annotation.values))]
                writer.writerow([ex.id, ex.text, label])
        else:
            writer.writerow(["id", "text", *label_names])
            for ex in examples:
                cells = [str(int(v)) for v in ex.annotation.values]
                writer.writerow([ex.id, ex.text, *cells])


def write_vad(path: str | Path, examples: Sequence[LabeledExample]) -> None:
    """Write [0, 1] VAD targets at full precision (reload with range (0, 1))."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(["id", "text", "V", "A", "D"])
        for ex in examples:
            point = ex.annotation
            writer.writerow([ex.id, ex.text, repr(point.v), repr(point.a),
                             repr(point.d)])


def _allocate(n: int, ratios: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of n items; remainders tie to the
    earlier split."""
    exact = [n * r for r in ratios]
    counts = [int(x) for x in exact]
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def _check_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValueError("need three nonnegative ratios")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    return tuple(float(r) for r in ratios)


def stratified_split(
    examples: Sequence[LabeledExample],
    ratios: Sequence[float] = DEFAULT_RATIOS,
    seed: int = DEFAULT_SPLIT_SEED,
) -> DatasetSplit:
    """Per-class largest-remainder split of a single-label dataset.

    Each class's proportions land within one example of the global ratios.
    Classes with fewer than 3 members go entirely to train, with a warning.
    """
    ratios = _check_ratios(ratios)
    if not examples:
        raise ValueError("empty dataset")
    for ex in examples:
        if not isinstance(ex.annotation, AnnotationVector) or ex.annotation.kind != "single":
            raise ValueError("stratified split needs single-label annotations")
    rng = np.random.default_rng(seed)
    n_classes = examples[0].annotation.values.size
    by_class: list[list[int]] = [[] for _ in range(n_classes)]
    for i, ex in enumerate(examples):
        by_class[int(np.argmax(ex.annotation.values))].append(i)
    buckets: list[list[int]] = [[], [], []]
    for label_index, members in enumerate(by_class):
        if not members:
            continue
        if len(members) < 3:
            logger.warning(
                "class %d has %d example(s); placing all in train",
                label_index, len(members),
            )
            buckets[0].extend(members)
            continue
        members = list(rng.permutation(members))
        counts = _allocate(len(members), ratios)
        start = 0
        for bucket, count in zip(buckets, counts):
            bucket.extend(int(i) for i in members[start : start + count])
            start += count
    parts = [[examples[i] for i in sorted(bucket)] for bucket in buckets]
    return DatasetSplit(*parts, seed=seed, ratios=ratios)


def shuffled_split(
    examples: Sequence[LabeledExample],
    ratios: Sequence[float] = DEFAULT_RATIOS,
    seed: int = DEFAULT_SPLIT_SEED,
) -> DatasetSplit:
    """Plain seeded shuffle split (multi-label and VAD datasets)."""
    ratios = _check_ratios(ratios)
    if not examples:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(examples))
    counts = _allocate(len(examples), ratios)
    parts = []
    start = 0
    for count in counts:
        picked = sorted(int(i) for i in order[start : start + count])
        parts.append([examples[i] for i in picked])
        start += count
    return DatasetSplit(*parts, seed=seed, ratios=ratios)


def synth_generate(
    label_names: Sequence[str],
    lexicon: VadLexicon,
    n: int,
    noise_rate: float,
    seed: int,
    kind: Kind = "single",
    signal_tokens: dict[str, list[str]] | None = None,
    noise_tokens: Sequence[str] | None = None,
    tokens_per_text: tuple[int, int] = (8, 14),
    max_labels: int = 3,
) -> tuple[list[LabeledExample], list[VadPoint]]:
    """Planted corpus: texts built from per-label signal tokens plus noise.

    Each example's ground-truth VAD is the mean of its labels' coordinates;
    the second return value carries it, aligned with the examples.  Fully
    deterministic for a given seed.
    """
    if n < 1:
        raise ValueError("empty dataset: n must be >= 1")
    if not 0.0 <= noise_rate <= 1.0:
        raise ValueError("noise rate must lie in [0, 1]")
    if len(label_names) < 2:
        raise ValueError("need at least 2 labels")
    coords = np.array([lexicon.lookup(name).as_array() for name in label_names])
    if signal_tokens is None:
        signal_tokens = {name: [f"{name}sig{j}" for j in range(4)] for name in label_names}
    if noise_tokens is None:
        noise_tokens = [f"filler{j:02d}" for j in range(40)]
    for name in label_names:
        if not signal_tokens.get(name):
            raise ValueError(f"empty vocabulary: no signal tokens for {name!r}")
    if noise_rate > 0 and not noise_tokens:
        raise ValueError("empty vocabulary: no noise tokens")

    rng = np.random.default_rng(seed)
    n_labels = len(label_names)
    lo, hi = tokens_per_text
    examples: list[LabeledExample] = []
    truths: list[VadPoint] = []
    for i in range(n):
        if kind == "single":
            picks = [int(rng.integers(n_labels))]
        else:
            count = 1 + int(rng.integers(min(max_labels, n_labels)))
            picks = sorted(int(p) for p in rng.choice(n_labels, count, replace=False))
        length = int(rng.integers(lo, hi + 1))
        tokens = []
        for _ in range(length):
            if float(rng.uniform()) < noise_rate:
                tokens.append(noise_tokens[int(rng.integers(len(noise_tokens)))])
            else:
                label = label_names[picks[int(rng.integers(len(picks)))]]
                pool = signal_tokens[label]
                tokens.append(pool[int(rng.integers(len(pool)))])
        values = np.zeros(n_labels)
        values[picks] = 1.0
        annotation = AnnotationVector(values, kind)
        examples.append(LabeledExample(f"s{i:06d}", " ".join(tokens), annotation))
        truths.append(VadPoint(*coords[picks].mean(axis=0)))
    return examples, truths
