"""Ordered label set with per-dimension VAD sorting permutations.

Canonical order is the order labels arrive from the dataset.  For each of the
three dimensions the labels are additionally sorted ascending by that
coordinate (ties broken by label name); annotation vectors are permuted into
this sorted order to serve as training targets, and predicted probabilities
are permuted back for per-label reads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .lexicon import VadLexicon, VadPoint

Dim = Literal["v", "a", "d"]
DIMS: tuple[Dim, Dim, Dim] = ("v", "a", "d")

Kind = Literal["single", "multi"]


@dataclass(frozen=True)
class LabelSpace:
    names: tuple[str, ...]
    coords: tuple[VadPoint, ...]
    perms: dict[Dim, np.ndarray]    # sorted position -> canonical index
    values: dict[Dim, np.ndarray]   # per-dimension coordinates, non-decreasing

    @property
    def n_labels(self) -> int:
        return len(self.names)

    def perm(self, dim: Dim) -> np.ndarray:
        return self.perms[dim]

    def sorted_values(self, dim: Dim) -> np.ndarray:
        return self.values[dim]

    def sorted_names(self, dim: Dim) -> list[str]:
        return [self.names[i] for i in self.perms[dim]]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValueError(f"unknown label: {name!r}") from None


@dataclass(frozen=True)
class AnnotationVector:
    """Length-C 0/1 vector in canonical label order."""

    values: np.ndarray
    kind: Kind

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if self.kind not in ("single", "multi"):
            raise ValueError(f"unknown annotation kind: {self.kind!r}")
        if values.ndim != 1:
            raise ValueError("annotation must be a 1-D vector")
        if not np.all(np.isin(values, (0.0, 1.0))):
            raise ValueError("annotation entries must be 0 or 1")
        if self.kind == "single" and int(values.sum()) != 1:
            raise ValueError("single-label annotation must be one-hot")

    def label_names(self, space: LabelSpace) -> list[str]:
        return [space.names[i] for i in np.flatnonzero(self.values)]


def one_hot(index: int, n_labels: int) -> AnnotationVector:
    values = np.zeros(n_labels)
    values[index] = 1.0
    return AnnotationVector(values, "single")


def multi_hot(indices: list[int], n_labels: int) -> AnnotationVector:
    values = np.zeros(n_labels)
    values[indices] = 1.0
    return AnnotationVector(values, "multi")


def build_label_space(names: list[str], lexicon: VadLexicon) -> LabelSpace:
    """Resolve label names in the lexicon and build the three sort orders."""
    if len(names) < 2:
        raise ValueError("need at least 2 labels")
    if len(set(names)) != len(names):
        raise ValueError("duplicate label names")
    coords = tuple(lexicon.lookup(name) for name in names)
    perms: dict[Dim, np.ndarray] = {}
    values: dict[Dim, np.ndarray] = {}
    for dim in DIMS:
        order = sorted(
            range(len(names)), key=lambda i: (getattr(coords[i], dim), names[i])
        )
        perms[dim] = np.array(order, dtype=np.intp)
        values[dim] = np.array(
            [getattr(coords[i], dim) for i in order], dtype=np.float64
        )
    return LabelSpace(tuple(names), coords, perms, values)


@dataclass(frozen=True)
class DistributionTriple:
    """Three length-C vectors in sorted-label order, one per VAD dimension.

    Either a training target built from an annotation or a model prediction.
    kind="single" vectors live on the probability simplex; kind="multi"
    vectors hold independent per-class probabilities in [0, 1].
    """

    dist_v: np.ndarray
    dist_a: np.ndarray
    dist_d: np.ndarray
    kind: Kind

    def __post_init__(self) -> None:
        vectors = [np.asarray(d, dtype=np.float64) for d in
                   (self.dist_v, self.dist_a, self.dist_d)]
        for name, vec in zip(("dist_v", "dist_a", "dist_d"), vectors):
            object.__setattr__(self, name, vec)
            if vec.ndim != 1 or vec.shape != vectors[0].shape:
                raise ValueError("distributions must be 1-D and equal length")
            if not np.all(np.isfinite(vec)):
                raise ValueError("non-finite distribution entries")
            if np.any(vec < 0.0) or np.any(vec > 1.0):
                raise ValueError("distribution entries must lie in [0, 1]")
            if self.kind == "single" and abs(float(vec.sum()) - 1.0) > 1e-6:
                raise ValueError(f"{name} does not sum to 1")
        if self.kind not in ("single", "multi"):
            raise ValueError(f"unknown kind: {self.kind!r}")

    def dist(self, dim: Dim) -> np.ndarray:
        return {"v": self.dist_v, "a": self.dist_a, "d": self.dist_d}[dim]


def target_triple(space: LabelSpace, ann: AnnotationVector) -> DistributionTriple:
    """Sort an annotation along each dimension to form the training target."""
    sorted_dims = [sort_annotation(space, ann, dim) for dim in DIMS]
    return DistributionTriple(*sorted_dims, kind=ann.kind)


def sort_annotation(space: LabelSpace, ann: AnnotationVector, dim: Dim) -> np.ndarray:
    """Permute a canonical-order annotation into `dim`-sorted order."""
    return ann.values[space.perms[dim]]


def unsort_probabilities(space: LabelSpace, probs: np.ndarray, dim: Dim) -> np.ndarray:
    """Inverse of sort_annotation: sorted-order vector back to canonical order."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (space.n_labels,):
        raise ValueError(
            f"expected length-{space.n_labels} vector, got shape {probs.shape}"
        )
    out = np.empty_like(probs)
    out[space.perms[dim]] = probs
    return out
