"""Decode distribution triples into VAD scores and categorical labels.

Continuous scores are expectations of each per-dimension distribution over
the sorted label coordinates; categorical decisions come from per-label joint
probabilities, the product of the three per-dimension probabilities read at
each label's sorted positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .labelspace import DIMS, DistributionTriple, LabelSpace, unsort_probabilities
from .lexicon import VadPoint

MULTI_LABEL_THRESHOLD = 0.5 ** (1.0 / 3.0)


@dataclass(frozen=True)
class Prediction:
    """Decoded model output for one text, in canonical label order.

    vad is the bounded expectation decode; vad_scores carries the score
    variant that was requested (identical unless raw expectations were asked
    for, which can leave the label coordinate range on multi-label models).
    """

    vad: VadPoint
    vad_scores: np.ndarray
    joint: np.ndarray
    label_single: str | None = None
    labels_multi: tuple[str, ...] | None = None


def predict_vad_scores(
    triple: DistributionTriple, space: LabelSpace, raw: bool = False
) -> np.ndarray:
    """Per-dimension expectations over the sorted label coordinates.

    Multi-label vectors are mass-normalized first so the score stays inside
    the label coordinate range; raw=True skips the normalization and takes
    the expectation over the unnormalized per-class probabilities.
    """
    scores = []
    for dim in DIMS:
        dist = triple.dist(dim)
        if triple.kind == "multi" and not raw:
            mass = float(dist.sum())
            if mass == 0.0:
                raise ValueError(f"all-zero {dim} vector cannot be normalized")
            dist = dist / mass
        scores.append(float(dist @ space.sorted_values(dim)))
    return np.array(scores)


def predict_vad(triple: DistributionTriple, space: LabelSpace) -> VadPoint:
    """Expectation of each dimension's distribution, as a point in VAD space."""
    return VadPoint(*predict_vad_scores(triple, space))


def joint_probabilities(triple: DistributionTriple, space: LabelSpace) -> np.ndarray:
    """Per-label product of the three per-dimension probabilities."""
    product = np.ones(space.n_labels)
    for dim in DIMS:
        product *= unsort_probabilities(space, triple.dist(dim), dim)
    return product


def predict_label_single(triple: DistributionTriple, space: LabelSpace) -> str:
    """Label with the largest joint probability; ties go to the earlier
    canonical index."""
    joint = joint_probabilities(triple, space)
    return space.names[int(np.argmax(joint))]


def predict_labels_multi(
    triple: DistributionTriple,
    space: LabelSpace,
    threshold: float = MULTI_LABEL_THRESHOLD,
) -> tuple[str, ...]:
    """Labels whose joint probability exceeds the threshold; may be empty."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold!r}")
    joint = joint_probabilities(triple, space)
    return tuple(space.names[i] for i in np.flatnonzero(joint > threshold))


def decode(
    triple: DistributionTriple,
    space: LabelSpace,
    threshold: float = MULTI_LABEL_THRESHOLD,
    raw_expectation: bool = False,
) -> Prediction:
    """Full decoding: VAD point, joint vector, and the kind's label decision."""
    joint = joint_probabilities(triple, space)
    vad = predict_vad(triple, space)
    scores = (
        predict_vad_scores(triple, space, raw=True)
        if raw_expectation
        else vad.as_array()
    )
    if triple.kind == "single":
        return Prediction(
            vad, scores, joint, label_single=space.names[int(np.argmax(joint))]
        )
    return Prediction(
        vad, scores, joint,
        labels_multi=predict_labels_multi(triple, space, threshold),
    )
