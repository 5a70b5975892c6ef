import numpy as np
import pytest

from emovad.labelspace import (
    AnnotationVector,
    DistributionTriple,
    build_label_space,
    multi_hot,
    one_hot,
    sort_annotation,
    target_triple,
    unsort_probabilities,
)
from emovad.lexicon import lexicon_from_text

HEADER = "word\tV\tA\tD\n"


def test_paper_valence_order(four_label_space):
    assert four_label_space.sorted_names("v") == ["anger", "sad", "joy", "happy"]


def test_values_non_decreasing_and_consistent(four_label_space):
    space = four_label_space
    for dim in ("v", "a", "d"):
        values = space.sorted_values(dim)
        assert np.all(np.diff(values) >= 0)
        perm = space.perm(dim)
        assert sorted(perm.tolist()) == list(range(space.n_labels))
        for pos, canonical in enumerate(perm):
            assert values[pos] == getattr(space.coords[canonical], dim)


def test_tie_breaks_lexicographically():
    lex = lexicon_from_text(
        HEADER + "beta\t0.5\t0.3\t0.1\nalpha\t0.5\t0.7\t0.9\n"
    )
    space = build_label_space(["beta", "alpha"], lex)
    assert space.sorted_names("v") == ["alpha", "beta"]


def test_build_rejects_bad_inputs(four_label_lexicon):
    with pytest.raises(ValueError, match="at least 2"):
        build_label_space(["joy"], four_label_lexicon)
    with pytest.raises(ValueError, match="duplicate"):
        build_label_space(["joy", "joy"], four_label_lexicon)
    with pytest.raises(ValueError, match="not in lexicon"):
        build_label_space(["joy", "nosuchlabel"], four_label_lexicon)


def test_build_is_deterministic(four_label_lexicon):
    names = ["joy", "sad", "happy", "anger"]
    a = build_label_space(names, four_label_lexicon)
    b = build_label_space(names, four_label_lexicon)
    for dim in ("v", "a", "d"):
        assert np.array_equal(a.perm(dim), b.perm(dim))
        assert np.array_equal(a.sorted_values(dim), b.sorted_values(dim))


def test_sort_one_hot_joy_on_valence(four_label_space):
    # canonical (joy, sad, happy, anger); joy is third in (anger, sad, joy, happy)
    ann = one_hot(0, 4)
    np.testing.assert_array_equal(
        sort_annotation(four_label_space, ann, "v"), [0, 0, 1, 0]
    )


def test_sort_all_ones_is_all_ones(four_label_space):
    ann = multi_hot([0, 1, 2, 3], 4)
    for dim in ("v", "a", "d"):
        np.testing.assert_array_equal(
            sort_annotation(four_label_space, ann, dim), np.ones(4)
        )


def test_unsort_hand_example(four_label_space):
    np.testing.assert_array_equal(
        unsort_probabilities(four_label_space, np.array([0, 0, 1.0, 0]), "v"),
        [1, 0, 0, 0],
    )


def test_unsort_round_trips_random_vectors(four_label_space):
    rng = np.random.default_rng(3)
    for _ in range(30):
        vec = rng.uniform(0, 1, size=4)
        for dim in ("v", "a", "d"):
            ann = AnnotationVector((vec > 0.5).astype(float), "multi")
            down = sort_annotation(four_label_space, ann, dim)
            np.testing.assert_array_equal(
                unsort_probabilities(four_label_space, down, dim), ann.values
            )
            sorted_vec = vec[four_label_space.perm(dim)]
            np.testing.assert_array_equal(
                unsort_probabilities(four_label_space, sorted_vec, dim), vec
            )


def test_unsort_uniform_is_identity(four_label_space):
    uniform = np.full(4, 0.25)
    np.testing.assert_array_equal(
        unsort_probabilities(four_label_space, uniform, "a"), uniform
    )


def test_unsort_length_mismatch(four_label_space):
    with pytest.raises(ValueError, match="length-4"):
        unsort_probabilities(four_label_space, np.ones(3), "v")


def test_annotation_validation():
    with pytest.raises(ValueError, match="one-hot"):
        AnnotationVector(np.array([1.0, 1.0]), "single")
    with pytest.raises(ValueError, match="0 or 1"):
        AnnotationVector(np.array([0.5, 0.5]), "multi")
    with pytest.raises(ValueError, match="kind"):
        AnnotationVector(np.array([1.0, 0.0]), "both")
    # empty multi-hot rows occur in real corpora and are allowed
    AnnotationVector(np.zeros(3), "multi")


def test_target_triple_sorts_each_dim(four_label_space):
    ann = one_hot(0, 4)
    triple = target_triple(four_label_space, ann)
    assert triple.kind == "single"
    for dim in ("v", "a", "d"):
        np.testing.assert_array_equal(
            triple.dist(dim), sort_annotation(four_label_space, ann, dim)
        )


def test_distribution_triple_validation():
    good = np.array([0.5, 0.5])
    with pytest.raises(ValueError, match="sum to 1"):
        DistributionTriple(good, good, np.array([0.5, 0.4]), "single")
    with pytest.raises(ValueError, match="0, 1"):
        DistributionTriple(good, good, np.array([1.5, -0.5]), "multi")
    with pytest.raises(ValueError, match="equal length"):
        DistributionTriple(good, good, np.array([0.2, 0.3, 0.5]), "single")
