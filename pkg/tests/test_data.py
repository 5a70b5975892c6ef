import logging

import numpy as np
import pytest

from emovad.data import (
    DatasetSplit,
    LabeledExample,
    load_categorical,
    load_vad,
    rescale_score,
    shuffled_split,
    stratified_split,
    synth_generate,
    write_categorical,
    write_vad,
)
from emovad.labelspace import AnnotationVector
from emovad.lexicon import VadPoint, lexicon_from_text

HEADER = "word\tV\tA\tD\n"


def write(tmp_path, name, content):
    path = tmp_path / name
    path.write_text(content, encoding="utf-8")
    return path


class TestLoadCategorical:
    def test_multi_hot_columns(self, tmp_path):
        path = write(
            tmp_path, "d.tsv",
            "id\ttext\tjoy\tfear\tanger\n"
            "a\thello there\t1\t0\t1\n"
            "b\tanother line\t0\t0\t0\n",
        )
        examples, names, kind = load_categorical(path)
        assert kind == "multi"
        assert names == ["joy", "fear", "anger"]
        np.testing.assert_array_equal(examples[0].annotation.values, [1, 0, 1])
        np.testing.assert_array_equal(examples[1].annotation.values, [0, 0, 0])

    def test_eleven_label_columns(self, tmp_path):
        names = [f"e{i}" for i in range(11)]
        path = write(
            tmp_path, "d.tsv",
            "id\ttext\t" + "\t".join(names) + "\n"
            "a\tx\t" + "\t".join(["1"] + ["0"] * 10) + "\n",
        )
        _, loaded, kind = load_categorical(path)
        assert loaded == names and len(loaded) == 11 and kind == "multi"

    def test_single_label_rows(self, tmp_path):
        path = write(
            tmp_path, "d.csv",
            "id,text,label\na,some text,joy\nb,more text,fear\nc,again,joy\n",
        )
        examples, names, kind = load_categorical(path)
        assert kind == "single"
        assert names == ["joy", "fear"]
        np.testing.assert_array_equal(examples[0].annotation.values, [1, 0])
        np.testing.assert_array_equal(examples[2].annotation.values, [1, 0])

    def test_declared_label_order_pins_canonical(self, tmp_path):
        path = write(tmp_path, "d.csv", "id,text,label\na,x,joy\nb,y,fear\n")
        _, names, _ = load_categorical(path, labels=["fear", "joy"])
        assert names == ["fear", "joy"]

    def test_unknown_label_rejected(self, tmp_path):
        path = write(tmp_path, "d.csv", "id,text,label\na,x,joy\nb,y,dread\n")
        with pytest.raises(ValueError, match="unknown label 'dread'"):
            load_categorical(path, labels=["joy", "fear"])

    def test_non_binary_cell_reports_line(self, tmp_path):
        path = write(
            tmp_path, "d.tsv", "id\ttext\tjoy\tfear\na\tx\t1\t0\nb\ty\t2\t0\n"
        )
        with pytest.raises(ValueError, match=r":3: non-binary cell '2'"):
            load_categorical(path)

    def test_duplicate_id_rejected(self, tmp_path):
        path = write(tmp_path, "d.tsv", "id\ttext\tjoy\tfear\na\tx\t1\t0\na\ty\t0\t1\n")
        with pytest.raises(ValueError, match="duplicate id"):
            load_categorical(path)

    def test_quoted_fields_with_delimiters(self, tmp_path):
        path = write(
            tmp_path, "d.csv",
            'id,text,joy,fear\na,"hello, world",1,0\n',
        )
        examples, _, _ = load_categorical(path)
        assert examples[0].text == "hello, world"

    def test_round_trip_multi(self, tmp_path):
        path = write(
            tmp_path, "d.tsv",
            "id\ttext\tjoy\tfear\tanger\na\thello\t1\t0\t1\nb\tbye\t0\t1\t0\n",
        )
        examples, names, kind = load_categorical(path)
        out = tmp_path / "out.tsv"
        write_categorical(out, examples, names, kind)
        reloaded, names2, kind2 = load_categorical(out)
        assert (names, kind) == (names2, kind2)
        for a, b in zip(examples, reloaded):
            assert (a.id, a.text) == (b.id, b.text)
            np.testing.assert_array_equal(a.annotation.values, b.annotation.values)

    def test_round_trip_single(self, tmp_path):
        path = write(tmp_path, "d.csv", "id,text,label\na,sunny day,joy\nb,dark,fear\n")
        examples, names, kind = load_categorical(path)
        out = tmp_path / "out.tsv"
        write_categorical(out, examples, names, kind)
        reloaded, names2, kind2 = load_categorical(out)
        assert (names, kind) == (names2, kind2)
        for a, b in zip(examples, reloaded):
            assert (a.id, a.text) == (b.id, b.text)
            np.testing.assert_array_equal(a.annotation.values, b.annotation.values)


class TestLoadVad:
    def test_rescales_midpoint_and_endpoints(self, tmp_path):
        path = write(
            tmp_path, "d.tsv",
            "id\ttext\tV\tA\tD\na\tx\t3.0\t1.0\t5.0\n",
        )
        examples = load_vad(path, source_range=(1, 5))
        point = examples[0].annotation
        assert (point.v, point.a, point.d) == (0.5, 0.0, 1.0)

    def test_out_of_range_score_rejected(self, tmp_path):
        path = write(tmp_path, "d.tsv", "id\ttext\tV\tA\tD\na\tx\t5.2\t3\t3\n")
        with pytest.raises(ValueError, match="outside"):
            load_vad(path, source_range=(1, 5))

    def test_bad_header_rejected(self, tmp_path):
        path = write(tmp_path, "d.tsv", "id\ttext\tx\ty\tz\na\tx\t3\t3\t3\n")
        with pytest.raises(ValueError, match="header"):
            load_vad(path)

    def test_round_trip(self, tmp_path):
        examples = [
            LabeledExample("a", "calm words", VadPoint(0.25, 0.5, 0.125)),
            LabeledExample("b", "loud words", VadPoint(1.0, 0.0, 1 / 3)),
        ]
        out = tmp_path / "out.tsv"
        write_vad(out, examples)
        reloaded = load_vad(out, source_range=(0, 1))
        for a, b in zip(examples, reloaded):
            assert (a.id, a.text) == (b.id, b.text)
            assert a.annotation == b.annotation

    def test_rescale_invertible(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            lo, width = rng.uniform(-3, 3), rng.uniform(0.5, 6)
            hi = lo + width
            x = rng.uniform(lo, hi)
            y = rescale_score(x, lo, hi)
            assert abs((lo + y * (hi - lo)) - x) < 1e-12

    def test_rescale_order_preserving(self):
        xs = np.sort(np.random.default_rng(32).uniform(1, 5, size=50))
        ys = [rescale_score(x, 1, 5) for x in xs]
        assert all(a <= b for a, b in zip(ys, ys[1:]))


def single_label_examples(counts: dict[str, int]):
    examples = []
    names = list(counts)
    i = 0
    for name, count in counts.items():
        for _ in range(count):
            values = np.zeros(len(names))
            values[names.index(name)] = 1.0
            examples.append(
                LabeledExample(f"x{i:04d}", f"text {i}", AnnotationVector(values, "single"))
            )
            i += 1
    return examples


class TestStratifiedSplit:
    def test_balanced_two_class_counts(self):
        examples = single_label_examples({"a": 50, "b": 50})
        split = stratified_split(examples)
        assert split.sizes() == (70, 16, 14)
        for part, lo, hi in ((split.train, 35, 35), (split.valid, 7, 8), (split.test, 6, 8)):
            for class_index in range(2):
                count = sum(
                    1 for ex in part
                    if np.argmax(ex.annotation.values) == class_index
                )
                assert lo <= count <= hi

    def test_per_class_proportions_within_one(self):
        examples = single_label_examples({"a": 37, "b": 21, "c": 11})
        split = stratified_split(examples)
        for class_index, total in enumerate((37, 21, 11)):
            for part, ratio in zip((split.train, split.valid, split.test), split.ratios):
                count = sum(
                    1 for ex in part
                    if np.argmax(ex.annotation.values) == class_index
                )
                assert abs(count - total * ratio) <= 1

    def test_deterministic_for_seed(self):
        examples = single_label_examples({"a": 20, "b": 30})
        one = stratified_split(examples, seed=9)
        two = stratified_split(examples, seed=9)
        assert [ex.id for ex in one.train] == [ex.id for ex in two.train]
        assert [ex.id for ex in one.test] == [ex.id for ex in two.test]

    def test_disjoint_and_complete(self):
        examples = single_label_examples({"a": 17, "b": 9, "c": 24})
        split = stratified_split(examples)
        ids = [ex.id for part in (split.train, split.valid, split.test) for ex in part]
        assert sorted(ids) == sorted(ex.id for ex in examples)
        assert len(set(ids)) == len(ids)

    def test_all_train_ratios(self):
        examples = single_label_examples({"a": 5, "b": 5})
        split = stratified_split(examples, ratios=(1.0, 0.0, 0.0))
        assert split.sizes() == (10, 0, 0)

    def test_tiny_class_goes_to_train_with_warning(self, caplog):
        examples = single_label_examples({"a": 10, "b": 2})
        with caplog.at_level(logging.WARNING):
            split = stratified_split(examples)
        assert "placing all in train" in caplog.text
        b_ids = {ex.id for ex in examples if np.argmax(ex.annotation.values) == 1}
        assert b_ids <= {ex.id for ex in split.train}

    def test_bad_ratios_rejected(self):
        examples = single_label_examples({"a": 5, "b": 5})
        with pytest.raises(ValueError, match="sum to 1"):
            stratified_split(examples, ratios=(0.5, 0.4, 0.2))

    def test_multi_label_rejected(self):
        bad = [LabeledExample("a", "x", AnnotationVector(np.array([1.0, 1.0]), "multi"))]
        with pytest.raises(ValueError, match="single-label"):
            stratified_split(bad)


class TestShuffledSplit:
    def test_counts_and_determinism(self):
        examples = single_label_examples({"a": 13, "b": 7})
        one = shuffled_split(examples, seed=5)
        two = shuffled_split(examples, seed=5)
        assert one.sizes() == (14, 3, 3)
        assert [ex.id for ex in one.valid] == [ex.id for ex in two.valid]

    def test_different_seed_changes_assignment(self):
        examples = single_label_examples({"a": 30, "b": 30})
        one = shuffled_split(examples, seed=1)
        two = shuffled_split(examples, seed=2)
        assert [ex.id for ex in one.train] != [ex.id for ex in two.train]


LEX_TEXT = (
    HEADER
    + "joy\t0.980\t0.824\t0.794\n"
    + "sad\t0.225\t0.333\t0.149\n"
    + "anger\t0.167\t0.865\t0.657\n"
)


class TestSynthGenerate:
    def test_noise_zero_signal_identifies_label(self):
        lex = lexicon_from_text(LEX_TEXT)
        examples, truths = synth_generate(
            ["joy", "sad", "anger"], lex, n=50, noise_rate=0.0, seed=1
        )
        for ex in examples:
            label_index = int(np.argmax(ex.annotation.values))
            name = ["joy", "sad", "anger"][label_index]
            assert all(tok.startswith(name) for tok in ex.text.split())

    def test_ground_truth_is_mean_of_label_coords(self):
        lex = lexicon_from_text(LEX_TEXT)
        examples, truths = synth_generate(
            ["joy", "sad", "anger"], lex, n=80, noise_rate=0.5, seed=2, kind="multi"
        )
        for ex, truth in zip(examples, truths):
            picked = np.flatnonzero(ex.annotation.values)
            coords = np.array(
                [lex.lookup(["joy", "sad", "anger"][i]).as_array() for i in picked]
            )
            np.testing.assert_allclose(truth.as_array(), coords.mean(axis=0))

    def test_deterministic_bytes(self):
        lex = lexicon_from_text(LEX_TEXT)
        a = synth_generate(["joy", "sad"], lex, n=40, noise_rate=0.3, seed=7)
        b = synth_generate(["joy", "sad"], lex, n=40, noise_rate=0.3, seed=7)
        assert [(e.id, e.text) for e in a[0]] == [(e.id, e.text) for e in b[0]]
        assert [t.as_array().tolist() for t in a[1]] == [
            t.as_array().tolist() for t in b[1]
        ]

    def test_empty_dataset_rejected(self):
        lex = lexicon_from_text(LEX_TEXT)
        with pytest.raises(ValueError, match="empty dataset"):
            synth_generate(["joy", "sad"], lex, n=0, noise_rate=0.0, seed=1)

    def test_empty_signal_vocabulary_rejected(self):
        lex = lexicon_from_text(LEX_TEXT)
        with pytest.raises(ValueError, match="empty vocabulary"):
            synth_generate(
                ["joy", "sad"], lex, n=5, noise_rate=0.0, seed=1,
                signal_tokens={"joy": ["joytok"], "sad": []},
            )

    def test_unresolvable_label_rejected(self):
        lex = lexicon_from_text(LEX_TEXT)
        with pytest.raises(ValueError, match="not in lexicon"):
            synth_generate(["joy", "bliss"], lex, n=5, noise_rate=0.0, seed=1)
