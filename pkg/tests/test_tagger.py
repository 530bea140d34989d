import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from corpora import overfit_corpus
from oracles import all_paths, allowed_from_boundaries, legal_sequence, log_sum, score
from pauseseg.evalkit import evaluate
from pauseseg.lattice import LEGAL, NEG, Label, build_lattice, lattice_from_boundaries, path_lattice
from pauseseg.mining import PartialAnnotation
from pauseseg.tagger.model import Batch, batch_loss, gold_mask
from pauseseg.tagger import (
    CharWindowTemplate, ConfigError, CrfModel, ModelFormatError, SchemeError, TrainConfig,
    check_labels, complete, complete_then_train, labels_to_words, nll_full, nll_partial,
    read_segmented, tag, tag_corpus, train, words_to_labels, write_segmented,
)

B, M, E, S = Label
LISTEN_WORDS = ["有", "人", "在", "细细", "地", "倾听"]
LISTEN = "".join(LISTEN_WORDS)


def random_model(rng, texts, scale=1.0):
    model = CrfModel.from_sentences(texts, l2=float(rng.uniform(0, 0.1)))
    model.emission = rng.normal(0, scale, model.emission.shape)
    model.transition = np.where(LEGAL, rng.normal(0, scale, (4, 4)), NEG)
    return model


def random_text(rng, n):
    return "".join(chr(0x4E00 + int(c)) for c in rng.integers(0, 6, n))


def random_bounds(rng, n):
    k = int(rng.integers(0, n))
    return sorted(rng.choice(np.arange(1, n), size=k, replace=False).tolist()) if n > 1 else []


class TestScheme:
    def test_listen_sentence(self):
        assert words_to_labels(LISTEN_WORDS) == [S, S, S, B, E, S, B, E]

    def test_one_word(self):
        assert words_to_labels(["倾听"]) == [B, E]
        assert words_to_labels(["一"]) == [S]
        assert words_to_labels(["一二三四"]) == [B, M, M, E]

    def test_empty_word(self):
        with pytest.raises(SchemeError):
            words_to_labels(["有", ""])

    def test_inverse_examples(self):
        assert labels_to_words("有人", [B, E]) == ["有人"]
        assert labels_to_words(LISTEN, [S] * 8) == list(LISTEN)

    @given(st.lists(st.text(alphabet="有人在细地倾听", min_size=1, max_size=4), min_size=1, max_size=8))
    def test_round_trip(self, words):
        labels = words_to_labels(words)
        assert labels_to_words("".join(words), labels) == words
        assert legal_sequence([int(y) for y in labels])

    @pytest.mark.parametrize("labels,pos", [([B, B], 2), ([E], 1), ([S, M, E], 2), ([B, M], 2)])
    def test_strict_rejects(self, labels, pos):
        with pytest.raises(SchemeError, match=f"position {pos}"):
            labels_to_words("一二三"[: len(labels)], labels)

    def test_lenient(self):
        assert labels_to_words("一二三", [B, B, E], strict=False) == ["一", "二三"]
        assert labels_to_words("一二三", [E, M, S], strict=False) == ["一", "二", "三"]

    def test_length_mismatch(self):
        with pytest.raises(SchemeError):
            labels_to_words("一二", [S])

    def test_corpus_io(self, tmp_path):
        path = tmp_path / "c.txt"
        write_segmented([LISTEN_WORDS, ["倾听"]], path)
        assert path.read_text(encoding="utf-8") == "有 人 在 细细 地 倾听\n倾听\n"
        assert read_segmented(path) == [LISTEN_WORDS, ["倾听"]]
        path.write_text("有  人\n", encoding="utf-8")
        with pytest.raises(SchemeError):
            read_segmented(path)


class TestFeatures:
    def test_deterministic_and_windowed(self):
        t = CharWindowTemplate()
        a, b = t.extract("有人在"), t.extract("有人在")
        assert a == b and len(a) == 3 and len(set(map(len, a))) == 1
        assert "U-2=<s>" in a[0] and "U+2=</s>" in a[2] and "B0,+1=有人" in a[0]

    def test_unseen_features_score_zero(self):
        model = CrfModel.from_sentences(["有人"])
        model.emission[:] = 1.0
        # only the bias and sentence-edge features fire, so unseen characters are interchangeable
        np.testing.assert_array_equal(model.emissions("龙龙"), model.emissions("虎虎"))
        assert np.all(model.emissions("龙龙") < model.emissions("有人"))


class TestNll:
    def test_zero_model_n1(self):
        model = CrfModel.from_sentences(["一"], l2=0.0)
        loss, _ = nll_full(model, "一", [S])
        assert loss == pytest.approx(-math.log(1 / len(all_paths([{0, 1, 2, 3}]))), abs=1e-12)
        assert loss == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("gold", [[B, E], [S, S]])
    def test_zero_model_n2(self, gold):
        model = CrfModel.from_sentences(["一二"], l2=0.0)
        assert len(all_paths([{0, 1, 2, 3}] * 2)) == 2
        assert nll_full(model, "一二", gold)[0] == pytest.approx(math.log(2), abs=1e-12)

    def test_illegal_gold(self):
        model = CrfModel.from_sentences(["一二"])
        with pytest.raises(SchemeError):
            nll_full(model, "一二", [B, S])

    def test_full_vs_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 8))
            text = random_text(rng, n)
            model = random_model(rng, [text])
            em = model.emissions(text)
            paths = all_paths(allowed_from_boundaries(n, []))
            gold = paths[int(rng.integers(len(paths)))]
            expect = log_sum([score(em, model.transition, p) for p in paths]) - score(em, model.transition, gold)
            got, _ = nll_full(model, text, list(gold))
            assert got - model.l2_term() == pytest.approx(expect, rel=1e-8, abs=1e-10)

    def test_partial_vs_enumeration(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(1, 8))
            text = random_text(rng, n)
            bounds = random_bounds(rng, n)
            model = random_model(rng, [text])
            em = model.emissions(text)
            inside = all_paths(allowed_from_boundaries(n, bounds))
            every = all_paths(allowed_from_boundaries(n, []))
            expect = (log_sum([score(em, model.transition, p) for p in every])
                      - log_sum([score(em, model.transition, p) for p in inside]))
            got, _ = nll_partial(model, text, lattice_from_boundaries(n, bounds))
            assert got - model.l2_term() == pytest.approx(expect, rel=1e-8, abs=1e-10)

    def test_partial_reductions(self):
        rng = np.random.default_rng(2)
        text = random_text(rng, 6)
        model = random_model(rng, [text])
        labels = [B, E, S, B, M, E]
        single = nll_partial(model, text, path_lattice(labels))
        full = nll_full(model, text, labels)
        assert single[0] == pytest.approx(full[0], rel=1e-10)
        np.testing.assert_allclose(single[1].emission, full[1].emission, atol=1e-10)
        loose = nll_partial(model, text, lattice_from_boundaries(6))
        assert loose[0] == pytest.approx(model.l2_term(), abs=1e-10)

    def test_partial_bounded_by_full(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(2, 8))
            text = random_text(rng, n)
            model = random_model(rng, [text])
            bounds = random_bounds(rng, n)
            inside = all_paths(allowed_from_boundaries(n, bounds))
            gold = list(inside[int(rng.integers(len(inside)))])
            lp = nll_partial(model, text, lattice_from_boundaries(n, bounds))[0]
            assert lp <= nll_full(model, text, gold)[0] + 1e-9


def test_batch_loss_is_mean_of_sentence_losses():
    rng = np.random.default_rng(12)
    texts = [random_text(rng, int(rng.integers(1, 9))) for _ in range(6)]
    model = random_model(rng, texts)
    targets, singles = [], []
    for i, t in enumerate(texts):
        if i % 2:
            lat = lattice_from_boundaries(len(t), random_bounds(rng, len(t)))
            targets.append(lat.mask)
            singles.append(nll_partial(model, t, lat))
        else:
            labels = words_to_labels(labels_to_words(t, [S] * len(t)))
            targets.append(gold_mask(labels))
            singles.append(nll_full(model, t, labels))
    loss, grad = batch_loss(model, Batch([model.feature_ids(t) for t in texts], targets))
    assert loss == pytest.approx(np.mean([x[0] for x in singles]), rel=1e-10)
    np.testing.assert_allclose(grad.emission, np.mean([x[1].emission for x in singles], axis=0), atol=1e-10)
    np.testing.assert_allclose(grad.transition, np.mean([x[1].transition for x in singles], axis=0), atol=1e-10)


def finite_difference_error(fn, model, text, target, h=1e-5):
    _, grad = fn(model, text, target)
    worst = 0.0
    for idx in np.ndindex(model.emission.shape):
        old = model.emission[idx]
        model.emission[idx] = old + h
        up = fn(model, text, target)[0]
        model.emission[idx] = old - h
        down = fn(model, text, target)[0]
        model.emission[idx] = old
        worst = max(worst, abs((up - down) / (2 * h) - grad.emission[idx]))
    for a, b in zip(*np.nonzero(LEGAL)):
        old = model.transition[a, b]
        model.transition[a, b] = old + h
        up = fn(model, text, target)[0]
        model.transition[a, b] = old - h
        down = fn(model, text, target)[0]
        model.transition[a, b] = old
        worst = max(worst, abs((up - down) / (2 * h) - grad.transition[a, b]))
    assert np.all(grad.transition[~LEGAL] == 0)
    return worst


class TestGradients:
    @pytest.mark.parametrize("seed", range(5))
    def test_full(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 8))
        text = random_text(rng, n)
        paths = all_paths(allowed_from_boundaries(n, []))
        gold = list(paths[int(rng.integers(len(paths)))])
        assert finite_difference_error(nll_full, random_model(rng, [text]), text, gold) < 1e-5

    @pytest.mark.parametrize("seed", range(5))
    def test_partial(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(1, 8))
        text = random_text(rng, n)
        lat = lattice_from_boundaries(n, random_bounds(rng, n))
        assert finite_difference_error(nll_partial, random_model(rng, [text]), text, lat) < 1e-5


class TestModelFile:
    def test_round_trip_predictions(self, tmp_path):
        rng = np.random.default_rng(4)
        texts = [random_text(rng, int(rng.integers(1, 12))) for _ in range(20)]
        model = random_model(rng, texts)
        path = tmp_path / "m.json"
        model.save(path)
        again = CrfModel.load(path)
        assert tag_corpus(again, texts) == tag_corpus(model, texts)
        np.testing.assert_array_equal(again.emission, model.emission)
        np.testing.assert_array_equal(again.transition, model.transition)
        again.save(tmp_path / "m2.json")
        assert (tmp_path / "m2.json").read_bytes() == path.read_bytes()

    def test_version_mismatch(self, tmp_path):
        model = CrfModel.from_sentences(["有人"])
        text = model.to_json().replace('"version": 1', '"version": 99')
        with pytest.raises(ModelFormatError, match="version 99"):
            CrfModel.from_json(text)
        with pytest.raises(ModelFormatError):
            CrfModel.from_json('{"format": "other"}')


class TestTrain:
    def test_overfit(self):
        corpus = overfit_corpus()
        model = train(corpus, TrainConfig(max_epochs=50), dev=corpus)
        texts = ["".join(w) for w in corpus]
        assert evaluate(corpus, tag_corpus(model, texts)).f1 == 1.0
        assert tag_corpus(model, texts) == corpus

    def test_early_stop_after_two_epochs(self):
        scores = iter([0.9, 0.8, 0.7, 0.6])
        model = train(overfit_corpus(), TrainConfig(patience=1, max_epochs=10),
                      scorer=lambda m: next(scores))
        assert model.history.epochs_run == 2 and model.history.best_epoch == 1

    def test_best_snapshot_returned(self):
        corpus = overfit_corpus()
        seen = []

        def scorer(m):
            seen.append(m.copy())
            return [0.1, 0.5, 0.2, 0.3][len(seen) - 1]

        model = train(corpus, TrainConfig(patience=2, max_epochs=10), scorer=scorer)
        assert model.history.epochs_run == 4
        np.testing.assert_array_equal(model.emission, seen[1].emission)

    def test_deterministic(self):
        corpus = overfit_corpus(30)
        cfg = TrainConfig(batch_size=4, max_epochs=3, seed=5)
        a, b = train(corpus, cfg), train(corpus, cfg)
        assert a.to_json() == b.to_json()
        c = train(corpus, TrainConfig(batch_size=4, max_epochs=3, seed=6))
        assert c.to_json() != a.to_json()

    def test_lbfgs_backend(self):
        corpus = overfit_corpus()
        cfg = TrainConfig(optimizer="lbfgs", max_epochs=30)
        a = train(corpus, cfg, dev=corpus)
        assert tag_corpus(a, ["".join(w) for w in corpus]) == corpus
        assert a.to_json() == train(corpus, cfg, dev=corpus).to_json()

    def test_empty_corpus(self):
        with pytest.raises(ConfigError):
            train([], TrainConfig())

    @pytest.mark.parametrize("kw", [{"learning_rate": 0}, {"batch_size": 0}, {"patience": 0},
                                    {"l2": -1}, {"optimizer": "sgd"}])
    def test_bad_config(self, kw):
        with pytest.raises(ConfigError):
            TrainConfig(**kw)

    def test_directly_train_accepts_partials(self):
        corpus = overfit_corpus()
        pas = [PartialAnnotation(f"p{i}", tuple("".join(w)), (len(w[0]),)) for i, w in enumerate(corpus)
               if len(w) > 1]
        model = train(corpus, TrainConfig(max_epochs=3), partial=pas)
        assert len(tag(model, "".join(corpus[0]))) >= 1


class TestComplete:
    def model(self):
        rng = np.random.default_rng(9)
        return random_model(rng, [LISTEN, "有人细听"], scale=2.0)

    def test_mined_boundaries_respected(self):
        out = complete(self.model(), [PartialAnnotation("f", tuple(LISTEN), (2, 6))])[0]
        labels = words_to_labels(out)
        assert labels[1] in (E, S) and labels[5] in (E, S)
        assert labels[2] in (B, S) and labels[6] in (B, S)
        assert build_lattice(PartialAnnotation("f", tuple(LISTEN), (2, 6))).contains(labels)

    def test_no_boundaries_equals_plain_viterbi(self):
        model = self.model()
        assert complete(model, [PartialAnnotation("f", tuple(LISTEN), ())]) == [tag(model, LISTEN)]

    def test_all_s_model(self):
        model = CrfModel.from_sentences([LISTEN])
        model.emission[:, S] = 5.0
        pa = PartialAnnotation("f", tuple(LISTEN), (2, 6))
        out = complete(model, [pa])[0]
        assert out == list(LISTEN)
        assert build_lattice(pa).contains(words_to_labels(out))

    def test_no_constraint_flag(self):
        model = CrfModel.from_sentences([LISTEN])
        model.emission[:, B] = 1.0
        model.emission[:, E] = 1.0
        pa = PartialAnnotation("f", tuple(LISTEN), (1, 2, 3))
        constrained = complete(model, [pa])[0]
        free = complete(model, [pa], constrained=False)[0]
        assert free == tag(model, LISTEN)
        assert constrained[:3] == ["有", "人", "在"] and free != constrained

    def test_lattice_membership_random(self):
        rng = np.random.default_rng(10)
        model = random_model(rng, [random_text(rng, 20)], scale=3.0)
        pas = []
        for i in range(200):
            n = int(rng.integers(1, 15))
            pas.append(PartialAnnotation(str(i), tuple(random_text(rng, n)), tuple(random_bounds(rng, n))))
        for pa, words in zip(pas, complete(model, pas)):
            assert "".join(words) == pa.text
            assert build_lattice(pa).contains(words_to_labels(words))


class TestCompleteThenTrain:
    def test_empty_partial_reduces_to_base(self):
        corpus = overfit_corpus()
        res = complete_then_train(corpus, [], TrainConfig(max_epochs=3), dev=corpus)
        assert res.completed == [] and res.model is res.basic

    def test_cardinality_and_consistency(self):
        corpus = overfit_corpus()
        pas = [PartialAnnotation(f"p{i}", tuple("".join(w)), (len(w[0]),))
               for i, w in enumerate(corpus) if len(w) > 1]
        res = complete_then_train(corpus, pas, TrainConfig(max_epochs=3), dev=corpus)
        assert len(res.completed) == len(pas)
        for pa, words in zip(pas, res.completed):
            check_labels(words_to_labels(words))
            assert build_lattice(pa).contains(words_to_labels(words))

    def test_empty_base(self):
        with pytest.raises(ConfigError):
            complete_then_train([], [PartialAnnotation("a", ("一",), ())])


class TestTag:
    def test_single_char(self):
        assert tag(CrfModel.from_sentences(["一"]), "一") == ["一"]

    @given(st.text(alphabet="有人在细地倾听一二", min_size=1, max_size=20), st.integers(0, 2**32 - 1))
    def test_partition_and_legality(self, text, seed):
        model = random_model(np.random.default_rng(seed), ["有人在细地倾听一二"], scale=3.0)
        words = tag(model, text)
        assert "".join(words) == text
        labels = [int(y) for y in words_to_labels(words)]
        bad = {(B, B), (B, S), (M, B), (M, S), (E, M), (E, E), (S, M), (S, E)}
        assert not any((a, b) in bad for a, b in zip(labels, labels[1:]))
