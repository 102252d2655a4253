import csv
from collections import Counter

import numpy as np
import pytest
import soundfile as sf
import torch

from hrtse.config import CorpusConfig
from hrtse.data.batching import batch_iterator, batch_order
from hrtse.data.libri2talker import import_libri2talker
from hrtse.data.manifest import Manifest, MixtureSpec, UtteranceRecord
from hrtse.data.mixing import AudioStore, select_anchor, simulate_mixture
from hrtse.data.toy_corpus import generate_toy_corpus
from hrtse.errors import ConfigError, InsufficientAnchorError, ManifestError, TooShortError


def test_simulate_mixture_is_sum_of_sources():
    s1, s2 = torch.randn(1000), torch.randn(800)
    mixture, target, interferer = simulate_mixture(s1, s2, gain_db=6.0)
    assert mixture.shape == target.shape == interferer.shape == (800,)
    assert torch.equal(mixture, target + interferer)
    assert torch.allclose(interferer, s2 * 10 ** (6 / 20))


def test_simulate_mixture_rejects_empty():
    with pytest.raises(TooShortError):
        simulate_mixture(torch.zeros(0), torch.randn(10))


def _records(spec: dict[str, int]) -> Manifest:
    return Manifest(
        [
            UtteranceRecord(f"{spk}_{i}", spk, f"{spk}/{spk}_{i}.wav", 3.0)
            for spk, count in spec.items()
            for i in range(count)
        ]
    )


def test_select_anchor_is_deterministic_and_excludes_target():
    manifest = _records({"a": 5, "b": 2})
    picks = {select_anchor(manifest, "a", "a_0", seed).utterance_id for seed in range(50)}
    assert "a_0" not in picks
    assert picks <= {"a_1", "a_2", "a_3", "a_4"}
    assert len(picks) > 1
    assert select_anchor(manifest, "a", "a_0", 7) == select_anchor(manifest, "a", "a_0", 7)


def test_select_anchor_needs_a_second_utterance():
    manifest = _records({"a": 1, "b": 3})
    with pytest.raises(InsufficientAnchorError):
        select_anchor(manifest, "a", "a_0", 0)


def test_manifest_validation():
    manifest = _records({"a": 2, "b": 1})
    manifest.mixtures.append(MixtureSpec("m0", "a_0", "a_1", "a_1"))
    with pytest.raises(ManifestError, match="share speaker"):
        manifest.validate()


def test_manifest_round_trip(tmp_path):
    manifest = _records({"a": 2, "b": 2})
    manifest.mixtures.append(MixtureSpec("m0", "a_0", "b_0", "a_1", 1.5, "val"))
    path = manifest.save(tmp_path / "m.jsonl")
    loaded = Manifest.load(path)
    assert loaded.records == manifest.records
    assert loaded.mixtures == manifest.mixtures
    assert loaded.split_mixtures("val") == manifest.mixtures
    assert loaded.split_mixtures("train") == []


def test_manifest_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("not json\n", encoding="utf-8")
    with pytest.raises(ManifestError):
        Manifest.load(path)
    with pytest.raises(ManifestError, match="not found"):
        Manifest.load(tmp_path / "missing.jsonl")


def test_toy_corpus_layout(manifest, store):
    assert manifest.speakers() == ["spk00", "spk01", "spk02"]
    assert Counter(r.split for r in manifest.records) == {"train": 9, "val": 3}
    assert len(manifest.split_mixtures("train")) == 9
    assert len(manifest.split_mixtures("val")) == 3
    for spec in manifest.mixtures:
        target = manifest.record(spec.target_utt)
        anchor = manifest.record(spec.anchor_utt)
        assert anchor.speaker_id == target.speaker_id
        assert anchor.utterance_id != target.utterance_id
        assert anchor.split == "train"
        assert manifest.record(spec.interferer_utt).speaker_id != target.speaker_id
    wave = store.load(manifest.records[0].utterance_id)
    assert wave.dtype == torch.float32
    assert 1.2 * 16000 - 1 <= wave.shape[-1] <= 1.5 * 16000 + 1


def test_toy_corpus_is_bit_identical(tmp_path, corpus_config_factory):
    first = generate_toy_corpus(corpus_config_factory(tmp_path / "a"))
    second = generate_toy_corpus(corpus_config_factory(tmp_path / "b"))
    assert first.to_lines() == second.to_lines()
    for record in first.records:
        assert (tmp_path / "a" / record.path).read_bytes() == (tmp_path / "b" / record.path).read_bytes()


def test_toy_voices_differ(store, manifest):
    by_speaker = manifest.utterances_by_speaker()
    waves = [store.load(recs[0].utterance_id).numpy() for recs in by_speaker.values()]
    spectra = [np.abs(np.fft.rfft(w[:16000])) for w in waves]
    assert not np.allclose(spectra[0], spectra[1], rtol=0.1)


def test_batch_order_covers_everything_once(manifest):
    batches = batch_order(manifest, 4, shuffle_seed=11, split="train")
    ids = [s.mixture_id for batch in batches for s in batch]
    assert sorted(ids) == sorted(m.mixture_id for m in manifest.split_mixtures("train"))
    assert [len(b) for b in batches] == [4, 4, 1]
    assert batch_order(manifest, 4, shuffle_seed=11, split="train") == batches


def test_batch_order_without_seed_keeps_manifest_order(manifest):
    batches = batch_order(manifest, 2, split="val")
    assert [s for b in batches for s in b] == manifest.split_mixtures("val")


def test_batch_iterator(manifest, store):
    batches = list(batch_iterator(manifest, 2, shuffle_seed=1, store=store, split="train", max_samples=16000))
    assert sum(len(b) for b in batches) == 9
    for batch in batches:
        assert batch.mixture.shape == batch.target.shape == batch.interferer.shape
        assert batch.mixture.shape[-1] <= 16000
        assert torch.equal(batch.mixture, batch.target + batch.interferer)
        assert batch.anchor.shape[0] == len(batch)


def test_prefetch_keeps_order(manifest, store):
    plain = list(batch_iterator(manifest, 3, shuffle_seed=2, store=store, split="train"))
    threaded = list(batch_iterator(manifest, 3, shuffle_seed=2, store=store, split="train", prefetch_workers=2))
    assert [b.mixture_ids for b in plain] == [b.mixture_ids for b in threaded]
    assert all(torch.equal(a.mixture, b.mixture) for a, b in zip(plain, threaded, strict=True))


def test_import_libri2talker(tmp_path):
    rng = np.random.default_rng(0)
    names = ["19-198-0001", "19-198-0002", "26-495-0003"]
    for name in names:
        sf.write(tmp_path / f"{name}.wav", rng.normal(0, 0.1, 16000).astype(np.float32), 16000)
    with open(tmp_path / "list.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["mixture_ID", "source_1_path", "source_2_path", "anchor_path"])
        writer.writerow(["mix0", f"{names[0]}.wav", f"{names[2]}.wav", f"{names[1]}.wav"])
    manifest = import_libri2talker(tmp_path / "list.csv")
    assert manifest.speakers() == ["19", "26"]
    (spec,) = manifest.mixtures
    assert (spec.target_utt, spec.interferer_utt, spec.anchor_utt) == tuple(names[i] for i in (0, 2, 1))
    assert manifest.record(names[0]).duration_s == pytest.approx(1.0)


def test_import_libri2mix_layout_keeps_sources_apart(tmp_path):
    rng = np.random.default_rng(1)
    mix_name = "19-198-0001_1089-134686-0000"
    files = [f"s1/{mix_name}.wav", f"s2/{mix_name}.wav", "anchors/19-198-0002.wav"]
    for name in files:
        (tmp_path / name).parent.mkdir(parents=True, exist_ok=True)
        sf.write(tmp_path / name, rng.normal(0, 0.1, 8000).astype(np.float32), 16000)
    with open(tmp_path / "list.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["mixture_ID", "source_1_path", "source_2_path", "anchor_path"])
        writer.writerow([mix_name, *files])
    manifest = import_libri2talker(tmp_path / "list.csv")

    (spec,) = manifest.mixtures
    assert spec.target_utt == f"s1/{mix_name}"
    assert spec.interferer_utt == f"s2/{mix_name}"
    assert spec.anchor_utt == "anchors/19-198-0002"
    assert manifest.record(spec.target_utt).speaker_id == "19"
    assert manifest.record(spec.interferer_utt).speaker_id == "1089"
    assert manifest.record(spec.anchor_utt).speaker_id == "19"
    assert len(manifest.records) == 3


def test_select_anchor_is_uniform():
    manifest = _records({"a": 11, "b": 2})
    counts = Counter(select_anchor(manifest, "a", "a_0", seed).utterance_id for seed in range(1000))
    assert set(counts) == {f"a_{i}" for i in range(1, 11)}
    assert all(abs(n / 1000 - 0.1) <= 0.03 for n in counts.values())


@pytest.fixture(scope="module")
def protocol_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("protocol")
    cfg = CorpusConfig(
        root=str(root),
        n_speakers=5,
        utts_per_speaker=4,
        seed=11,
        min_duration_s=0.5,
        max_duration_s=0.8,
        mixtures_per_utterance=50,
    )
    manifest = generate_toy_corpus(cfg)
    return manifest, AudioStore(manifest, root)


def test_thousand_examples_keep_the_protocol(protocol_corpus):
    manifest, store = protocol_corpus
    assert len(manifest.mixtures) == 1000
    for spec in manifest.mixtures:
        example = store.example(spec)
        target_len = store.load(spec.target_utt).shape[-1]
        interferer_len = store.load(spec.interferer_utt).shape[-1]
        assert example.mixture.shape[-1] == min(target_len, interferer_len)
        assert torch.equal(example.mixture, example.target + example.interferer)
        assert spec.anchor_utt != spec.target_utt
        assert example.target_speaker_id != example.interferer_speaker_id
        assert manifest.record(spec.anchor_utt).speaker_id == example.target_speaker_id
        assert -5.0 <= spec.gain_db <= 5.0


def test_hundred_mixtures_in_batches_of_eight(protocol_corpus):
    manifest, store = protocol_corpus
    hundred = Manifest(manifest.records, manifest.mixtures[:100])
    for seed in (None, 5):
        batches = batch_order(hundred, 8, shuffle_seed=seed)
        assert len(batches) == 13
        assert [len(b) for b in batches] == [8] * 12 + [4]
    streamed = list(batch_iterator(hundred, 8, shuffle_seed=5, store=store))
    assert len(streamed) == 13
    assert sum(len(b.mixture_ids) for b in streamed) == 100


def test_batch_size_must_be_positive(manifest):
    with pytest.raises(ConfigError):
        batch_order(manifest, 0)
