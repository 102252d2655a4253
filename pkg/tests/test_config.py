import pytest

from hrtse.config import (
    CORPUS_ROOT_ENV,
    MANIFEST_NAME,
    ArnConfig,
    ModelConfig,
    RunConfig,
    SeparatorConfig,
    StftConfig,
    conv_freq_sizes,
    from_dict,
    load_config,
    set_dotted,
    to_dict,
)
from hrtse.errors import ConfigError


def test_defaults_are_valid():
    ok, errors = RunConfig().is_valid()
    assert ok, errors


def test_stft_sizes():
    cfg = StftConfig()
    assert (cfg.win_length, cfg.hop_length, cfg.n_bins) == (320, 160, 161)


def test_stft_rejects_other_overlap():
    ok, errors = StftConfig(hop_ms=5.0).is_valid()
    assert not ok
    assert any("half the window" in e for e in errors)


def test_conv_freq_sizes_chain():
    assert conv_freq_sizes(161, 5) == [80, 39, 19, 9, 4]


@pytest.mark.parametrize(("profile", "bottleneck"), [("full", 1024), ("desk", 256)])
def test_profiles(profile, bottleneck):
    model = ModelConfig(profile=profile)
    sep = model.separator()
    assert sep.bottleneck_dim == bottleneck
    assert sep.arn.hidden == bottleneck
    assert model.local().encoder_channels == sep.encoder_channels[:-1]
    assert sep.output_channels == 30
    assert model.is_valid()[0]


def test_full_profile_embedder():
    emb = ModelConfig(profile="full").embedder()
    assert (emb.block_channels, emb.embedding_dim, emb.res2net_scale) == (2048, 256, 8)


def test_unknown_profile():
    ok, errors = ModelConfig(profile="huge").is_valid()
    assert not ok
    assert "profile" in errors[0]


def test_arn_width_must_match_bottleneck():
    cfg = SeparatorConfig(arn=ArnConfig(hidden=512))
    with pytest.raises(ConfigError):
        cfg.validate()


def test_dict_round_trip():
    cfg = RunConfig(seed=5)
    assert from_dict(RunConfig, to_dict(cfg)) == cfg


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown"):
        from_dict(RunConfig, {"train": {"learning_rate": 1.0}})


def test_from_dict_rejects_wrong_types():
    with pytest.raises(ConfigError):
        from_dict(RunConfig, {"seed": "zero"})


def test_load_config_priority(tmp_path, monkeypatch):
    monkeypatch.delenv(CORPUS_ROOT_ENV, raising=False)
    path = tmp_path / "run.yaml"
    path.write_text("seed: 3\ntrain:\n  lr: 0.01\n  batch_size: 2\n", encoding="utf-8")
    cfg = load_config(path, ["train.lr=0.002", "model.deepfilter_taps=[3, 5]"])
    assert cfg.seed == 3
    assert cfg.train.batch_size == 2
    assert cfg.train.lr == pytest.approx(0.002)
    assert cfg.model.deepfilter_taps == (3, 5)


def test_environment_sets_corpus_root(monkeypatch, tmp_path):
    monkeypatch.setenv(CORPUS_ROOT_ENV, str(tmp_path))
    cfg = load_config()
    assert cfg.corpus.root == str(tmp_path)
    assert cfg.manifest_path() == tmp_path / MANIFEST_NAME


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.yaml")


def test_invalid_values_are_rejected():
    with pytest.raises(ConfigError):
        load_config(None, ["train.mode=both"])


def test_set_dotted_requires_equals():
    with pytest.raises(ConfigError):
        set_dotted({}, "train.lr")


def test_numeric_paths_stay_strings(monkeypatch):
    monkeypatch.delenv(CORPUS_ROOT_ENV, raising=False)
    data: dict = {}
    set_dotted(data, "corpus.root=2024")
    assert data == {"corpus": {"root": "2024"}}
    assert load_config(overrides=["corpus.root=2024"]).corpus.root == "2024"
    assert from_dict(RunConfig, {"corpus": {"root": 2024}}).corpus.root == "2024"
