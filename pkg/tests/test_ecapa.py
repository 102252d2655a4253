import pytest
import torch

from hrtse.config import EcapaConfig
from hrtse.errors import ShapeError
from hrtse.models.ecapa import AttentiveStatPool, Ecapa, Res2NetBlock, freeze, weighted_statistics


@pytest.fixture(scope="module")
def full_ecapa() -> Ecapa:
    torch.manual_seed(0)
    return Ecapa(EcapaConfig.for_profile("full")).eval()


@pytest.mark.parametrize("frames", [10, 50, 100])
def test_full_profile_shapes(full_ecapa, frames):
    feats = torch.randn(2, frames, 80)
    with torch.no_grad():
        assert full_ecapa.frame_features(feats).shape == (2, 3 * 2048, frames)
        assert full_ecapa(feats).shape == (2, 256)


def test_single_frame_is_finite():
    model = Ecapa(EcapaConfig.for_profile("desk")).eval()
    with torch.no_grad():
        emb = model(torch.randn(1, 1, 80))
    assert emb.shape == (1, 256)
    assert torch.isfinite(emb).all()


def test_wrong_feature_count():
    model = Ecapa(EcapaConfig.for_profile("desk"))
    with pytest.raises(ShapeError):
        model(torch.randn(1, 20, 40))


def test_uniform_weights_give_plain_statistics():
    x = torch.randn(2, 6, 30, dtype=torch.float64)
    stats = weighted_statistics(x, torch.full_like(x, 1 / 30))
    expected = torch.cat([x.mean(dim=2), x.std(dim=2, unbiased=False)], dim=1)
    assert torch.allclose(stats, expected, atol=1e-10)


def test_attention_is_a_distribution_over_time():
    pool = AttentiveStatPool(8, 4).eval()
    weights = pool.attention(torch.randn(3, 8, 11))
    assert weights.shape == (3, 8, 11)
    assert (weights >= 0).all()
    assert torch.allclose(weights.sum(dim=2), torch.ones(3, 8), atol=1e-5)
    assert pool(torch.randn(3, 8, 11)).shape == (3, 16)


def test_res2net_passes_first_group_through():
    block = Res2NetBlock(16, 3, 2, 4)
    x = torch.randn(2, 16, 9)
    out = block(x)
    assert out.shape == x.shape
    assert torch.equal(out[:, :4], x[:, :4])


def test_embed_and_freeze():
    model = freeze(Ecapa(EcapaConfig.for_profile("desk")))
    assert not any(p.requires_grad for p in model.parameters())
    emb = model.embed(torch.randn(2, 8000))
    assert emb.shape == (2, 256)
    assert not emb.requires_grad
