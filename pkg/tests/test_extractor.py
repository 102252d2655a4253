import pytest
import torch

from hrtse.checkpoint import load_embedder
from hrtse.errors import ShapeError, TooShortError
from hrtse.extractor import Extractor


@pytest.fixture
def extractor(run_config, embedder_path) -> Extractor:
    torch.manual_seed(2)
    return Extractor.from_config(run_config.model, load_embedder(embedder_path))


@pytest.mark.parametrize("mode", ["local", "global", "hr"])
def test_separate_keeps_the_mixture_shape(extractor, mode):
    mixture, anchor = torch.randn(8000), torch.randn(12000)
    est = extractor.separate(mixture, anchor, mode)
    assert est.shape == mixture.shape
    assert torch.isfinite(est).all()


def test_separate_batches_and_restores_train_mode(extractor):
    extractor.train()
    est = extractor.separate(torch.randn(2, 6400), torch.randn(2, 9600))
    assert est.shape == (2, 6400)
    assert extractor.training
    assert not extractor.embedder.training


def test_short_inputs(extractor):
    with pytest.raises(TooShortError):
        extractor.separate(torch.randn(8000), torch.randn(100))
    with pytest.raises(TooShortError):
        extractor.separate(torch.randn(100), torch.randn(8000))


def test_batch_mismatch(extractor):
    with pytest.raises(ShapeError):
        extractor(torch.randn(2, 8000), torch.randn(3, 8000))


def test_only_the_separator_is_trainable(extractor):
    trainable = {id(p) for p in extractor.trainable_parameters()}
    assert trainable
    assert not any(id(p) in trainable for p in extractor.embedder.parameters())
