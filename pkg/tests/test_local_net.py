import pytest
import torch

from hrtse.config import ArnConfig, LocalNetConfig, ModelConfig
from hrtse.errors import ShapeError
from hrtse.models.arn import Arn, FrequencyArn
from hrtse.models.local_net import LocalFeatureNet, LocalFeatureStack, time_average


def test_arn_keeps_shape():
    arn = Arn(24, ArnConfig(hidden=16, blocks=2, attention_heads=2))
    x = torch.randn(2, 7, 24)
    assert arn(x).shape == x.shape


def test_arn_rejects_wrong_width():
    arn = Arn(24, ArnConfig(hidden=16))
    with pytest.raises(ShapeError):
        arn(torch.randn(1, 5, 12))


def test_arn_is_non_causal():
    torch.manual_seed(0)
    arn = Arn(8, ArnConfig(hidden=8)).eval()
    x = torch.randn(1, 6, 8)
    y = x.clone()
    y[:, -1] += 1.0
    # changing the last frame moves the first frame's output
    assert not torch.allclose(arn(x)[:, 0], arn(y)[:, 0])


def test_frequency_arn_runs_per_frame():
    torch.manual_seed(0)
    arn = FrequencyArn(161, ArnConfig(hidden=8)).eval()
    mag = torch.rand(2, 3, 161)
    out = arn(mag)
    assert out.shape == mag.shape
    # frames are independent sequences
    assert torch.allclose(arn(mag[:, 1:2]), out[:, 1:2], atol=1e-6)


@pytest.mark.parametrize("input_channels", [2, 4])
@pytest.mark.parametrize("t", [10, 50, 100])
def test_local_net_level_shapes(t, input_channels):
    torch.manual_seed(0)
    net = LocalFeatureNet(ModelConfig(profile="full", local_input_channels=input_channels).local())
    assert net.level_channels == [input_channels, 16, 32, 64, 128]
    assert net.level_freqs == [161, 80, 39, 19, 9]
    spec = torch.randn(2, t, 161, dtype=torch.complex64)
    mag = spec.abs()
    with torch.no_grad():
        stack = net.encode_local(mag, net.arn_frequency(mag), spec)
        averaged = net(spec)
    assert [tuple(level.shape) for level in stack.levels] == [
        (2, input_channels, t, 161),
        (2, 16, t, 80),
        (2, 32, t, 39),
        (2, 64, t, 19),
        (2, 128, t, 9),
    ]
    assert [tuple(level.shape) for level in averaged.levels] == [
        (2, input_channels, 161),
        (2, 16, 80),
        (2, 32, 39),
        (2, 64, 19),
        (2, 128, 9),
    ]


def test_four_channel_local_input_needs_the_complex_anchor():
    cfg = LocalNetConfig(encoder_channels=(4, 8, 16, 32), input_channels=4, arn=ArnConfig(hidden=8))
    net = LocalFeatureNet(cfg)
    spec = torch.randn(1, 5, 161, dtype=torch.complex64)
    assert net(spec).levels[0].shape == (1, 4, 161)
    mag = spec.abs()
    with pytest.raises(ShapeError):
        net.encode_local(mag, net.arn_frequency(mag))


def test_time_average_ignores_repetition():
    levels = [torch.randn(1, 3, 5, 7), torch.randn(1, 4, 5, 2)]
    once = time_average(LocalFeatureStack(levels))
    twice = time_average(LocalFeatureStack([torch.cat([x, x], dim=2) for x in levels]))
    for a, b in zip(once.levels, twice.levels, strict=True):
        assert torch.allclose(a, b, atol=1e-6)


def test_time_average_of_empty_stack():
    with pytest.raises(ShapeError):
        time_average(LocalFeatureStack([]))
