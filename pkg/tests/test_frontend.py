import math

import pytest
import torch

from hrtse.config import StftConfig
from hrtse.errors import ConfigMismatchError, DomainError, TooShortError
from hrtse.frontend import compressed_spectrum, fbank, istft, num_frames, power_compress, stft


def test_stft_shape():
    spec = stft(torch.randn(2, 16000))
    assert spec.shape == (2, num_frames(16000), 161)
    assert spec.is_complex()


def test_stft_single_waveform():
    assert stft(torch.randn(3200)).shape == (21, 161)


def test_round_trip_reconstruction():
    g = torch.Generator().manual_seed(0)
    interior = slice(320, -320)
    for _ in range(50):
        n = int(torch.randint(16000, 48001, (1,), generator=g))
        wave = torch.randn(n, generator=g, dtype=torch.float64)
        rec = istft(stft(wave), out_len=n)
        err = (wave[interior] - rec[interior]).pow(2).sum()
        snr = 10 * math.log10(float(wave[interior].pow(2).sum() / err))
        assert snr >= 60, n


def test_tone_peaks_at_its_bin():
    t = torch.arange(16000, dtype=torch.float64) / 16000
    spec = stft(torch.sin(2 * math.pi * 1000 * t))
    assert int(spec.abs().mean(dim=0).argmax()) == 20


def test_too_short():
    with pytest.raises(TooShortError):
        stft(torch.randn(319))


def test_istft_rejects_wrong_bin_count():
    with pytest.raises(ConfigMismatchError):
        istft(torch.zeros(10, 257, dtype=torch.complex64))


def test_istft_uses_its_own_config():
    cfg = StftConfig(window_ms=32.0, hop_ms=16.0, dft_size=512)
    wave = torch.randn(8000, dtype=torch.float64)
    rec = istft(stft(wave, cfg), cfg, out_len=8000)
    assert torch.allclose(wave[512:-512], rec[512:-512], atol=1e-8)


def test_power_compress():
    spec = torch.tensor([4 + 0j, -9 + 0j, 0j], dtype=torch.complex128)
    out = power_compress(spec, 0.5)
    assert torch.allclose(out, torch.tensor([2 + 0j, -3 + 0j, 0j], dtype=torch.complex128))
    assert power_compress(spec, 1.0) is spec
    with pytest.raises(DomainError):
        power_compress(spec, 0.0)


def test_compressed_spectrum_gradient_at_zero_bin():
    spec = torch.zeros(1, 3, dtype=torch.complex128, requires_grad=True)
    cmag, _ = compressed_spectrum(spec, 0.5)
    cmag.sum().backward()
    assert torch.isfinite(torch.view_as_real(spec.grad)).all()


def test_fbank_shape_and_floor():
    feats = fbank(torch.zeros(1, 1600))
    assert feats.shape == (1, num_frames(1600), 80)
    assert torch.allclose(feats, torch.full_like(feats, math.log(1e-10)))
