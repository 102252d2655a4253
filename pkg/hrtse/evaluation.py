"""Per-mixture scoring of an estimator over a manifest split, with CSV/JSON reports."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np
import torch
from tqdm import tqdm

from hrtse.artifacts import atomic_path, write_json
from hrtse.config import DEFAULT_SAMPLE_RATE, EvalConfig, StftConfig
from hrtse.data.manifest import Manifest
from hrtse.data.mixing import AudioStore, MixtureExample
from hrtse.errors import ManifestError
from hrtse.extractor import Extractor
from hrtse.frontend import DEFAULT_STFT
from hrtse.metrics import estoi, pesq_available, pesq_score, si_snr, stoi, tsos_flag

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("utt_id", "si_snr", "stoi", "estoi", "tsos_flag")
METRIC_COLUMNS = ("si_snr", "si_snri", "stoi", "estoi", "tsos")


class Estimator(Protocol):
    name: str

    def __call__(self, example: MixtureExample) -> torch.Tensor: ...


class MixtureBaseline:
    """Returns the unprocessed mixture."""

    name = "mixture"

    def __call__(self, example: MixtureExample) -> torch.Tensor:
        return example.mixture


class OracleTarget:
    name = "oracle"

    def __call__(self, example: MixtureExample) -> torch.Tensor:
        return example.target


class ExtractorEstimator:
    def __init__(self, extractor: Extractor, mode: str | None = None, name: str | None = None):
        self.extractor = extractor.eval()
        self.mode = mode or extractor.mode
        self.name = name or self.mode

    def __call__(self, example: MixtureExample) -> torch.Tensor:
        return self.extractor.separate(example.mixture, example.anchor, self.mode)


@dataclass
class UtteranceMetrics:
    utt_id: str
    si_snr: float
    stoi: float
    estoi: float
    tsos_flag: int
    si_snr_mixture: float
    pesq: float | None = None

    @property
    def si_snri(self) -> float:
        return self.si_snr - self.si_snr_mixture


@dataclass
class MetricsReport:
    estimator: str
    rows: list[UtteranceMetrics]
    config: dict[str, Any] = field(default_factory=dict)

    @property
    def has_pesq(self) -> bool:
        return bool(self.rows) and all(r.pesq is not None for r in self.rows)

    def aggregate(self) -> dict[str, float]:
        """Means over utterances; ``tsos`` is the flagged fraction."""
        if not self.rows:
            return {}
        agg = {
            "si_snr": float(np.mean([r.si_snr for r in self.rows])),
            "si_snri": float(np.mean([r.si_snri for r in self.rows])),
            "stoi": float(np.mean([r.stoi for r in self.rows])),
            "estoi": float(np.mean([r.estoi for r in self.rows])),
            "tsos": float(np.mean([r.tsos_flag for r in self.rows])),
        }
        if self.has_pesq:
            agg["pesq"] = float(np.mean([r.pesq for r in self.rows]))
        return agg

    def columns(self) -> tuple[str, ...]:
        return (*CSV_COLUMNS, "pesq") if self.has_pesq else CSV_COLUMNS

    def to_csv(self, path: str | Path) -> Path:
        columns = self.columns()
        with atomic_path(path) as tmp, open(tmp, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            for row in self.rows:
                values = asdict(row)
                writer.writerow([_fmt(values[c]) for c in columns])
        return Path(path)

    def to_json(self) -> dict[str, Any]:
        return {
            "estimator": self.estimator,
            "count": len(self.rows),
            "aggregate": self.aggregate(),
            "config": self.config,
        }

    def write(self, report_path: str | Path) -> tuple[Path, Path]:
        """Write ``<report>.csv`` and ``<report>.json`` side by side."""
        report_path = Path(report_path)
        csv_path = report_path.with_suffix(".csv")
        json_path = report_path.with_suffix(".json")
        self.to_csv(csv_path)
        write_json(json_path, self.to_json())
        return csv_path, json_path


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def score_example(
    est: torch.Tensor,
    example: MixtureExample,
    cfg: EvalConfig | None = None,
    stft_cfg: StftConfig = DEFAULT_STFT,
) -> UtteranceMetrics:
    """All metrics of one estimate against its mixture's target."""
    cfg = cfg or EvalConfig()
    est = est.detach().to(torch.float64)
    target = example.target.to(torch.float64)
    mixture = example.mixture.to(torch.float64)
    return UtteranceMetrics(
        utt_id=example.mixture_id,
        si_snr=float(si_snr(est, target)),
        stoi=stoi(est, target, stft_cfg.sample_rate_hz),
        estoi=estoi(est, target, stft_cfg.sample_rate_hz),
        tsos_flag=int(tsos_flag(est, target, cfg.tsos, stft_cfg)),
        si_snr_mixture=float(si_snr(mixture, target)),
        pesq=pesq_score(est, target, DEFAULT_SAMPLE_RATE) if cfg.pesq else None,
    )


def evaluate_set(
    manifest: Manifest,
    estimator: Estimator,
    store: AudioStore,
    cfg: EvalConfig | None = None,
    report_path: str | Path | None = None,
    config_echo: dict[str, Any] | None = None,
    stft_cfg: StftConfig = DEFAULT_STFT,
    show_progress: bool = False,
) -> MetricsReport:
    """Score ``estimator`` on every mixture of ``cfg.split``.

    Rows come out in manifest order whatever ``cfg.workers`` is, so reports
    are identical across runs for the same estimator and manifest.
    """
    cfg = cfg or EvalConfig()
    if cfg.pesq and not pesq_available():
        logger.warning("PESQ requested but the 'pesq' package is missing; the column is omitted")
        cfg = EvalConfig(split=cfg.split, pesq=False, workers=cfg.workers, tsos=cfg.tsos)
    specs = manifest.split_mixtures(cfg.split)
    if not specs:
        raise ManifestError(f"manifest has no mixtures in split {cfg.split!r}")

    def run(spec) -> UtteranceMetrics:
        example = store.example(spec)
        return score_example(estimator(example), example, cfg, stft_cfg)

    desc = f"evaluating {estimator.name}"
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(tqdm(pool.map(run, specs), total=len(specs), desc=desc, disable=not show_progress))
    else:
        rows = [run(s) for s in tqdm(specs, desc=desc, disable=not show_progress)]

    report = MetricsReport(estimator.name, rows, config_echo or {})
    logger.info("%s on %d mixtures: %s", estimator.name, len(rows), report.aggregate())
    if report_path is not None:
        report.write(report_path)
    return report
