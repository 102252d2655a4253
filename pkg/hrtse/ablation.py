"""Local / global / HR ablation: identical training settings and seeds, one comparison table."""

from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from hrtse.artifacts import atomic_path, write_json, write_text
from hrtse.checkpoint import load_extractor
from hrtse.config import MODES, RunConfig, to_dict
from hrtse.data.manifest import Manifest
from hrtse.data.mixing import AudioStore
from hrtse.embedder_training import train_embedder
from hrtse.evaluation import METRIC_COLUMNS, ExtractorEstimator, MixtureBaseline, evaluate_set
from hrtse.training import BEST_CHECKPOINT, train

logger = logging.getLogger(__name__)

ROW_LABELS = {"mixture": "Mixture", "local": "HR-TSE(local)", "global": "HR-TSE(global)", "hr": "HR-TSE(HR)"}
ABLATION_SEEDS = 3


def default_seeds(base: int, count: int = ABLATION_SEEDS) -> list[int]:
    return [base + i for i in range(count)]


@dataclass
class AblationReport:
    seeds: list[int]
    rows: dict[str, dict[str, float]]
    per_seed: dict[int, dict[str, dict[str, float]]]
    config: dict[str, Any] = field(default_factory=dict)

    def ordering(self) -> dict[int, bool]:
        """Per seed: does HR reach at least the SI-SNR of each single-feature variant?"""
        return {
            seed: rows["hr"]["si_snr"] >= max(rows["local"]["si_snr"], rows["global"]["si_snr"])
            for seed, rows in self.per_seed.items()
        }

    def ordering_holds(self) -> bool:
        held = sum(self.ordering().values())
        return held * 3 >= 2 * len(self.seeds)

    def to_markdown(self) -> str:
        header = "| System | " + " | ".join(METRIC_COLUMNS) + " |"
        lines = [header, "|" + "---|" * (len(METRIC_COLUMNS) + 1)]
        for key in ("mixture", *MODES):
            values = self.rows[key]
            lines.append(f"| {ROW_LABELS[key]} | " + " | ".join(f"{values[c]:.3f}" for c in METRIC_COLUMNS) + " |")
        order = ", ".join(f"seed {s}: {'yes' if ok else 'no'}" for s, ok in self.ordering().items())
        lines += ["", f"Seeds: {self.seeds}. HR >= single-feature SI-SNR: {order}."]
        if not self.ordering_holds():
            lines.append(
                f"WARNING: HR did not outperform both single-feature variants in at least 2/3 of {len(self.seeds)} seeds."
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict[str, Any]:
        return {
            "seeds": self.seeds,
            "columns": list(METRIC_COLUMNS),
            "rows": {ROW_LABELS[k]: v for k, v in self.rows.items()},
            "per_seed": {str(s): rows for s, rows in self.per_seed.items()},
            "ordering": {str(s): ok for s, ok in self.ordering().items()},
            "ordering_holds": self.ordering_holds(),
            "config": self.config,
        }

    def write(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        write_text(out_dir / "ablation.md", self.to_markdown())
        write_json(out_dir / "ablation.json", self.to_json())
        with atomic_path(out_dir / "ablation.csv") as tmp, open(tmp, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["system", *METRIC_COLUMNS])
            for key in ("mixture", *MODES):
                writer.writerow([ROW_LABELS[key], *(repr(self.rows[key][c]) for c in METRIC_COLUMNS)])
        return out_dir


def _metrics_row(aggregate: dict[str, float]) -> dict[str, float]:
    return {c: aggregate[c] for c in METRIC_COLUMNS}


def run_ablation(
    cfg: RunConfig,
    manifest: Manifest,
    store: AudioStore,
    out_dir: str | Path,
    seeds: list[int] | None = None,
    show_progress: bool = False,
) -> AblationReport:
    """Train the three fusion modes per seed and score them next to the mixture.

    Without explicit ``seeds`` the comparison repeats over ``cfg.seed`` and the
    two following seeds.

    The embedder is trained once if its checkpoint is missing and shared by
    every run, so the modes differ only in which speaker features are fused.
    """
    out_dir = Path(out_dir)
    seeds = seeds or default_seeds(cfg.seed)
    embedder_path = Path(cfg.embedder.checkpoint)
    if not embedder_path.exists():
        logger.info("no embedder at %s, training one first", embedder_path)
        train_embedder(manifest, store, cfg, embedder_path, show_progress)

    mixture = evaluate_set(manifest, MixtureBaseline(), store, cfg.evaluation, show_progress=show_progress)
    mixture_row = _metrics_row(mixture.aggregate())

    per_seed: dict[int, dict[str, dict[str, float]]] = {}
    for seed in seeds:
        seed_cfg = dataclasses.replace(cfg, seed=seed)
        rows = {"mixture": mixture_row}
        for mode in MODES:
            run_dir = out_dir / f"seed{seed}" / mode
            logger.info("ablation: seed %d, mode %s -> %s", seed, mode, run_dir)
            train(seed_cfg, manifest, store, run_dir, mode, embedder_path, show_progress)
            extractor, _, _ = load_extractor(run_dir / BEST_CHECKPOINT, embedder_path)
            report = evaluate_set(
                manifest,
                ExtractorEstimator(extractor, mode),
                store,
                cfg.evaluation,
                report_path=run_dir / "report",
                config_echo=to_dict(seed_cfg),
                show_progress=show_progress,
            )
            rows[mode] = _metrics_row(report.aggregate())
        per_seed[seed] = rows

    averaged = {"mixture": mixture_row}
    for mode in MODES:
        averaged[mode] = {c: float(np.mean([per_seed[s][mode][c] for s in seeds])) for c in METRIC_COLUMNS}
    result = AblationReport(seeds, averaged, per_seed, to_dict(cfg))
    if not result.ordering_holds():
        logger.warning("HR fusion did not beat both single-feature variants in enough seeds: %s", result.ordering())
    result.write(out_dir)
    return result
