import csv

import pytest
import torch

import hrtse.ablation as ablation
from hrtse.ablation import ROW_LABELS, AblationReport, default_seeds, run_ablation
from hrtse.artifacts import read_json
from hrtse.evaluation import METRIC_COLUMNS
from hrtse.plotting import loss_curve_figure, plot_loss_curves, plot_metric_bars
from hrtse.training import EpochRecord, TrainingLog


def _row(si_snr: float) -> dict[str, float]:
    return {"si_snr": si_snr, "si_snri": si_snr - 0.5, "stoi": 0.8, "estoi": 0.6, "tsos": 0.1}


def _report(hr_scores: list[float]) -> AblationReport:
    per_seed = {
        seed: {"mixture": _row(0.5), "local": _row(5.0), "global": _row(6.0), "hr": _row(hr)}
        for seed, hr in enumerate(hr_scores)
    }
    rows = {"mixture": _row(0.5), "local": _row(5.0), "global": _row(6.0), "hr": _row(sum(hr_scores) / len(hr_scores))}
    return AblationReport(list(range(len(hr_scores))), rows, per_seed)


def test_ordering_majority():
    assert _report([7.0, 7.0, 5.5]).ordering_holds()
    assert not _report([7.0, 5.5, 5.5]).ordering_holds()
    assert _report([7.0, 5.5, 5.5]).ordering() == {0: True, 1: False, 2: False}


def test_markdown_table():
    text = _report([7.0, 7.0, 7.0]).to_markdown()
    lines = text.splitlines()
    assert lines[0] == "| System | " + " | ".join(METRIC_COLUMNS) + " |"
    assert [line.split("|")[1].strip() for line in lines[2:6]] == list(ROW_LABELS.values())
    assert "WARNING" not in text
    assert "WARNING" in _report([1.0, 1.0, 1.0]).to_markdown()
    assert "2/3 of 2 seeds" in _report([1.0, 1.0]).to_markdown()


def test_write(tmp_path):
    _report([7.0, 6.5, 5.0]).write(tmp_path)
    assert (tmp_path / "ablation.md").exists()
    saved = read_json(tmp_path / "ablation.json")
    assert set(saved["rows"]) == set(ROW_LABELS.values())
    assert saved["ordering_holds"] is True
    with open(tmp_path / "ablation.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["system", *METRIC_COLUMNS]
    assert len(rows) == 5


def test_plots(tmp_path):
    log = TrainingLog(seed=0, mode="hr", config={})
    for epoch, lr in enumerate([1e-3, 1e-3, 5e-4], start=1):
        log.epochs.append(EpochRecord(epoch, lr, {"total": 2.0 / epoch}, {"total": 2.5 / epoch}, 1.0))
    log.best_epoch = 3
    assert len(loss_curve_figure(log).axes) == 2
    assert plot_loss_curves(log, tmp_path / "curves.png").stat().st_size > 0
    report = _report([7.0, 6.5, 5.0])
    report.write(tmp_path)
    assert plot_metric_bars(read_json(tmp_path / "ablation.json"), tmp_path / "bars.png").stat().st_size > 0


class _Aggregate:
    def __init__(self, si_snr: float):
        self.row = _row(si_snr)

    def aggregate(self) -> dict[str, float]:
        return self.row


def test_default_seeds_repeat_three_times(run_config, manifest, store, tmp_path, monkeypatch):
    trained = []
    scores = {"local": 5.0, "global": 6.0, "hr": 7.0}
    monkeypatch.setattr(ablation, "train_embedder", lambda *a, **k: None)
    monkeypatch.setattr(ablation, "train", lambda cfg, m, s, run_dir, mode, *a: trained.append((cfg.seed, mode)))
    monkeypatch.setattr(ablation, "load_extractor", lambda *a, **k: (torch.nn.Identity(), None, None))
    monkeypatch.setattr(
        ablation,
        "evaluate_set",
        lambda m, estimator, *a, **k: _Aggregate(scores.get(getattr(estimator, "mode", None), 0.5)),
    )

    result = run_ablation(run_config, manifest, store, tmp_path / "ablation")
    seeds = default_seeds(run_config.seed)
    assert seeds == [run_config.seed, run_config.seed + 1, run_config.seed + 2]
    assert result.seeds == seeds
    assert sorted(trained) == sorted((s, mode) for s in seeds for mode in scores)
    assert read_json(tmp_path / "ablation" / "ablation.json")["seeds"] == seeds
    assert result.ordering_holds()


@pytest.mark.slow
def test_run_ablation_end_to_end(run_config, manifest, store, tmp_path):
    result = run_ablation(run_config, manifest, store, tmp_path / "ablation", seeds=[0])
    assert set(result.rows) == {"mixture", "local", "global", "hr"}
    assert (tmp_path / "ablation" / "ablation.md").exists()
    assert (tmp_path / "ablation" / "seed0" / "hr" / "report.csv").exists()
