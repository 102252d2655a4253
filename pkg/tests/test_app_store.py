from hrtse.app.components.separation_form import SeparationRequest
from hrtse.app.store import check_runs_root, discover_ablations, discover_runs
from hrtse.training import BEST_CHECKPOINT, LOG_NAME


def test_discover_runs(tmp_path):
    for name in ("seed0/hr", "seed0/local", "single"):
        (tmp_path / name).mkdir(parents=True)
        (tmp_path / name / LOG_NAME).write_text("{}")
    (tmp_path / "single" / BEST_CHECKPOINT).write_bytes(b"")
    (tmp_path / "ablation.json").write_text("{}")

    runs = discover_runs(tmp_path)
    assert [r.name for r in runs] == ["seed0/hr", "seed0/local", "single"]
    assert [p.name for p in runs[2].checkpoints] == [BEST_CHECKPOINT]
    assert runs[0].checkpoints == []
    assert discover_ablations(tmp_path) == [tmp_path / "ablation.json"]


def test_check_runs_root(tmp_path):
    ok, message = check_runs_root(tmp_path / "missing")
    assert not ok
    assert "not a directory" in message
    ok, message = check_runs_root(tmp_path)
    assert ok
    assert message == "0 runs"
    assert discover_runs(tmp_path / "missing") == []


def test_separation_request_validation(manifest):
    mixture_id = manifest.split_mixtures("val")[0].mixture_id
    assert SeparationRequest(mixture_id, "hr", "val").is_valid(manifest) == (True, [])
    ok, errors = SeparationRequest("nope", "both", "val").is_valid(manifest)
    assert not ok
    assert len(errors) == 2
