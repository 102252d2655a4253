"""Command-line entry point: ``hrtse <group> <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 invalid configuration, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from hrtse.config import MODES, PROFILES, RunConfig, load_config
from hrtse.errors import ConfigError, HrTseError, UsageError

logger = logging.getLogger("hrtse")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _common(seed: bool = True, profile: bool = True, mode: bool = False) -> argparse.ArgumentParser:
    parent = _Parser(add_help=False)
    parent.add_argument("--config", type=Path, help="YAML config file")
    parent.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="config override"
    )
    parent.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    parent.add_argument("--progress", action="store_true", help="show progress bars")
    if seed:
        parent.add_argument("--seed", type=int, help="run seed")
    if profile:
        parent.add_argument("--profile", choices=PROFILES, help="model size profile")
    if mode:
        parent.add_argument("--mode", choices=MODES, help="speaker feature fusion mode")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hrtse", description="Target speaker extraction with local and global speaker features")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    corpus = groups.add_parser("corpus", help="build or import corpora").add_subparsers(dest="command", required=True)
    make = corpus.add_parser("make", parents=[_common(seed=False, profile=False)], help="render the toy corpus")
    make.add_argument("--speakers", type=int, help="number of toy speakers")
    make.add_argument("--utts", type=int, help="utterances per speaker")
    make.add_argument("--seed", type=int, help="corpus seed")
    make.add_argument("--root", help="output directory")
    make.set_defaults(func=cmd_corpus_make)
    imp = corpus.add_parser("import", parents=[_common(seed=False, profile=False)], help="import a Libri2Mix-style CSV")
    imp.add_argument("--csv", required=True, type=Path)
    imp.add_argument("--audio-root", type=Path)
    imp.add_argument("--out", required=True, type=Path, help="manifest file to write")
    imp.set_defaults(func=cmd_corpus_import)

    embedder = groups.add_parser("embedder", help="speaker embedder").add_subparsers(dest="command", required=True)
    etrain = embedder.add_parser("train", parents=[_common()], help="train the ECAPA embedder")
    etrain.add_argument("--manifest", type=Path)
    etrain.add_argument("--out", type=Path, help="embedder checkpoint path")
    etrain.set_defaults(func=cmd_embedder_train)
    export = embedder.add_parser("export", parents=[_common()], help="export embeddings as JSON lines")
    export.add_argument("--ckpt", type=Path)
    export.add_argument("--manifest", type=Path)
    export.add_argument("--split")
    export.add_argument("--out", required=True, type=Path)
    export.set_defaults(func=cmd_embedder_export)

    tse = groups.add_parser("tse", help="extraction network").add_subparsers(dest="command", required=True)
    ttrain = tse.add_parser("train", parents=[_common(mode=True)], help="train the extractor")
    ttrain.add_argument("--manifest", type=Path)
    ttrain.add_argument("--embedder", type=Path, help="frozen embedder checkpoint")
    ttrain.add_argument("--out", type=Path, help="checkpoint directory")
    ttrain.set_defaults(func=cmd_tse_train)
    teval = tse.add_parser("eval", parents=[_common(mode=True)], help="score a checkpoint or a baseline")
    teval.add_argument("--ckpt", type=Path)
    teval.add_argument("--baseline", choices=("mixture", "oracle"))
    teval.add_argument("--manifest", type=Path)
    teval.add_argument("--split")
    teval.add_argument("--report", type=Path, help="report path (writes .csv and .json)")
    teval.add_argument("--pesq", action="store_true", help="add wide-band PESQ if available")
    teval.add_argument("--workers", type=int)
    teval.set_defaults(func=cmd_tse_eval)
    sep = tse.add_parser("separate", parents=[_common(seed=False, profile=False, mode=True)], help="one file in, one out")
    sep.add_argument("--mix", required=True, type=Path)
    sep.add_argument("--anchor", required=True, type=Path)
    sep.add_argument("--ckpt", required=True, type=Path)
    sep.add_argument("--out", required=True, type=Path)
    sep.set_defaults(func=cmd_tse_separate)

    ablate = groups.add_parser("ablate", parents=[_common()], help="train and compare local/global/HR")
    ablate.add_argument("--manifest", type=Path)
    ablate.add_argument("--seeds", type=int, nargs="+", help="seeds to repeat the comparison over (default: --seed and the next two)")
    ablate.add_argument("--out", type=Path, default=Path("runs/ablation"))
    ablate.set_defaults(func=cmd_ablate)

    report = groups.add_parser("report", help="figures").add_subparsers(dest="command", required=True)
    plot = report.add_parser("plot", parents=[_common(seed=False, profile=False)], help="loss curves and metric bars")
    plot.add_argument("--log", type=Path, help="training_log.json")
    plot.add_argument("--ablation", type=Path, help="ablation.json")
    plot.add_argument("--out", required=True, type=Path, help="output directory")
    plot.set_defaults(func=cmd_report_plot)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """File < environment < ``--set`` < dedicated flags."""
    overrides = list(args.overrides)
    flags = {
        "seed": "corpus.seed" if args.group == "corpus" else "seed",
        "profile": "model.profile",
        "mode": "train.mode",
        "speakers": "corpus.n_speakers",
        "utts": "corpus.utts_per_speaker",
        "root": "corpus.root",
        "manifest": "train.manifest",
        "workers": "evaluation.workers",
        "split": "evaluation.split",
    }
    for attr, key in flags.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    if getattr(args, "pesq", False):
        overrides.append("evaluation.pesq=true")
    return load_config(args.config, overrides)


def _store(cfg: RunConfig):
    from hrtse.data.manifest import Manifest
    from hrtse.data.mixing import AudioStore

    path = cfg.manifest_path()
    manifest = Manifest.load(path)
    return manifest, AudioStore(manifest, path.parent)


def cmd_corpus_make(args, cfg: RunConfig) -> None:
    from hrtse.data.toy_corpus import generate_toy_corpus

    manifest = generate_toy_corpus(cfg.corpus, show_progress=args.progress)
    print(f"{len(manifest.records)} utterances, {len(manifest.mixtures)} mixtures -> {cfg.corpus.root}")


def cmd_corpus_import(args, cfg: RunConfig) -> None:
    from hrtse.data.libri2talker import import_libri2talker

    manifest = import_libri2talker(args.csv, args.audio_root)
    manifest.save(args.out)
    print(f"{len(manifest.mixtures)} mixtures -> {args.out}")


def cmd_embedder_train(args, cfg: RunConfig) -> None:
    from hrtse.embedder_training import train_embedder

    manifest, store = _store(cfg)
    _, log = train_embedder(manifest, store, cfg, args.out, args.progress)
    last = log.epochs[-1]
    print(f"embedder: {len(log.epochs)} epochs, train acc {last.train_accuracy:.3f}, val acc {last.val_accuracy:.3f}")


def cmd_embedder_export(args, cfg: RunConfig) -> None:
    from hrtse.checkpoint import load_embedder
    from hrtse.embedder_training import embed_utterances, export_embeddings

    manifest, store = _store(cfg)
    embedder = load_embedder(args.ckpt or cfg.embedder.checkpoint, cfg)
    records = embed_utterances(embedder, manifest, store, cfg, args.split)
    export_embeddings(args.out, records)
    print(f"{len(records)} embeddings -> {args.out}")


def cmd_tse_train(args, cfg: RunConfig) -> None:
    from hrtse.training import train

    manifest, store = _store(cfg)
    out = args.out or Path(cfg.train.checkpoint_dir)
    log = train(cfg, manifest, store, out, cfg.train.mode, args.embedder, args.progress)
    print(f"best epoch {log.best_epoch} (val {log.best_val:.4f}); checkpoints in {out}")


def cmd_tse_eval(args, cfg: RunConfig) -> None:
    from hrtse.checkpoint import load_extractor
    from hrtse.config import to_dict
    from hrtse.evaluation import ExtractorEstimator, MixtureBaseline, OracleTarget, evaluate_set

    if args.baseline is None and args.ckpt is None:
        raise UsageError("tse eval needs --ckpt or --baseline")
    manifest, store = _store(cfg)
    if args.baseline == "mixture":
        estimator, echo, default_dir = MixtureBaseline(), to_dict(cfg), Path(cfg.train.checkpoint_dir)
    elif args.baseline == "oracle":
        estimator, echo, default_dir = OracleTarget(), to_dict(cfg), Path(cfg.train.checkpoint_dir)
    else:
        extractor, ckpt_cfg, _ = load_extractor(args.ckpt)
        estimator = ExtractorEstimator(extractor, args.mode)
        echo, default_dir = to_dict(ckpt_cfg), args.ckpt.parent
    report_path = args.report or default_dir / f"report_{estimator.name}_{cfg.evaluation.split}"
    report = evaluate_set(manifest, estimator, store, cfg.evaluation, report_path, echo, cfg.stft, args.progress)
    for key, value in report.aggregate().items():
        print(f"{key:8s} {value:.4f}")


def cmd_tse_separate(args, cfg: RunConfig) -> None:
    from hrtse.audio_io import read_wav, write_wav
    from hrtse.checkpoint import load_extractor

    extractor, ckpt_cfg, _ = load_extractor(args.ckpt)
    sr = ckpt_cfg.stft.sample_rate_hz
    mixture = read_wav(args.mix, sr)
    anchor = read_wav(args.anchor, sr)
    est = extractor.separate(mixture, anchor, args.mode)
    write_wav(args.out, est.numpy(), sr, subtype="float")
    print(f"{args.out} ({est.shape[-1] / sr:.2f} s)")


def cmd_ablate(args, cfg: RunConfig) -> None:
    from hrtse.ablation import run_ablation

    manifest, store = _store(cfg)
    result = run_ablation(cfg, manifest, store, args.out, args.seeds, args.progress)
    print(result.to_markdown())


def cmd_report_plot(args, cfg: RunConfig) -> None:
    from hrtse.artifacts import read_json
    from hrtse.plotting import plot_loss_curves, plot_metric_bars
    from hrtse.training import TrainingLog

    if args.log is None and args.ablation is None:
        raise UsageError("report plot needs --log and/or --ablation")
    written = []
    if args.log is not None:
        written.append(plot_loss_curves(TrainingLog.load(args.log), args.out / "loss_curves.png"))
    if args.ablation is not None:
        written.append(plot_metric_bars(read_json(args.ablation), args.out / "metric_bars.png"))
    for path in written:
        print(path)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT, force=True)
    try:
        cfg = resolve_config(args)
        args.func(args, cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (HrTseError, OSError, RuntimeError) as e:
        logger.error("%s", e)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
