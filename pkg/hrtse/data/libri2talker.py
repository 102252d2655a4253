"""Manifest import for an existing Libri2Mix-style target-speaker list.

Expected CSV columns: ``mixture_ID``, ``source_1_path`` (target),
``source_2_path`` (interferer), ``anchor_path`` and optionally
``target_speaker``/``interferer_speaker``/``split``.

Utterance ids are paths relative to the audio root without extension, so the
``s1/<mixID>.wav`` and ``s2/<mixID>.wav`` sources of one Libri2Mix mixture
stay distinct. Speaker ids default to the LibriSpeech prefix
(``<speaker>-<chapter>-<utt>``); a file under ``s<k>/`` named
``<utt1>_<utt2>`` takes the speaker of its k-th part. Sources are taken
as given and summed at 0 dB, which reproduces a min-mode Libri2Mix mixture.
"""

from __future__ import annotations

import csv
import logging
import re
from pathlib import Path

import soundfile as sf

from hrtse.data.manifest import Manifest, MixtureSpec, UtteranceRecord
from hrtse.errors import ManifestError

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("mixture_ID", "source_1_path", "source_2_path", "anchor_path")
SOURCE_DIR = re.compile(r"^s(\d)$")


def _speaker_of(path: Path) -> str:
    parts = path.stem.split("_")
    source = SOURCE_DIR.match(path.parent.name)
    if source and len(parts) > 1 and 1 <= int(source.group(1)) <= len(parts):
        return parts[int(source.group(1)) - 1].split("-")[0]
    return path.stem.split("-")[0]


def _utterance_id(path: Path, base: Path) -> str:
    try:
        rel = path.relative_to(base)
    except ValueError:
        rel = path
    return rel.with_suffix("").as_posix()


def import_libri2talker(csv_path: str | Path, audio_root: str | Path | None = None, split: str = "train") -> Manifest:
    """Build a manifest from a target-speaker mixture list.

    Args:
        csv_path: CSV file with the columns described in the module docstring.
        audio_root: Base directory for relative paths in the CSV.
        split: Split assigned to rows without a ``split`` column.

    Returns:
        Validated Manifest with absolute utterance paths
    """
    csv_path = Path(csv_path)
    base = Path(audio_root) if audio_root is not None else csv_path.parent
    records: dict[str, UtteranceRecord] = {}
    mixtures: list[MixtureSpec] = []

    def register(raw: str, speaker: str | None, row_split: str) -> str:
        path = Path(raw)
        path = path if path.is_absolute() else base / path
        utt_id = _utterance_id(path, base)
        if utt_id not in records:
            if not path.exists():
                raise ManifestError(f"audio file missing: {path}")
            info = sf.info(str(path))
            records[utt_id] = UtteranceRecord(
                utterance_id=utt_id,
                speaker_id=speaker or _speaker_of(path),
                path=str(path.resolve()),
                duration_s=info.frames / info.samplerate,
                split=row_split,
            )
        return utt_id

    with open(csv_path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ManifestError(f"{csv_path}: missing columns {missing}")
        for row in reader:
            row_split = row.get("split") or split
            target = register(row["source_1_path"], row.get("target_speaker"), row_split)
            interferer = register(row["source_2_path"], row.get("interferer_speaker"), row_split)
            anchor = register(row["anchor_path"], row.get("target_speaker"), row_split)
            mixtures.append(MixtureSpec(row["mixture_ID"], target, interferer, anchor, 0.0, row_split))

    logger.info("imported %d mixtures over %d utterances from %s", len(mixtures), len(records), csv_path)
    return Manifest(list(records.values()), mixtures, meta={"generator": "libri2talker", "source": str(csv_path)}).validate()
