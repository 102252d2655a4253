"""Line-delimited corpus manifest: utterance records plus mixture recipes."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from hrtse.artifacts import write_text
from hrtse.errors import ManifestError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class UtteranceRecord:
    """One source utterance.

    ``path`` is relative to the corpus root (``<speaker_id>/<utterance_id>.wav``)
    unless absolute.
    """

    utterance_id: str
    speaker_id: str
    path: str
    duration_s: float
    split: str = "train"

    def is_conformant(self, min_s: float = 3.0, max_s: float = 16.0) -> bool:
        return min_s <= self.duration_s <= max_s


@dataclass(frozen=True)
class MixtureSpec:
    """Recipe for one two-talker mixture; the audio is simulated on demand."""

    mixture_id: str
    target_utt: str
    interferer_utt: str
    anchor_utt: str
    gain_db: float = 0.0
    split: str = "train"


@dataclass
class Manifest:
    records: list[UtteranceRecord] = field(default_factory=list)
    mixtures: list[MixtureSpec] = field(default_factory=list)
    format_version: int = FORMAT_VERSION
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self._by_id = {r.utterance_id: r for r in self.records}

    def record(self, utterance_id: str) -> UtteranceRecord:
        try:
            return self._by_id[utterance_id]
        except KeyError:
            raise ManifestError(f"unknown utterance {utterance_id!r}") from None

    def speakers(self) -> list[str]:
        return sorted({r.speaker_id for r in self.records})

    def utterances_by_speaker(self) -> dict[str, list[UtteranceRecord]]:
        grouped: dict[str, list[UtteranceRecord]] = defaultdict(list)
        for r in self.records:
            grouped[r.speaker_id].append(r)
        return {spk: sorted(recs, key=lambda r: r.utterance_id) for spk, recs in grouped.items()}

    def split_mixtures(self, split: str | None) -> list[MixtureSpec]:
        if split is None:
            return list(self.mixtures)
        return [m for m in self.mixtures if m.split == split]

    def errors(self) -> list[str]:
        errors = []
        if len(self._by_id) != len(self.records):
            errors.append("duplicate utterance ids")
        seen = set()
        for m in self.mixtures:
            if m.mixture_id in seen:
                errors.append(f"duplicate mixture id {m.mixture_id}")
            seen.add(m.mixture_id)
            missing = [u for u in (m.target_utt, m.interferer_utt, m.anchor_utt) if u not in self._by_id]
            if missing:
                errors.append(f"{m.mixture_id}: unknown utterances {missing}")
                continue
            target, interferer, anchor = (self._by_id[u] for u in (m.target_utt, m.interferer_utt, m.anchor_utt))
            if target.speaker_id == interferer.speaker_id:
                errors.append(f"{m.mixture_id}: target and interferer share speaker {target.speaker_id}")
            if anchor.speaker_id != target.speaker_id:
                errors.append(f"{m.mixture_id}: anchor speaker differs from target speaker")
            if anchor.utterance_id == target.utterance_id:
                errors.append(f"{m.mixture_id}: anchor is the target utterance")
        return errors

    def validate(self) -> Manifest:
        errors = self.errors()
        if errors:
            raise ManifestError("; ".join(errors[:5]) + (f" (+{len(errors) - 5} more)" if len(errors) > 5 else ""))
        return self

    def to_lines(self) -> list[str]:
        header = {
            "kind": "header",
            "format_version": self.format_version,
            "records": len(self.records),
            "mixtures": len(self.mixtures),
            "meta": self.meta,
        }
        lines = [json.dumps(header, sort_keys=True)]
        lines += [json.dumps({"kind": "utterance", **asdict(r)}, sort_keys=True) for r in self.records]
        lines += [json.dumps({"kind": "mixture", **asdict(m)}, sort_keys=True) for m in self.mixtures]
        return lines

    def save(self, path: str | Path) -> Path:
        return write_text(path, "\n".join(self.to_lines()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> Manifest:
        path = Path(path)
        if not path.exists():
            raise ManifestError(f"manifest not found: {path}")
        header = None
        records, mixtures = [], []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    kind = obj.pop("kind")
                except (json.JSONDecodeError, KeyError, AttributeError) as e:
                    raise ManifestError(f"{path}:{lineno}: malformed record") from e
                if header is None:
                    if kind != "header":
                        raise ManifestError(f"{path}: first line must be the header")
                    header = obj
                    continue
                try:
                    if kind == "utterance":
                        records.append(UtteranceRecord(**obj))
                    elif kind == "mixture":
                        mixtures.append(MixtureSpec(**obj))
                    else:
                        raise ManifestError(f"{path}:{lineno}: unknown record kind {kind!r}")
                except TypeError as e:
                    raise ManifestError(f"{path}:{lineno}: {e}") from e
        if header is None:
            raise ManifestError(f"{path}: empty manifest")
        if header.get("format_version") != FORMAT_VERSION:
            raise ManifestError(f"{path}: unsupported format_version {header.get('format_version')}")
        return cls(records, mixtures, FORMAT_VERSION, header.get("meta", {})).validate()
