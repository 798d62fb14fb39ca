"""Deterministic batch processing over image directory trees.

A run walks the input tree in sorted order, derives an independent random
stream per image from ``(master_seed, ordinal)``, applies the selected
transform, writes PNG outputs mirroring the input layout, and emits a
line-delimited manifest from which every stochastic decision can be audited,
re-counted, and byte-exactly replayed. Results are invariant under the
worker count.
"""

from __future__ import annotations

import json
import logging
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from reidaug.buffer import ImageBuffer
from reidaug.codecs import ImageDecodeError, decode_image, encode_image
from reidaug.defense import DefenseConfig, DefenseKind, DefenseOutcome, mmd_apply, resize_defense
from reidaug.imagecore import gray_to_rgb, to_grayscale
from reidaug.transforms import (
    AugmentConfig,
    LgprOutcome,
    Rect,
    SketchParams,
    fuse_channels,
    ggpr_gate,
    grayscale_rect,
    lgpr,
    sketch,
)

logger = logging.getLogger(__name__)

MODES = ("ggpr", "lgpr", "combined", "mmd", "resize_defense")

MANIFEST_VERSION = 1

_IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}
_REID_NAME = re.compile(r"^(\w+)_(c\d+)\S*\.(jpg|jpeg|png)$")

_MAX_SEED = 2**64 - 1


class ManifestError(ValueError):
    """Raised when a manifest file cannot be parsed."""


@dataclass(frozen=True)
class DatasetEntry:
    """One input file: stable ordinal plus best-effort ReID identity fields."""

    path: str
    ordinal: int
    person_id: str | None = None
    camera_id: str | None = None


@dataclass(frozen=True)
class TransformRecord:
    """Audit entry for one processed image.

    ``outcome`` holds the mode-specific draws and choices; together with the
    run header it is sufficient to replay the output byte for byte.
    """

    ordinal: int
    path: str
    output: str | None
    mode: str
    stream_key: int
    outcome: dict | None
    skipped: str | None = None

    def to_dict(self) -> dict:
        return {
            "record": "entry",
            "ordinal": self.ordinal,
            "path": self.path,
            "output": self.output,
            "mode": self.mode,
            "stream_key": self.stream_key,
            "skipped": self.skipped,
            "outcome": self.outcome,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TransformRecord":
        return cls(
            ordinal=data["ordinal"],
            path=data["path"],
            output=data.get("output"),
            mode=data["mode"],
            stream_key=data["stream_key"],
            outcome=data.get("outcome"),
            skipped=data.get("skipped"),
        )


@dataclass
class CategoryStat:
    """Observed count for one outcome category, with its binomial z-score."""

    name: str
    count: int
    denominator: int
    expected_prob: float | None
    frequency: float
    z_score: float | None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "count": self.count,
            "denominator": self.denominator,
            "expected_prob": self.expected_prob,
            "frequency": self.frequency,
            "z_score": self.z_score,
        }


@dataclass
class RunStats:
    """Statistical self-report of one run."""

    mode: str
    total: int
    processed: int
    skipped: int
    categories: list[CategoryStat] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "total": self.total,
            "processed": self.processed,
            "skipped": self.skipped,
            "categories": [c.to_dict() for c in self.categories],
        }

    def category(self, name: str) -> CategoryStat:
        for cat in self.categories:
            if cat.name == name:
                return cat
        raise KeyError(name)


@dataclass
class BatchResult:
    records: list[TransformRecord]
    stats: RunStats
    manifest_path: Path
    written: int
    skipped: int


def derive_stream(master_seed: int, ordinal: int) -> np.random.Generator:
    """Independent, reproducible random stream for one image.

    The stream is a PCG64 generator keyed by feeding the entropy pair
    ``[master_seed, ordinal]`` through NumPy's SeedSequence mixer, so the same
    pair always yields the same stream and distinct ordinals yield unrelated
    streams.
    """
    if not 0 <= master_seed <= _MAX_SEED:
        raise ValueError(f"master_seed must be a 64-bit unsigned value, got {master_seed}")
    if ordinal < 0:
        raise ValueError(f"ordinal must be non-negative, got {ordinal}")
    seq = np.random.SeedSequence([master_seed, ordinal])
    return np.random.Generator(np.random.PCG64(seq))


def parse_reid_name(filename: str) -> tuple[str | None, str | None]:
    """Best-effort `personId_cameraSeq_frame.ext` identity parse."""
    match = _REID_NAME.match(filename)
    if match is None:
        return None, None
    return match.group(1), match.group(2)


def walk_dataset(root: str | os.PathLike) -> list[DatasetEntry]:
    """Collect PNG/JPEG files under ``root`` in byte-wise path order.

    Ordinals index the sorted relative paths (posix separators), so they are
    stable across platforms. Per-directory permission failures are logged and
    skipped without aborting the walk.
    """
    root_path = Path(root)
    if not root_path.is_dir():
        raise NotADirectoryError(f"dataset root {root_path} is not a readable directory")

    def on_error(err: OSError) -> None:
        logger.warning("skipping unreadable directory entry: %s", err)

    rel_paths: list[str] = []
    for dirpath, _dirnames, filenames in os.walk(root_path, onerror=on_error):
        for name in filenames:
            if Path(name).suffix.lower() in _IMAGE_EXTENSIONS:
                rel = Path(dirpath, name).relative_to(root_path).as_posix()
                rel_paths.append(rel)
    rel_paths.sort()
    entries = []
    for ordinal, rel in enumerate(rel_paths):
        person_id, camera_id = parse_reid_name(rel.rsplit("/", 1)[-1])
        entries.append(DatasetEntry(path=rel, ordinal=ordinal, person_id=person_id, camera_id=camera_id))
    return entries


def _lgpr_outcome_dict(outcome: LgprOutcome) -> dict:
    return {
        "gate": outcome.gate,
        "fired": outcome.fired,
        "rect": list(outcome.rect.as_tuple()) if outcome.rect else None,
        "attempts": outcome.attempts,
        "draws": list(outcome.draws),
    }


def _mmd_outcome_dict(outcome: DefenseOutcome) -> dict:
    return {
        "gate": outcome.draws[0],
        "kind": outcome.kind.value,
        "channels": list(outcome.channels) if outcome.channels else None,
        "draws": list(outcome.draws),
    }


def apply_transform(
    img: ImageBuffer,
    mode: str,
    augment: AugmentConfig,
    defense: DefenseConfig,
    rng: np.random.Generator,
) -> tuple[ImageBuffer, dict]:
    """Apply one pipeline mode to one image, returning the outcome dict.

    Combined mode evaluates the global-grayscale gate first and skips the
    local patch when it fires; a fully grayscale image is a fixed point of
    the patch transform, so the ordering is observationally immaterial.
    """
    if mode == "ggpr":
        gate = float(rng.random())
        out, fired = ggpr_gate(img, gate, augment.ggpr_prob)
        return out, {"gate": gate, "fired": fired}
    if mode == "lgpr":
        out, outcome = lgpr(img, augment, rng)
        return out, _lgpr_outcome_dict(outcome)
    if mode == "combined":
        gate = float(rng.random())
        out, fired = ggpr_gate(img, gate, augment.ggpr_prob)
        if fired:
            return out, {"ggpr": {"gate": gate, "fired": True}, "lgpr": None}
        out, outcome = lgpr(img, augment, rng)
        return out, {"ggpr": {"gate": gate, "fired": False}, "lgpr": _lgpr_outcome_dict(outcome)}
    if mode == "mmd":
        out, outcome = mmd_apply(img, defense, rng)
        return out, _mmd_outcome_dict(outcome)
    if mode == "resize_defense":
        return resize_defense(img, defense), {}
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def replay_record(
    source: ImageBuffer,
    record: TransformRecord | dict,
    *,
    defense: DefenseConfig | None = None,
) -> ImageBuffer:
    """Re-apply the transform described by a record to its source image.

    Uses the interpreted outcome fields (fired flags, rectangle, branch,
    channels) rather than re-consuming random draws, so the result is byte
    identical to the recorded run. Defense-mode records need the run's
    ``DefenseConfig`` for the sketch parameters and resize geometry.
    """
    rec = record.to_dict() if isinstance(record, TransformRecord) else record
    if rec.get("skipped"):
        raise ValueError(f"record for {rec.get('path')!r} was skipped; nothing to replay")
    mode = rec["mode"]
    outcome = rec.get("outcome") or {}
    img = source
    if mode in ("ggpr", "lgpr", "combined", "mmd") and img.channels == 1:
        img = gray_to_rgb(img)
    if mode == "ggpr":
        return gray_to_rgb(to_grayscale(img)) if outcome["fired"] else img
    if mode == "lgpr":
        return _replay_lgpr(img, outcome)
    if mode == "combined":
        if outcome["ggpr"]["fired"]:
            return gray_to_rgb(to_grayscale(img))
        return _replay_lgpr(img, outcome["lgpr"])
    if mode == "mmd":
        return _replay_mmd(img, outcome, defense or DefenseConfig())
    if mode == "resize_defense":
        return resize_defense(img, defense or DefenseConfig())
    raise ValueError(f"unknown mode {mode!r} in record")


def _replay_lgpr(img: ImageBuffer, outcome: dict) -> ImageBuffer:
    rect = outcome.get("rect")
    if not outcome["fired"] or rect is None:
        return img
    return grayscale_rect(img, Rect(*rect))


def _replay_mmd(img: ImageBuffer, outcome: dict, cfg: DefenseConfig) -> ImageBuffer:
    kind = DefenseKind(outcome["kind"])
    if kind is DefenseKind.PASS_THROUGH:
        return img
    if kind is DefenseKind.PURE_GRAY:
        return gray_to_rgb(to_grayscale(img))
    channels = tuple(outcome["channels"])
    plane = to_grayscale(img) if kind is DefenseKind.GRAY_FUSE else sketch(img, cfg.sketch)
    return fuse_channels(img, plane, channels)


def _augment_dict(cfg: AugmentConfig) -> dict:
    return {
        "lgpr_prob": cfg.lgpr_prob,
        "ggpr_prob": cfg.ggpr_prob,
        "area_min": cfg.area_min,
        "area_max": cfg.area_max,
        "aspect_min": cfg.aspect_min,
        "aspect_max": cfg.aspect_max,
        "max_attempts": cfg.max_attempts,
    }


def _defense_dict(cfg: DefenseConfig) -> dict:
    return {
        "gray_prob": cfg.gray_prob,
        "gray_fuse_prob": cfg.gray_fuse_prob,
        "sketch_fuse_prob": cfg.sketch_fuse_prob,
        "two_channel_prob": cfg.two_channel_prob,
        "sketch_operator": cfg.sketch.operator,
        "sketch_sigma": cfg.sketch.sigma,
        "down_w": cfg.down_w,
        "down_h": cfg.down_h,
        "up_w": cfg.up_w,
        "up_h": cfg.up_h,
    }


def augment_from_dict(data: dict) -> AugmentConfig:
    return AugmentConfig(**data)


def defense_from_dict(data: dict) -> DefenseConfig:
    params = dict(data)
    operator = params.pop("sketch_operator")
    sigma = params.pop("sketch_sigma")
    return DefenseConfig(sketch=SketchParams(operator=operator, sigma=sigma), **params)


def manifest_header(
    mode: str,
    master_seed: int,
    augment: AugmentConfig | None,
    defense: DefenseConfig | None,
    total: int,
) -> dict:
    return {
        "record": "run",
        "version": MANIFEST_VERSION,
        "mode": mode,
        "master_seed": master_seed,
        "total": total,
        "augment": _augment_dict(augment) if augment is not None else None,
        "defense": _defense_dict(defense) if defense is not None else None,
    }


def write_manifest(path: str | os.PathLike, header: dict, records: Iterable[TransformRecord]) -> Path:
    """Write the run header plus one JSON record per line, in ordinal order."""
    out_path = Path(path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for record in sorted(records, key=lambda r: r.ordinal):
            fh.write(json.dumps(record.to_dict()) + "\n")
    return out_path


def read_manifest(source) -> tuple[dict, list[TransformRecord]]:
    """Parse a manifest from a path or an iterable of lines."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = [line.rstrip("\n") for line in source]
    header: dict | None = None
    records: list[TransformRecord] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest line {lineno}: invalid JSON ({exc.msg})") from exc
        kind = data.get("record")
        if kind == "run":
            if header is not None:
                raise ManifestError(f"manifest line {lineno}: duplicate run header")
            header = data
        elif kind == "entry":
            try:
                records.append(TransformRecord.from_dict(data))
            except KeyError as exc:
                raise ManifestError(f"manifest line {lineno}: missing field {exc}") from exc
        else:
            raise ManifestError(f"manifest line {lineno}: unknown record type {kind!r}")
    if header is None:
        if records:
            raise ManifestError("manifest has entries but no run header")
        header = manifest_header("unknown", 0, None, None, 0)
    return header, records


def _z_score(count: int, denominator: int, prob: float | None) -> float | None:
    if prob is None or denominator == 0 or not 0.0 < prob < 1.0:
        return None
    sd = math.sqrt(denominator * prob * (1.0 - prob))
    return (count - denominator * prob) / sd


def _category(name: str, count: int, denominator: int, prob: float | None) -> CategoryStat:
    freq = count / denominator if denominator else 0.0
    return CategoryStat(
        name=name,
        count=count,
        denominator=denominator,
        expected_prob=prob,
        frequency=freq,
        z_score=_z_score(count, denominator, prob),
    )


def stats_from_records(header: dict, records: list[TransformRecord]) -> RunStats:
    """Recompute run statistics from manifest data alone."""
    mode = header.get("mode", "unknown")
    augment = header.get("augment") or {}
    defense = header.get("defense") or {}
    processed = [r for r in records if not r.skipped]
    skipped = len(records) - len(processed)
    stats = RunStats(mode=mode, total=len(records), processed=len(processed), skipped=skipped)
    n = len(processed)
    if mode == "ggpr":
        fired = sum(1 for r in processed if r.outcome["fired"])
        stats.categories = [
            _category("ggpr_fired", fired, n, augment.get("ggpr_prob")),
            _category("unchanged", n - fired, n, _complement(augment.get("ggpr_prob"))),
        ]
    elif mode == "lgpr":
        fired = sum(1 for r in processed if r.outcome["fired"])
        applied = sum(1 for r in processed if r.outcome["rect"] is not None)
        stats.categories = [
            _category("lgpr_fired", fired, n, augment.get("lgpr_prob")),
            _category("lgpr_applied", applied, n, None),
            _category("lgpr_no_fit", fired - applied, n, None),
            _category("unchanged", n - fired, n, _complement(augment.get("lgpr_prob"))),
        ]
    elif mode == "combined":
        g_fired = sum(1 for r in processed if r.outcome["ggpr"]["fired"])
        non_g = n - g_fired
        l_records = [r.outcome["lgpr"] for r in processed if r.outcome["lgpr"] is not None]
        l_fired = sum(1 for o in l_records if o["fired"])
        l_applied = sum(1 for o in l_records if o["rect"] is not None)
        stats.categories = [
            _category("ggpr_fired", g_fired, n, augment.get("ggpr_prob")),
            _category("lgpr_fired", l_fired, non_g, augment.get("lgpr_prob")),
            _category("lgpr_applied", l_applied, non_g, None),
            _category("unchanged", non_g - l_fired, non_g, _complement(augment.get("lgpr_prob"))),
        ]
    elif mode == "mmd":
        p3 = defense.get("sketch_fuse_prob")
        p2 = defense.get("gray_fuse_prob")
        p1 = defense.get("gray_prob")
        rest = None
        if None not in (p1, p2, p3):
            rest = 1.0 - (p1 + p2 + p3)
        counts = {k.value: 0 for k in DefenseKind}
        for r in processed:
            counts[r.outcome["kind"]] += 1
        stats.categories = [
            _category("sketch_fuse", counts["sketch_fuse"], n, p3),
            _category("gray_fuse", counts["gray_fuse"], n, p2),
            _category("pure_gray", counts["pure_gray"], n, p1),
            _category("pass_through", counts["pass_through"], n, rest),
        ]
    elif mode == "resize_defense":
        stats.categories = [_category("resized", n, n, None)]
    return stats


def _complement(prob: float | None) -> float | None:
    return None if prob is None else 1.0 - prob


def compute_stats(source) -> RunStats:
    """Parse a manifest (path or lines) and recompute its RunStats."""
    header, records = read_manifest(source)
    return stats_from_records(header, records)


def _plan_outputs(entries: list[DatasetEntry]) -> dict[int, str]:
    """Mirror input paths with a .png suffix, resolving collisions deterministically."""
    plain = {e.ordinal: str(Path(e.path).with_suffix(".png").as_posix()) for e in entries}
    seen: dict[str, list[int]] = {}
    for ordinal, out in plain.items():
        seen.setdefault(out, []).append(ordinal)
    for out, ordinals in seen.items():
        if len(ordinals) > 1:
            for ordinal in ordinals:
                entry = next(e for e in entries if e.ordinal == ordinal)
                plain[ordinal] = entry.path + ".png"
    return plain


_NEEDS_RGB = ("ggpr", "lgpr", "combined", "mmd")


def _process_entry(
    entry: DatasetEntry,
    input_root: Path,
    output_root: Path,
    output_rel: str,
    mode: str,
    augment: AugmentConfig,
    defense: DefenseConfig,
    master_seed: int,
) -> TransformRecord:
    try:
        data = (input_root / entry.path).read_bytes()
        img = decode_image(data)
    except (ImageDecodeError, OSError) as exc:
        logger.warning("skipping %s: %s", entry.path, exc)
        return TransformRecord(
            ordinal=entry.ordinal,
            path=entry.path,
            output=None,
            mode=mode,
            stream_key=entry.ordinal,
            outcome=None,
            skipped=str(exc),
        )
    if mode in _NEEDS_RGB and img.channels == 1:
        img = gray_to_rgb(img)
    rng = derive_stream(master_seed, entry.ordinal)
    out_img, outcome = apply_transform(img, mode, augment, defense, rng)
    out_path = output_root / output_rel
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(encode_image(out_img))
    return TransformRecord(
        ordinal=entry.ordinal,
        path=entry.path,
        output=output_rel,
        mode=mode,
        stream_key=entry.ordinal,
        outcome=outcome,
    )


def process_batch(
    input_root: str | os.PathLike,
    output_root: str | os.PathLike,
    mode: str,
    *,
    augment: AugmentConfig | None = None,
    defense: DefenseConfig | None = None,
    master_seed: int = 0,
    workers: int = 1,
    manifest_path: str | os.PathLike | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> BatchResult:
    """Transform every image under ``input_root`` into ``output_root``.

    Each entry is processed with its own stream derived from
    ``(master_seed, ordinal)``, so output bytes and the manifest are
    invariant under ``workers``. Single-channel inputs are promoted to RGB
    for the 3-channel modes. Per-file decode failures are recorded as
    skipped entries; only output write errors abort the run.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    augment = augment if augment is not None else AugmentConfig()
    defense = defense if defense is not None else DefenseConfig()

    in_root = Path(input_root)
    out_root = Path(output_root)
    entries = walk_dataset(in_root)
    out_root.mkdir(parents=True, exist_ok=True)
    outputs = _plan_outputs(entries)

    def job(entry: DatasetEntry) -> TransformRecord:
        return _process_entry(
            entry, in_root, out_root, outputs[entry.ordinal], mode, augment, defense, master_seed
        )

    records: list[TransformRecord] = []
    total = len(entries)
    if workers == 1 or total <= 1:
        iterator: Iterator[TransformRecord] = map(job, entries)
        for done, record in enumerate(iterator, start=1):
            records.append(record)
            if progress is not None:
                progress(done, total)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for done, record in enumerate(pool.map(job, entries), start=1):
                records.append(record)
                if progress is not None:
                    progress(done, total)

    header = manifest_header(mode, master_seed, augment, defense, total)
    manifest = Path(manifest_path) if manifest_path is not None else out_root / "manifest.ndjson"
    write_manifest(manifest, header, records)
    stats = stats_from_records(header, records)
    skipped = sum(1 for r in records if r.skipped)
    return BatchResult(
        records=records,
        stats=stats,
        manifest_path=manifest,
        written=total - skipped,
        skipped=skipped,
    )
