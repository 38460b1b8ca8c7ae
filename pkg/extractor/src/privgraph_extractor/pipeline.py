"""Per-image extraction and JSON-Lines export.

The emitted file follows the privgraph/1 schema: one header line with the
vocabulary hash and the exact extractor settings, then one record per
image. Field ordering is fixed so identical inputs produce identical
bytes.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .config import CHANNEL_MEAN, CHANNEL_STD, ExtractionConfig
from .perception import PerceptionBackend, RawDetection
from .vocab import Vocabulary

log = logging.getLogger("privgraph_extractor")

SCHEMA_NAME = "privgraph/1"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


def _iou(a: RawDetection, b: RawDetection) -> float:
    ax1, ay1, aw, ah = a.bbox
    bx1, by1, bw, bh = b.bbox
    ax2, ay2 = ax1 + aw, ay1 + ah
    bx2, by2 = bx1 + bw, by1 + bh
    ix = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    iy = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def filter_detections(raw: list[RawDetection],
                      config: ExtractionConfig) -> list[RawDetection]:
    """Confidence floor, greedy per-category NMS, then the instance cap."""
    survivors = [d for d in raw if d.confidence >= config.confidence_floor]
    survivors.sort(key=lambda d: -d.confidence)
    kept: list[RawDetection] = []
    for det in survivors:
        overlapping = any(k.category == det.category
                          and _iou(k, det) > config.nms_threshold for k in kept)
        if not overlapping:
            kept.append(det)
    return kept[:config.max_instances]


def extract_detections(image: Image.Image, backend: PerceptionBackend,
                       config: ExtractionConfig) -> list[RawDetection]:
    return filter_detections(backend.detect(image), config)


def extract_scene_logits(image: Image.Image,
                         backend: PerceptionBackend) -> np.ndarray:
    return backend.scene_logits(image)


def pixel_vector(image: Image.Image, config: ExtractionConfig) -> np.ndarray:
    """Resized, channel-normalized image flattened channel by channel."""
    size = config.pixel_size
    arr = np.asarray(image.convert("RGB").resize((size, size)),
                     dtype=np.float64) / 255.0
    arr = (arr - np.array(CHANNEL_MEAN)) / np.array(CHANNEL_STD)
    return arr.transpose(2, 0, 1).reshape(-1)


@dataclass(frozen=True)
class CorpusEntry:
    image_id: str
    label: int
    path: Path
    split: str | None = None


def read_manifest(images_dir: str, labels_csv: str) -> list[CorpusEntry]:
    """Labels CSV: ``id,label[,split[,file]]``; file defaults to ``<id>.<ext>``."""
    root = Path(images_dir)
    entries: list[CorpusEntry] = []
    seen: set[str] = set()
    with open(labels_csv, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        columns = {name: i for i, name in enumerate(header)}
        if "id" not in columns or "label" not in columns:
            raise ValueError("labels CSV must carry 'id' and 'label' columns")
        for row in reader:
            image_id = row[columns["id"]]
            if image_id in seen:
                raise ValueError(f"duplicate image id {image_id!r} in labels CSV")
            seen.add(image_id)
            label = int(row[columns["label"]])
            split = row[columns["split"]] if "split" in columns and row[columns["split"]] else None
            if "file" in columns and row[columns["file"]]:
                path = root / row[columns["file"]]
            else:
                path = next((root / f"{image_id}{ext}" for ext in IMAGE_SUFFIXES
                             if (root / f"{image_id}{ext}").exists()),
                            root / f"{image_id}.png")
            entries.append(CorpusEntry(image_id, label, path, split))
    return entries


def extract_record(entry: CorpusEntry, backend: PerceptionBackend,
                   config: ExtractionConfig, with_pixels: bool,
                   with_deep: bool, deep_dim: int) -> dict:
    image = Image.open(entry.path)
    image.load()
    detections = extract_detections(image, backend, config)
    record: dict = {
        "id": entry.image_id,
        "label": entry.label,
        "detections": [{"cat": d.category, "conf": d.confidence,
                        "bbox": list(d.bbox)} for d in detections],
        "scene_logits": extract_scene_logits(image, backend).tolist(),
    }
    if with_deep and detections:
        deep: dict[str, list] = {}
        for det in detections:  # later instances overwrite: last one wins
            deep[str(det.category)] = backend.deep_features(
                image, det, deep_dim).tolist()
        record["deep_features"] = dict(sorted(deep.items(), key=lambda kv: int(kv[0])))
    if with_pixels:
        record["pixels"] = pixel_vector(image, config).tolist()
    if entry.split:
        record["split"] = entry.split
    return record


def export_jsonl(entries: list[CorpusEntry], out_path: str, vocab: Vocabulary,
                 backend: PerceptionBackend, config: ExtractionConfig,
                 with_pixels: bool = False, with_deep: bool = False,
                 deep_dim: int | None = None) -> dict:
    """Extract every readable image and write the schema-valid feature file."""
    header = {"schema": SCHEMA_NAME, "vocab_hash": vocab.hash(),
              "extractor": {**config.header_metadata(), "backend": backend.name}}
    written = 0
    skipped: list[str] = []
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header) + "\n")
        for entry in entries:
            try:
                record = extract_record(entry, backend, config, with_pixels,
                                        with_deep, deep_dim or config.deep_dim)
            except (FileNotFoundError, UnidentifiedImageError, OSError) as e:
                log.warning("skipping unreadable image %s (%s): %s",
                            entry.image_id, entry.path, e)
                skipped.append(entry.image_id)
                continue
            f.write(json.dumps(record) + "\n")
            written += 1
    return {"written": written, "skipped": skipped, "header": header}
