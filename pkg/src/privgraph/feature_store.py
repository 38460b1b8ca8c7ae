"""Per-image feature records: loading, validation, splits and summaries.

Images never enter this package. Each image is represented by a record
holding its binary privacy label, the object detections found in it, the
365 scene logits of a fixed scene classifier and, optionally, per-category
deep feature vectors and a flattened pixel vector.

File formats
------------
Feature file (JSON Lines). First line is a header::

    {"schema": "privgraph/1", "vocab_hash": "...", "extractor": {...}}

Every following line is one record::

    {"id": "img1", "label": 0,
     "detections": [{"cat": 0, "conf": 0.93, "bbox": [x, y, w, h]}],
     "scene_logits": [...365 floats...],          # optional
     "deep_features": {"0": [...d floats...]},    # optional, per category
     "pixels": [...floats...],                    # optional
     "split": "train"}                            # optional

Vocabulary file (JSON): ``{"objects": [...80...], "scenes": [...365...]}``.
Split file (CSV): ``id,split`` rows.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import SchemaError, ValidationError
from .hashing import hash_of

PUBLIC = 0
PRIVATE = 1
SPLITS = ("train", "val", "test")
SCHEMA_NAME = "privgraph/1"
DEFAULT_MAX_INSTANCES = 50

# COCO detection categories in canonical order; index 0 is "person".
COCO_OBJECT_NAMES = [
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train",
    "truck", "boat", "traffic light", "fire hydrant", "stop sign",
    "parking meter", "bench", "bird", "cat", "dog", "horse", "sheep", "cow",
    "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella", "handbag",
    "tie", "suitcase", "frisbee", "skis", "snowboard", "sports ball", "kite",
    "baseball bat", "baseball glove", "skateboard", "surfboard",
    "tennis racket", "bottle", "wine glass", "cup", "fork", "knife", "spoon",
    "bowl", "banana", "apple", "sandwich", "orange", "broccoli", "carrot",
    "hot dog", "pizza", "donut", "cake", "chair", "couch", "potted plant",
    "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote",
    "keyboard", "cell phone", "microwave", "oven", "toaster", "sink",
    "refrigerator", "book", "clock", "vase", "scissors", "teddy bear",
    "hair drier", "toothbrush",
]

N_SCENES = 365
PIXEL_VECTOR_LEN = 3 * 64 * 64


@dataclass(frozen=True)
class EntityVocabulary:
    """Node vocabulary: object categories first, then the two privacy nodes."""

    object_names: tuple[str, ...]
    scene_names: tuple[str, ...]
    privacy_names: tuple[str, ...] = ("public", "private")

    def __post_init__(self):
        for kind, names in (("object", self.object_names),
                            ("scene", self.scene_names),
                            ("privacy", self.privacy_names)):
            if len(set(names)) != len(names):
                raise ValidationError(f"duplicate {kind} names in vocabulary")
        if len(self.privacy_names) != 2:
            raise ValidationError("exactly two privacy classes are supported")

    @property
    def n_objects(self) -> int:
        return len(self.object_names)

    @property
    def n_privacy(self) -> int:
        return len(self.privacy_names)

    @property
    def n_nodes(self) -> int:
        """Object nodes occupy indices [0, n_objects); privacy nodes follow."""
        return self.n_objects + self.n_privacy

    @property
    def person_index(self) -> int:
        return self.object_names.index("person")

    def hash(self) -> str:
        return hash_of({
            "objects": list(self.object_names),
            "scenes": list(self.scene_names),
            "privacy": list(self.privacy_names),
        })


def default_vocabulary(n_scenes: int = N_SCENES) -> EntityVocabulary:
    """COCO object categories plus placeholder scene names."""
    scenes = tuple(f"scene_{i:03d}" for i in range(n_scenes))
    return EntityVocabulary(tuple(COCO_OBJECT_NAMES), scenes)


def save_vocabulary(vocab: EntityVocabulary, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"objects": list(vocab.object_names),
                   "scenes": list(vocab.scene_names)}, f, indent=1)


def load_vocabulary(path: str) -> EntityVocabulary:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(f"vocabulary file is not valid JSON: {e}") from e
    if not isinstance(raw, dict) or "objects" not in raw or "scenes" not in raw:
        raise SchemaError("vocabulary file must contain 'objects' and 'scenes' lists")
    return EntityVocabulary(tuple(raw["objects"]), tuple(raw["scenes"]))


@dataclass(frozen=True)
class Detection:
    """One localized object instance."""

    category: int
    confidence: float
    bbox: tuple[float, float, float, float]  # (x, y, w, h) in pixels

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")
        if self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise ValidationError(f"bbox with non-positive size: {self.bbox}")


@dataclass(frozen=True)
class ImageRecord:
    id: str
    label: int
    detections: tuple[Detection, ...] = ()
    scene_logits: np.ndarray | None = None
    deep_object_features: dict[int, np.ndarray] | None = None
    pixel_vector: np.ndarray | None = None
    split: str | None = None

    def __post_init__(self):
        if self.label not in (PUBLIC, PRIVATE):
            raise ValidationError(f"record {self.id!r}: label {self.label} outside {{0, 1}}")
        if self.split is not None and self.split not in SPLITS:
            raise ValidationError(f"record {self.id!r}: unknown split {self.split!r}")

    def distinct_categories(self) -> set[int]:
        return {d.category for d in self.detections}


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of validated records sharing one vocabulary."""

    vocabulary: EntityVocabulary
    records: tuple[ImageRecord, ...]
    name: str = "dataset"
    header: dict = field(default_factory=dict)

    def __post_init__(self):
        k_o = self.vocabulary.n_objects
        n_scenes = len(self.vocabulary.scene_names)
        for rec in self.records:
            for det in rec.detections:
                if not 0 <= det.category < k_o:
                    raise ValidationError(
                        f"record {rec.id!r}: category {det.category} outside [0, {k_o})")
            if rec.scene_logits is not None and rec.scene_logits.shape != (n_scenes,):
                raise ValidationError(
                    f"record {rec.id!r}: scene_logits has length "
                    f"{rec.scene_logits.shape[0]}, expected {n_scenes}")

    def __len__(self) -> int:
        return len(self.records)

    def subset(self, split: str) -> tuple[ImageRecord, ...]:
        if split not in SPLITS:
            raise ValidationError(f"unknown split {split!r}")
        return tuple(r for r in self.records if r.split == split)

    def with_splits(self, assignment: dict[str, str]) -> "Dataset":
        """New dataset with ``record id -> split`` applied to every record."""
        missing = [r.id for r in self.records if r.id not in assignment]
        if missing:
            raise ValidationError(f"no split assigned for {len(missing)} records, "
                                  f"first: {missing[0]!r}")
        records = tuple(replace(r, split=assignment[r.id]) for r in self.records)
        return Dataset(self.vocabulary, records, self.name, self.header)

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=np.int64)


# -- JSON Lines loading / saving -----------------------------------------


def _parse_detection(raw: dict, line: int) -> Detection:
    try:
        cat = int(raw["cat"])
        conf = float(raw["conf"])
        bbox = tuple(float(v) for v in raw["bbox"])
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"malformed detection {raw!r}: {e}", line) from e
    if len(bbox) != 4:
        raise SchemaError(f"bbox must have 4 entries, got {len(bbox)}", line)
    try:
        return Detection(cat, conf, bbox)
    except ValidationError as e:
        raise SchemaError(str(e), line) from e


def _parse_record(raw: dict, line: int, vocab: EntityVocabulary,
                  max_instances: int) -> ImageRecord:
    if not isinstance(raw, dict):
        raise SchemaError("record line is not a JSON object", line)
    unknown = set(raw) - {"id", "label", "detections", "scene_logits",
                          "deep_features", "pixels", "split"}
    if unknown:
        raise SchemaError(f"unknown record fields {sorted(unknown)}", line)
    if "id" not in raw or "label" not in raw:
        raise SchemaError("record must carry 'id' and 'label'", line)
    if raw["label"] not in (PUBLIC, PRIVATE):
        raise SchemaError(f"label {raw['label']!r} outside {{0, 1}}", line)

    detections = tuple(_parse_detection(d, line) for d in raw.get("detections", []))
    if len(detections) > max_instances:
        raise SchemaError(
            f"detection cap exceeded: {len(detections)} > {max_instances}", line)
    for det in detections:
        if not 0 <= det.category < vocab.n_objects:
            raise SchemaError(
                f"category index {det.category} >= K_o ({vocab.n_objects})", line)

    scene = raw.get("scene_logits")
    scene_arr = None
    if scene is not None:
        scene_arr = np.asarray(scene, dtype=np.float64)
        if scene_arr.shape != (len(vocab.scene_names),):
            raise SchemaError(
                f"scene_logits has length {scene_arr.shape[0]}, "
                f"expected {len(vocab.scene_names)}", line)

    deep = raw.get("deep_features")
    deep_map = None
    if deep is not None:
        deep_map = {}
        for key, vec in deep.items():
            cat = int(key)
            if not 0 <= cat < vocab.n_objects:
                raise SchemaError(f"deep feature category {cat} >= K_o", line)
            deep_map[cat] = np.asarray(vec, dtype=np.float64)
        widths = {v.shape[0] for v in deep_map.values()}
        if len(widths) > 1:
            raise SchemaError(f"inconsistent deep feature widths {sorted(widths)}", line)

    pixels = raw.get("pixels")
    pixel_arr = np.asarray(pixels, dtype=np.float64) if pixels is not None else None

    try:
        return ImageRecord(str(raw["id"]), int(raw["label"]), detections,
                           scene_arr, deep_map, pixel_arr, raw.get("split"))
    except ValidationError as e:
        raise SchemaError(str(e), line) from e


def load_dataset(path: str, vocab: EntityVocabulary, *,
                 max_instances: int = DEFAULT_MAX_INSTANCES,
                 name: str | None = None,
                 check_vocab_hash: bool = True) -> Dataset:
    """Load and validate a JSON-Lines feature file.

    Raises :class:`SchemaError` naming the offending line on the first
    malformed record, and :class:`DataMismatchError` if the header's
    vocabulary hash disagrees with ``vocab``.
    """
    try:
        f = open(path, encoding="utf-8")
    except FileNotFoundError as e:
        raise SchemaError(f"feature file not found: {path}") from e

    records: list[ImageRecord] = []
    header: dict = {}
    seen_ids: set[str] = set()
    with f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"invalid JSON: {e.msg}", line_no) from e
            if line_no == 1 and isinstance(raw, dict) and "schema" in raw:
                if raw["schema"] != SCHEMA_NAME:
                    raise SchemaError(
                        f"unsupported schema {raw['schema']!r}, expected {SCHEMA_NAME!r}",
                        line_no)
                header = raw
                if check_vocab_hash and "vocab_hash" in raw and raw["vocab_hash"] != vocab.hash():
                    from .errors import DataMismatchError
                    raise DataMismatchError(
                        "feature file was extracted with a different vocabulary "
                        f"(hash {raw['vocab_hash'][:12]}... != {vocab.hash()[:12]}...)")
                continue
            rec = _parse_record(raw, line_no, vocab, max_instances)
            if rec.id in seen_ids:
                raise SchemaError(f"duplicate record id {rec.id!r}", line_no)
            seen_ids.add(rec.id)
            records.append(rec)

    return Dataset(vocab, tuple(records),
                   name=name or path.rsplit("/", 1)[-1], header=header)


def _record_to_json(rec: ImageRecord) -> dict:
    out: dict = {"id": rec.id, "label": rec.label,
                 "detections": [{"cat": d.category, "conf": d.confidence,
                                 "bbox": list(d.bbox)} for d in rec.detections]}
    if rec.scene_logits is not None:
        out["scene_logits"] = rec.scene_logits.tolist()
    if rec.deep_object_features is not None:
        out["deep_features"] = {str(k): v.tolist()
                                for k, v in sorted(rec.deep_object_features.items())}
    if rec.pixel_vector is not None:
        out["pixels"] = rec.pixel_vector.tolist()
    if rec.split is not None:
        out["split"] = rec.split
    return out


def save_dataset(dataset: Dataset, path: str, extractor_meta: dict | None = None) -> None:
    """Write a dataset back to the JSON-Lines schema, header included."""
    header = {"schema": SCHEMA_NAME, "vocab_hash": dataset.vocabulary.hash(),
              "extractor": extractor_meta or dataset.header.get("extractor", {})}
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header) + "\n")
        for rec in dataset.records:
            f.write(json.dumps(_record_to_json(rec)) + "\n")


# -- splits ----------------------------------------------------------------


def stratified_kfold_split(dataset: Dataset, k: int, seed: int,
                           fold_index: int = 0) -> dict[str, str]:
    """Assign each record to train/val/test via stratified k-fold.

    Records are shuffled per class with the given seed and dealt
    round-robin into k folds, so per-fold class proportions match the
    global proportions to within one record per class. Fold
    ``fold_index`` is the test set, fold ``(fold_index + 1) % k`` the
    validation set, and all remaining folds form the training set.
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if not 0 <= fold_index < k:
        raise ValidationError(f"fold index {fold_index} outside [0, {k})")
    by_class: dict[int, list[str]] = {PUBLIC: [], PRIVATE: []}
    for rec in dataset.records:
        by_class[rec.label].append(rec.id)
    for label, ids in by_class.items():
        # a class smaller than k leaves some folds without it; still legal,
        # but an absent class cannot be stratified at all
        if not ids:
            raise ValidationError(f"class {label} has no records, cannot stratify")

    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xF01D)))
    assignment: dict[str, str] = {}
    val_fold = (fold_index + 1) % k
    cursor = 0  # continues across classes so fold sizes balance globally
    for label in sorted(by_class):
        ids = sorted(by_class[label])
        rng.shuffle(ids)
        for rec_id in ids:
            fold = cursor % k
            cursor += 1
            if fold == fold_index:
                assignment[rec_id] = "test"
            elif fold == val_fold:
                assignment[rec_id] = "val"
            else:
                assignment[rec_id] = "train"
    return assignment


def save_split(assignment: dict[str, str], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "split"])
        for rec_id in sorted(assignment):
            writer.writerow([rec_id, assignment[rec_id]])


def load_split(path: str) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        rows = list(reader)
    if not rows or rows[0] != ["id", "split"]:
        raise SchemaError(f"split file {path} must start with header 'id,split'")
    assignment = {}
    for row in rows[1:]:
        if len(row) != 2 or row[1] not in SPLITS:
            raise SchemaError(f"bad split row {row!r}")
        assignment[row[0]] = row[1]
    return assignment


# -- per-record feature vectors ---------------------------------------------


def cardinality_vector(record: ImageRecord, vocab: EntityVocabulary) -> np.ndarray:
    """Number of detected instances per object category (length K_o)."""
    counts = np.zeros(vocab.n_objects, dtype=np.float64)
    for det in record.detections:
        counts[det.category] += 1.0
    return counts


def confidence_vector(record: ImageRecord, vocab: EntityVocabulary) -> np.ndarray:
    """Maximum detection confidence per object category, 0 where absent."""
    conf = np.zeros(vocab.n_objects, dtype=np.float64)
    for det in record.detections:
        conf[det.category] = max(conf[det.category], det.confidence)
    return conf


# -- z-score normalization ---------------------------------------------------


@dataclass(frozen=True)
class NormalizationStats:
    mean: np.ndarray
    std: np.ndarray
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise ValidationError("mean/std length mismatch")
        if np.any(self.std < 0):
            raise ValidationError("negative standard deviation")

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "epsilon": self.epsilon}

    @staticmethod
    def from_json(raw: dict) -> "NormalizationStats":
        return NormalizationStats(np.asarray(raw["mean"], dtype=np.float64),
                                  np.asarray(raw["std"], dtype=np.float64),
                                  float(raw["epsilon"]))


def fit_normalization(vectors: Iterable[np.ndarray], epsilon: float = 1e-8) -> NormalizationStats:
    """Fit z-score statistics; call with training-split vectors only."""
    matrix = np.stack(list(vectors))
    if matrix.shape[0] == 0:
        raise ValidationError("cannot fit normalization on an empty training split")
    return NormalizationStats(matrix.mean(axis=0), matrix.std(axis=0), epsilon)


def apply_normalization(vector: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    return (vector - stats.mean) / (stats.std + stats.epsilon)


def invert_normalization(vector: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    return vector * (stats.std + stats.epsilon) + stats.mean


# -- dataset summaries --------------------------------------------------------


def cooccurrence_histogram(dataset: Dataset, split: str | None = None
                           ) -> dict[int, dict[int, int]]:
    """Images binned by how many distinct object categories they contain.

    Returns ``{bin: {label: count}}`` with bins 0..max observed distinct
    count. Within a bin the two label counts describe the stacked bar of
    the per-bin class share.
    """
    records: Sequence[ImageRecord]
    records = dataset.subset(split) if split is not None else dataset.records
    hist: dict[int, dict[int, int]] = {}
    for rec in records:
        n = len(rec.distinct_categories())
        hist.setdefault(n, {PUBLIC: 0, PRIVATE: 0})[rec.label] += 1
    if hist:
        for n in range(max(hist)):
            hist.setdefault(n, {PUBLIC: 0, PRIVATE: 0})
    return dict(sorted(hist.items()))


def histogram_percentages(hist: dict[int, dict[int, int]]) -> dict[int, dict[int, float]]:
    """Per-bin class shares in percent; the two shares sum to 100 per bin."""
    out = {}
    for n, counts in hist.items():
        total = counts[PUBLIC] + counts[PRIVATE]
        if total == 0:
            out[n] = {PUBLIC: 0.0, PRIVATE: 0.0}
        else:
            out[n] = {PUBLIC: 100.0 * counts[PUBLIC] / total,
                      PRIVATE: 100.0 * counts[PRIVATE] / total}
    return out


def share_with_at_most(dataset: Dataset, split: str, max_distinct: int = 1) -> float:
    """Fraction (in percent) of split images with <= max_distinct categories."""
    records = dataset.subset(split)
    if not records:
        raise ValidationError(f"split {split!r} is empty")
    hits = sum(1 for r in records if len(r.distinct_categories()) <= max_distinct)
    return 100.0 * hits / len(records)
