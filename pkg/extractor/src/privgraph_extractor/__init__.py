"""Feature extraction front end for the privgraph classifiers."""

__version__ = "0.1.0"

from .config import ExtractionConfig
from .perception import PerceptionBackend, RawDetection, StubPerception
from .pipeline import (export_jsonl, extract_detections, extract_scene_logits,
                       filter_detections, pixel_vector, read_manifest)
from .vocab import Vocabulary, load_vocabulary

__all__ = [
    "ExtractionConfig", "PerceptionBackend", "RawDetection", "StubPerception",
    "export_jsonl", "extract_detections", "extract_scene_logits",
    "filter_detections", "pixel_vector", "read_manifest", "Vocabulary",
    "load_vocabulary", "__version__",
]
