"""Extraction settings pinned to the reference pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

# fixed source-domain channel statistics used for pixel normalization
CHANNEL_MEAN = (0.485, 0.456, 0.406)
CHANNEL_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class ExtractionConfig:
    detector_id: str = "stub"
    scene_model_id: str = "stub"
    max_instances: int = 50
    confidence_floor: float = 0.6
    nms_threshold: float = 0.4
    detector_input_size: int = 416
    scene_input_size: int = 448
    pixel_size: int = 64
    deep_dim: int = 4096
    weight_checksums: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, value in (("confidence_floor", self.confidence_floor),
                            ("nms_threshold", self.nms_threshold)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} {value} outside [0, 1]")

    def header_metadata(self) -> dict:
        return {
            "detector": self.detector_id,
            "scene_model": self.scene_model_id,
            "max_instances": self.max_instances,
            "confidence_floor": self.confidence_floor,
            "nms_threshold": self.nms_threshold,
            "detector_input_size": self.detector_input_size,
            "scene_input_size": self.scene_input_size,
            "pixel_size": self.pixel_size,
            "channel_mean": list(CHANNEL_MEAN),
            "channel_std": list(CHANNEL_STD),
            "weight_checksums": dict(self.weight_checksums),
        }
