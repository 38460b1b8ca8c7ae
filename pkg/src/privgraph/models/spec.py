"""Declarative model configuration and the named presets.

A :class:`ModelSpec` pins every architectural choice so that each ablation
row of the experiment grids is expressible as a named preset. Specs
serialize to a flat ``key = value`` text format whose unknown keys are
hard errors, which keeps experiment manifests diff-able.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from ..errors import ConfigError

KINDS = ("s2p", "s2p_mlp1", "s2p_mlp2", "mlp", "mlp_i", "gamlp", "gpa", "gip",
         "baseline")
FEATURE_SCHEMES = ("cardinality", "deep")
GRAPH_MODES = ("bipartite", "objects-binary", "combined", "zero")
PRIVACY_SOURCES = ("scene_layer", "deep_projection", "zeros", "random")
S2P_MODES = ("joint", "pretrained", "none")
BASELINE_RULES = ("all_public", "all_private", "random", "pcs2", "pcs3")

N_SCENE_LOGITS = 365


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    # graph-model knobs
    feature_scheme: str = "cardinality"
    graph_mode: str = "bipartite"
    node_type_flag: bool = True
    reshape_layer: bool = True
    privacy_source: str = "scene_layer"
    s2p_mode: str = "joint"
    ggnn_steps: int = 3
    ggnn_output_channels: int = 2
    classifier_hidden: int = 2
    deep_dim: int = 4096
    # mlp / ga-mlp knobs
    mlp_depth: int = 3
    mlp_width: int = 16
    use_confidence: bool = False
    use_batchnorm: bool = False
    input_transform: bool = False
    normalize_features: bool = False
    weighted_loss: bool = False
    pixel_dim: int = 12288
    dropout_p: float = 0.0
    baseline_rule: str | None = None

    def __post_init__(self):
        checks = [
            (self.kind in KINDS, f"unknown model kind {self.kind!r}"),
            (self.feature_scheme in FEATURE_SCHEMES,
             f"unknown feature scheme {self.feature_scheme!r}"),
            (self.graph_mode in GRAPH_MODES, f"unknown graph mode {self.graph_mode!r}"),
            (self.privacy_source in PRIVACY_SOURCES,
             f"unknown privacy feature source {self.privacy_source!r}"),
            (self.s2p_mode in S2P_MODES, f"unknown s2p mode {self.s2p_mode!r}"),
            (0.0 <= self.dropout_p < 1.0, f"dropout {self.dropout_p} outside [0, 1)"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        if self.kind == "baseline" and self.baseline_rule not in BASELINE_RULES:
            raise ConfigError(f"baseline needs a rule from {BASELINE_RULES}")
        if self.privacy_source in ("zeros", "random") and self.s2p_mode != "none":
            raise ConfigError("zero/random privacy features exclude a scene-to-privacy layer")

    # node feature width consumed by the gated graph network
    @property
    def node_feature_dim(self) -> int:
        if self.feature_scheme == "cardinality":
            return 1 + (1 if self.node_type_flag else 0)
        return self.deep_dim + (2 if self.node_type_flag else 0)

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(raw: dict) -> "ModelSpec":
        unknown = set(raw) - set(ModelSpec.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown model spec keys {sorted(unknown)}")
        return ModelSpec(**raw)


_FIELD_TYPES = {name: f.type for name, f in ModelSpec.__dataclass_fields__.items()}


def _parse_value(key: str, text: str):
    kind = _FIELD_TYPES[key]
    text = text.strip()
    if text == "none":
        return None
    if kind == "bool":
        if text not in ("true", "false"):
            raise ConfigError(f"{key}: expected true/false, got {text!r}")
        return text == "true"
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text


def spec_to_config_text(spec: ModelSpec) -> str:
    lines = []
    for key, value in asdict(spec).items():
        if value is None:
            value = "none"
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def spec_from_config_text(text: str, overrides: dict[str, str] | None = None) -> ModelSpec:
    values: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {line_no}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"config line {line_no}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    for key, raw in (overrides or {}).items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config override {key!r}")
        values[key] = _parse_value(key, raw)
    if "kind" not in values:
        raise ConfigError("config must set 'kind'")
    return ModelSpec(**values)


# -- presets -----------------------------------------------------------------

_BASE_GPA = ModelSpec(kind="gpa", feature_scheme="cardinality",
                      ggnn_output_channels=2, classifier_hidden=2)

PRESETS: dict[str, ModelSpec] = {
    # scene-to-privacy transfer heads
    "s2p": ModelSpec(kind="s2p"),
    "s2p-mlp1": ModelSpec(kind="s2p_mlp1"),
    "s2p-mlp2": ModelSpec(kind="s2p_mlp2"),
    # object-cardinality baselines; the mlp preset standardizes its inputs
    "mlp": ModelSpec(kind="mlp", normalize_features=True),
    "mlp-i": ModelSpec(kind="mlp_i"),
    "gamlp": ModelSpec(kind="gamlp", use_batchnorm=True),
    "gamlp-nobn": ModelSpec(kind="gamlp", use_batchnorm=False),
    # graph models over the prior graph
    "gpa": _BASE_GPA,
    "gpa-original": replace(_BASE_GPA, graph_mode="objects-binary"),
    "gpa-bipartite": replace(_BASE_GPA, s2p_mode="pretrained"),
    "gpa-no-flag": replace(_BASE_GPA, s2p_mode="pretrained", node_type_flag=False),
    "gpa-no-reshape": replace(_BASE_GPA, node_type_flag=False, reshape_layer=False),
    "gpa-zeros": replace(_BASE_GPA, node_type_flag=False, reshape_layer=False,
                         privacy_source="zeros", s2p_mode="none"),
    "gpa-random": replace(_BASE_GPA, node_type_flag=False, reshape_layer=False,
                          privacy_source="random", s2p_mode="none"),
    "gpa-ablated": replace(_BASE_GPA, graph_mode="zero"),
    # deep-feature graph models; desk variants keep tests tractable
    "gip": ModelSpec(kind="gip", feature_scheme="deep", graph_mode="bipartite",
                     privacy_source="deep_projection", reshape_layer=False,
                     deep_dim=4096, ggnn_output_channels=512,
                     classifier_hidden=4096),
    "gip-zeros": ModelSpec(kind="gip", feature_scheme="deep", graph_mode="bipartite",
                           privacy_source="zeros", s2p_mode="none",
                           reshape_layer=False, deep_dim=4096,
                           ggnn_output_channels=512, classifier_hidden=4096),
    "gip-no-type": ModelSpec(kind="gip", feature_scheme="deep", graph_mode="bipartite",
                             privacy_source="zeros", s2p_mode="none",
                             node_type_flag=False, reshape_layer=False,
                             deep_dim=4096, ggnn_output_channels=512,
                             classifier_hidden=4096),
    "gip-desk": ModelSpec(kind="gip", feature_scheme="deep", graph_mode="bipartite",
                          privacy_source="deep_projection", reshape_layer=False,
                          deep_dim=8, ggnn_output_channels=4, classifier_hidden=8),
    # rule-based and degenerate references
    "pcs2": ModelSpec(kind="baseline", baseline_rule="pcs2"),
    "pcs3": ModelSpec(kind="baseline", baseline_rule="pcs3"),
    "all-public": ModelSpec(kind="baseline", baseline_rule="all_public"),
    "all-private": ModelSpec(kind="baseline", baseline_rule="all_private"),
    "random-baseline": ModelSpec(kind="baseline", baseline_rule="random"),
}


def get_preset(name: str) -> ModelSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
