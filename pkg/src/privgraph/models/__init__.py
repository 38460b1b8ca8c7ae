from .spec import PRESETS, ModelSpec, get_preset, spec_from_config_text, spec_to_config_text
from .counts import ParamCountReport, count_parameters, grm_parameter_count
from .features import (init_node_features_cardinality, init_node_features_deep,
                       random_privacy_pair)
from .inputs import (fit_stats_for_spec, flat_feature_vector, prepare_inputs,
                     required_fields)
from .grm import GRM
from .nets import (FeedForwardModel, GraphAgnosticModel, GraphPrivacyModel,
                   Model, build_model, predict_labels)

__all__ = [
    "ModelSpec", "PRESETS", "get_preset", "spec_from_config_text",
    "spec_to_config_text", "ParamCountReport", "count_parameters",
    "grm_parameter_count", "init_node_features_cardinality",
    "init_node_features_deep", "random_privacy_pair", "prepare_inputs",
    "fit_stats_for_spec", "flat_feature_vector", "required_fields", "GRM",
    "Model", "FeedForwardModel", "GraphAgnosticModel", "GraphPrivacyModel",
    "build_model", "predict_labels",
]
