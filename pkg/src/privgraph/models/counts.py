"""Closed-form parameter accounting per model component.

These counts are derived from the layer shapes alone; tests cross-check
them against brute-force enumeration of instantiated parameter stores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError
from .spec import N_SCENE_LOGITS, ModelSpec


@dataclass
class ParamCountReport:
    components: dict[str, int] = field(default_factory=dict)
    frozen_during_training: tuple[str, ...] = ()

    @property
    def total_optimised(self) -> int:
        return sum(self.components.values())

    def lines(self) -> list[str]:
        width = max((len(k) for k in self.components), default=4)
        out = [f"{name:<{width}}  {count:>12,}" for name, count in self.components.items()]
        out.append(f"{'total':<{width}}  {self.total_optimised:>12,}")
        if self.frozen_during_training:
            out.append(f"frozen during the main loop: {', '.join(self.frozen_during_training)}")
        return out


def _affine(d_in: int, d_out: int, bias: bool = True) -> int:
    return d_in * d_out + (d_out if bias else 0)


def _chain(widths: list[int]) -> int:
    return sum(_affine(a, b) for a, b in zip(widths, widths[1:]))


def grm_parameter_count(state_dim: int, output_dim: int) -> dict[str, int]:
    """Gated propagation unit plus the low-rank attention head.

    The three gates each pair a map from the two-direction aggregate
    (width ``2*state``) with a map from the node state; the output layer
    reads ``[final state, initial features]``; attention projects hidden
    states to rank ``output_dim`` and scores the fused pair with one
    affine map.
    """
    s, o = state_dim, output_dim
    return {
        "gates": 3 * (_affine(2 * s, s) + _affine(s, s)),
        "output": _affine(2 * s, o),
        "attention": 2 * _affine(s, o) + _affine(o, 1),
    }


def count_parameters(spec: ModelSpec, n_objects: int = 80) -> ParamCountReport:
    k_nodes = n_objects + 2
    report = ParamCountReport()

    if spec.kind == "baseline":
        report.components = {"rules": 0}
        return report

    if spec.kind in ("s2p", "s2p_mlp1", "s2p_mlp2"):
        widths = {"s2p": [N_SCENE_LOGITS, 2],
                  "s2p_mlp1": [N_SCENE_LOGITS, N_SCENE_LOGITS // 2, 2],
                  "s2p_mlp2": [N_SCENE_LOGITS, N_SCENE_LOGITS // 2,
                               N_SCENE_LOGITS // 4, 2]}[spec.kind]
        report.components = {"head": _chain(widths)}
        return report

    if spec.kind == "mlp":
        d_in = k_nodes * (2 if spec.use_confidence else 1)
        widths = [d_in] + [spec.mlp_width] * spec.mlp_depth + [2]
        report.components["layers"] = _chain(widths)
        if spec.use_batchnorm:
            report.components["batchnorm"] = spec.mlp_depth * 2 * spec.mlp_width
        return report

    if spec.kind == "mlp_i":
        p = spec.pixel_dim
        widths = [p, p // 2, p // 4, p // 8, 2]
        report.components = {"layers": _chain(widths)}
        return report

    if spec.kind == "gamlp":
        d_node = 2 if spec.use_confidence else 1
        w = spec.mlp_width
        if spec.input_transform:
            report.components["transform"] = _affine(d_node, w)
            block_widths = [w, w, w, w]
        else:
            block_widths = [d_node, w, w, w]
        report.components["blocks"] = _chain(block_widths)
        if spec.use_batchnorm:
            report.components["batchnorm"] = 3 * 2 * k_nodes
        report.components["head"] = _chain([w, w // 2, w // 4, 2])
        return report

    if spec.kind in ("gpa", "gip"):
        s = spec.node_feature_dim
        o = spec.ggnn_output_channels
        h = (1 + n_objects) * o
        report.components["grm"] = sum(grm_parameter_count(s, o).values())
        classifier_in = h
        if spec.reshape_layer:
            report.components["reshape"] = _affine(h, n_objects + 1)
            classifier_in = n_objects + 1
        report.components["classifier"] = (_affine(classifier_in, spec.classifier_hidden)
                                           + _affine(spec.classifier_hidden, 1))
        if spec.privacy_source == "scene_layer":
            report.components["s2p"] = _affine(N_SCENE_LOGITS, 2)
        elif spec.privacy_source == "deep_projection":
            report.components["align"] = _affine(N_SCENE_LOGITS, spec.deep_dim)
        if spec.s2p_mode == "pretrained":
            frozen = "s2p" if "s2p" in report.components else "align"
            report.frozen_during_training = (frozen,)
        return report

    raise ConfigError(f"no parameter accounting for kind {spec.kind!r}")
