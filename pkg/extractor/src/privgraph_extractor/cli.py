"""`privgraph-extract`: image corpus -> feature file."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ExtractionConfig
from .perception import StubPerception, TorchvisionPerception
from .pipeline import export_jsonl, read_manifest
from .vocab import load_vocabulary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privgraph-extract",
        description="Run perception models over an image corpus and emit a "
                    "privgraph/1 feature file.")
    parser.add_argument("--images", required=True, help="directory of images")
    parser.add_argument("--labels", required=True,
                        help="CSV with id,label[,split[,file]] rows")
    parser.add_argument("--out", required=True, help="output feats.jsonl")
    parser.add_argument("--vocab", required=True, help="vocabulary JSON")
    parser.add_argument("--backend", choices=["stub", "torchvision"],
                        default="stub")
    parser.add_argument("--scene-weights", help="365-way scene model weights")
    parser.add_argument("--detector-weights", help="COCO detector weights")
    parser.add_argument("--pixels", action="store_true",
                        help="also export the flattened pixel vector")
    parser.add_argument("--deep-features", action="store_true",
                        help="also export per-category deep feature vectors")
    parser.add_argument("--deep-dim", type=int, default=None)
    parser.add_argument("--confidence-floor", type=float, default=0.6)
    parser.add_argument("--nms-threshold", type=float, default=0.4)
    parser.add_argument("--max-instances", type=int, default=50)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        vocab = load_vocabulary(args.vocab)
        config = ExtractionConfig(
            detector_id=args.backend, scene_model_id=args.backend,
            max_instances=args.max_instances,
            confidence_floor=args.confidence_floor,
            nms_threshold=args.nms_threshold)
        if args.backend == "stub":
            backend = StubPerception(config, n_objects=vocab.n_objects,
                                     n_scenes=len(vocab.scene_names))
        else:
            if not args.scene_weights:
                raise ValueError("--scene-weights is required for the "
                                 "torchvision backend")
            backend = TorchvisionPerception(config, args.scene_weights,
                                            args.detector_weights)
        entries = read_manifest(args.images, args.labels)
        result = export_jsonl(entries, args.out, vocab, backend, config,
                              with_pixels=args.pixels,
                              with_deep=args.deep_features,
                              deep_dim=args.deep_dim)
    except (ValueError, FileNotFoundError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {result['written']} records to {args.out}"
          + (f"; skipped {len(result['skipped'])} unreadable"
             if result["skipped"] else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
