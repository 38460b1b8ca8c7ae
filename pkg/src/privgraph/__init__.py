"""privgraph: image-privacy classifiers over pre-extracted visual entities."""

__version__ = "0.1.0"

from . import feature_store, harness, models, numcore, prior_graph

__all__ = ["feature_store", "prior_graph", "numcore", "models", "harness",
           "__version__"]
