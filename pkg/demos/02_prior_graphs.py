"""Prior graphs: object frequencies per class, co-occurrence, and masks.

The combined graph carries a weighted bipartite block (object, class)
plus a weighted object-object co-occurrence block; each model family
masks it down to the sub-graph it consumes.
"""

import numpy as np

from privgraph.harness import make_synthetic_dataset
from privgraph.prior_graph import (build_combined_graph, mask_and_binarise,
                                   split_directional)

dataset = make_synthetic_dataset(n_train=400, n_val=0, n_test=0, seed=789)
vocab = dataset.vocabulary
train = dataset.subset("train")
combined = build_combined_graph(train, vocab)
k_o = vocab.n_objects

print("strongest object-class frequencies:")
for y, name in ((0, "public"), (1, "private")):
    column = combined.adjacency[:k_o, k_o + y]
    for v in np.argsort(column)[::-1][:4]:
        if column[v] > 0:
            print(f"  P({vocab.object_names[v]!r} in a {name} image) = {column[v]:.2f}")

bipartite = mask_and_binarise(combined, "gip-bipartite")
objects = mask_and_binarise(combined, "gpa-objects")
print(f"\nbipartite mask keeps {int((bipartite.adjacency != 0).sum())} weighted entries")
print(f"object mask keeps {int(objects.adjacency.sum()):.0f} binary edges")

pairs = np.argwhere(np.triu(objects.adjacency[:k_o, :k_o]))
print("co-occurring category pairs:",
      ", ".join(f"{vocab.object_names[i]}+{vocab.object_names[j]}"
                for i, j in pairs[:6]))

directional = split_directional(bipartite)
print("\nsymmetric graph, so the directional halves coincide:",
      np.array_equal(directional.outgoing, directional.incoming))
