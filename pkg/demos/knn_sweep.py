"""
KNN accuracy versus number of PCA components
============================================

One PCA fit and one neighbor search per component count; every k in the
sweep reuses the same sorted neighbor list.
"""

import numpy as np

from cifar_ensemble import neighbors, pca
from cifar_ensemble.evaluation import accuracy
from _data import load

train, test = load()
ks = (1, 3, 5, 10, 20)
model = pca.pca_fit(train.features, 200)


def sweep(Xtr, Xte):
    knn = neighbors.knn_fit(Xtr, train.labels, k=max(ks))
    idx, dist = neighbors.kneighbors(knn, Xte)
    out = {}
    for k in ks:
        s = neighbors.scores_from_neighbors(train.labels[idx[:, :k]], dist[:, :k])
        out[k] = accuracy(np.argmax(s, axis=1), test.labels)
    return out


print("components  " + "  ".join(f"k={k:<3d}" for k in ks))
raw = sweep(train.features, test.features)
print(f"{'raw':>10}  " + "  ".join(f"{raw[k]:.3f}" for k in ks))
for c in (200, 75, 50, 40, 30, 25, 15, 10):
    m = model.truncate(c)
    acc = sweep(pca.pca_transform(m, train.features), pca.pca_transform(m, test.features))
    print(f"{c:>10}  " + "  ".join(f"{acc[k]:.3f}" for k in ks))

# the nearest-centroid reading of the method, for comparison
m30 = model.truncate(30)
cent = neighbors.centroid_fit(pca.pca_transform(m30, train.features), train.labels)
pred = neighbors.centroid_predict(cent, pca.pca_transform(m30, test.features))
print(f"nearest centroid on 30 components: {accuracy(pred, test.labels):.3f}")
