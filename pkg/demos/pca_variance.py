"""
How much variance do the leading principal components carry?
=============================================================

Fit PCA on flattened 32x32x3 images and look at the spectrum.
"""

import numpy as np

from cifar_ensemble import pca
from _data import load

train, _ = load(noise=40.0)
model = pca.pca_fit(train.features, 200)

# the first handful of components dominate
for lo, hi in [(0, 1), (0, 9), (0, 50), (191, 200)]:
    r = pca.explained_variance_fraction(model, (lo, hi), "retained")
    t = pca.explained_variance_fraction(model, (lo, hi), "total")
    print(f"components [{lo:3d},{hi:3d}): {100 * r:6.2f}% of retained, {100 * t:6.2f}% of total")

# cumulative curve, printed as a crude bar chart
cum = np.cumsum(model.eigenvalues) / model.total_variance
for k in (1, 5, 10, 25, 50, 100, 200):
    print(f"K={k:3d} {'#' * int(50 * cum[k - 1]):<50} {100 * cum[k - 1]:5.1f}%")

# reconstruction error shrinks as K grows
x = train.features[:100]
for k in (10, 50, 200):
    m = model.truncate(k)
    err = np.mean((pca.pca_inverse(m, pca.pca_transform(m, x)) - x) ** 2)
    print(f"K={k:3d} mean squared reconstruction error {err:9.2f}")
