"""
Chained weight search over several experts
==========================================

Four correlated CNN-like experts share a block of cat/dog/horse mistakes.
Adding a weak but differently-wrong KNN expert still helps the fusion.
"""

import numpy as np

from cifar_ensemble.dataset_io import stratified_split
from cifar_ensemble.ensemble import WeightGrid, argmax_labels, chained_search, fuse
from cifar_ensemble.evaluation import accuracy, confusion
from cifar_ensemble.synthetic import fusion_fixture

y, cnns, knn = fusion_fixture()
for e in cnns + [knn]:
    print(f"{e.expert_name:>5}: {accuracy(argmax_labels(e), y):.3f}")

# weights are searched on one half and reported on the other
split = stratified_split(y, 0.5, seed=0)
val, rep = split.validation_indices, split.train_indices


def rows(experts, idx):
    return [e.scores[idx] for e in experts]


grid = WeightGrid(0.05, 1.0)
for name, experts in (("4 CNNs", cnns), ("4 CNNs + KNN", cnns + [knn])):
    res = chained_search(rows(experts, val), y[val], grid)
    pred = argmax_labels(fuse(rows(experts, rep), res.weights))
    print(f"{name:>13}: steps {res.steps}")
    print(f"{'':>13}  validation {res.achieved_accuracy:.3f}, held-out {accuracy(pred, y[rep]):.3f}")

# where the gain comes from: the cat/dog confusions
res = chained_search(cnns + [knn], y, grid)
cm = confusion(argmax_labels(fuse(cnns + [knn], res.weights)), y).counts
base = confusion(argmax_labels(cnns[0]), y).counts
print("cat->dog errors, cnn1 alone vs fused:", base[3, 5], cm[3, 5])
print("dog->cat errors, cnn1 alone vs fused:", base[5, 3], cm[5, 3])
print("flat weights:", np.round(res.weights, 6))
