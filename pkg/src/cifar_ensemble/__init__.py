"""CIFAR-10 baselines (PCA, KNN, softmax regression) and weighted expert fusion."""

from .dataset_io import Dataset, SplitSpec, concat, load_cifar10, load_cifar_batch, stratified_split
from .ensemble import EnsembleWeights, WeightGrid, argmax_labels, chained_search, fuse, pairwise_search
from .evaluation import accuracy, confusion, per_class_accuracy
from .experts_io import ProbMatrix, export_expert, load_expert
from .linear import LogRegHyper, LogRegModel, logreg_predict_scores, logreg_train
from .neighbors import KnnModel, knn_fit, knn_predict, knn_predict_scores
from .pca import PcaModel, explained_variance_fraction, pca_fit, pca_inverse, pca_transform
from .preprocess import AugmentConfig, ZcaModel, augment, gcn, zca_apply, zca_fit

__version__ = "0.1.0"
