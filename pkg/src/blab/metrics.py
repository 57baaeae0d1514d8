"""Quantitative instruments: inter-class distance, global-difference estimate, generalization gap."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import ProjectorOptions, project_dataset
from .data import Dataset
from .nn import MlpNetwork, accuracy


@dataclass
class GlobalDifferenceEstimate:
    alphas: np.ndarray
    phi: float
    aligned_count: int
    misaligned_count: int
    cosine_threshold: float


def nearest_opposite_mean_distance(data: Dataset) -> float:
    """Mean over samples of the Euclidean distance to the closest
    opposite-class sample; exhaustive over all pairs."""
    if not data.both_classes_present():
        raise ValueError("both classes must be present")
    x0 = data.samples[data.labels == 0]
    x1 = data.samples[data.labels == 1]
    d2 = ((x0[:, None, :] - x1[None, :, :]) ** 2).sum(axis=2)
    d = np.sqrt(np.maximum(d2, 0.0))
    return float((d.min(axis=1).sum() + d.min(axis=0).sum()) / len(data))


def estimate_global_difference(f_net: MlpNetwork, original: Dataset, projected: Dataset,
                               g_net: MlpNetwork, cosine_threshold: float = 0.95,
                               opts: ProjectorOptions | None = None,
                               f_results=None) -> GlobalDifferenceEstimate:
    """Heuristic global-difference estimate against one concrete re-separator g.

    g_net must correctly classify the projected set. Each projected sample is
    re-projected onto g's boundary; when that vector is near-collinear with
    f's original projection vector (cosine >= threshold) the sample
    contributes alpha = clamp(|g vector| / |f vector|, 0, 1), otherwise 0.
    phi = s - sum(alpha). This is a lower-bound-style stand-in for the exact
    maximization over all separators of the projected set, which is
    intractable; pass f_results to reuse projections already computed.
    """
    if not 0 < cosine_threshold <= 1:
        raise ValueError("cosine_threshold must be in (0, 1]")
    if accuracy(g_net, projected) < 1.0:
        raise ValueError("g misclassifies the projected set; it is not a separator of it")
    opts = opts or ProjectorOptions()
    if f_results is None:
        _, f_results = project_dataset(f_net, original, opts)
    _, g_results = project_dataset(g_net, projected, opts)

    s = len(original)
    alphas = np.zeros(s)
    aligned = 0
    for i in range(s):
        fv, gv = f_results[i].vector, g_results[i].vector
        fn, gn = np.linalg.norm(fv), np.linalg.norm(gv)
        if fn == 0.0:
            continue
        cos = float(fv @ gv / (fn * gn)) if gn > 0 else 1.0
        if cos >= cosine_threshold:
            alphas[i] = min(max(gn / fn, 0.0), 1.0)
            aligned += 1
    return GlobalDifferenceEstimate(alphas, float(s - alphas.sum()), aligned,
                                    s - aligned, cosine_threshold)


def generalization_gap(net: MlpNetwork, train: Dataset, test: Dataset) -> tuple[float, float, float]:
    train_acc = accuracy(net, train)
    test_acc = accuracy(net, test)
    return train_acc, test_acc, train_acc - test_acc
