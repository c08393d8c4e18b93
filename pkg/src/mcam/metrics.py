"""Partition agreement, silhouette-based k selection and block-model RMSE."""
import json
from dataclasses import dataclass

import numpy as np

from .clustering import ModeClustering, spectral_clustering
from .errors import ContractError
from .tensor import as_tensor

#: NMI normaliser; reported alongside NMI values.
NMI_NORMALIZATION = "arithmetic"


def _labels(x):
    return x.labels if isinstance(x, ModeClustering) else np.asarray(x).ravel()


def contingency(labels_a, labels_b):
    a, b = _labels(labels_a), _labels(labels_b)
    if a.shape != b.shape:
        raise ContractError(f"label vectors differ in length: {a.size} vs {b.size}")
    if a.size < 2:
        raise ContractError("need at least two labelled items")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia.ravel(), ib.ravel()), 1)
    return table


def _pairs(x):
    return (x * (x - 1) // 2).sum()


def ari(labels_a, labels_b):
    """Adjusted Rand index."""
    table = contingency(labels_a, labels_b)
    n = int(table.sum())
    total = n * (n - 1) // 2
    both = int(_pairs(table))
    sa = int(_pairs(table.sum(axis=1)))
    sb = int(_pairs(table.sum(axis=0)))
    expected = sa * sb / total
    top = 0.5 * (sa + sb)
    if top == expected:
        # both partitions are all-in-one or all-singletons, hence identical
        return 1.0
    return float((both - expected) / (top - expected))


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(labels_a, labels_b):
    """Mutual information over the arithmetic mean of the two entropies."""
    table = contingency(labels_a, labels_b)
    n = table.sum()
    ra, rb = table.sum(axis=1), table.sum(axis=0)
    ha, hb = _entropy(ra, n), _entropy(rb, n)
    if ha == 0 and hb == 0:
        return 1.0
    if ha == 0 or hb == 0:
        return 0.0
    nz = table > 0
    outer = np.outer(ra, rb)[nz]
    pij = table[nz] / n
    mi = float((pij * (np.log(table[nz]) + np.log(n) - np.log(outer))).sum())
    return float(np.clip(mi / (0.5 * (ha + hb)), 0.0, 1.0))


def silhouette_samples(dissimilarity, labels):
    """Per-item silhouette; items in singleton clusters score 0."""
    d = np.asarray(dissimilarity, dtype=np.float64)
    labels = _labels(labels)
    ids, inv = np.unique(labels, return_inverse=True)
    inv = inv.ravel()
    onehot = np.eye(ids.size)[inv]
    sizes = onehot.sum(axis=0)
    d = d.copy()
    np.fill_diagonal(d, 0.0)
    sums = d @ onehot
    own = sizes[inv]
    out = np.zeros(labels.size)
    if ids.size < 2:
        return out
    rows = np.arange(labels.size)
    a = sums[rows, inv] / np.maximum(own - 1, 1)
    mean_other = sums / sizes
    mean_other[rows, inv] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    ok = (own > 1) & (denom > 0)
    out[ok] = (b[ok] - a[ok]) / denom[ok]
    return out


def silhouette_select_k(affinity, k_range, seed=0):
    """Pick the cluster count with the best mean silhouette under ``1 - C'``.

    Returns ``(best_k, scores)`` with ``scores`` mapping each k to its mean
    silhouette. Ties go to the smaller k.
    """
    m = affinity.size
    ks = sorted(int(k) for k in k_range)
    if not ks:
        raise ContractError("empty k range")
    if ks[0] < 2 or ks[-1] >= m:
        raise ContractError(f"every k must satisfy 2 <= k < {m}")
    dis = 1.0 - affinity.values
    scores = {}
    for k in ks:
        labels = spectral_clustering(affinity, k, seed).labels
        scores[k] = float(silhouette_samples(dis, labels).mean())
    best = max(ks, key=lambda k: (scores[k], -k))
    return best, scores


@dataclass(frozen=True)
class MultiwayClustering:
    modes: tuple

    def __post_init__(self):
        if len(self.modes) != 3:
            raise ContractError("a multiway clustering has exactly three modes")

    @property
    def labels(self):
        return tuple(_labels(m) for m in self.modes)

    @property
    def shape(self):
        return tuple(len(lab) for lab in self.labels)


@dataclass(frozen=True)
class BlockModel:
    """Block means of a tensor under a multiway partition.

    ``labels[n]`` are compact (0..K_n-1) ids and ``counts`` holds the number
    of cells in each block; empty blocks have count 0 and mean NaN.
    """

    means: np.ndarray
    counts: np.ndarray
    labels: tuple

    def expand(self):
        l1, l2, l3 = self.labels
        return self.means[np.ix_(l1, l2, l3)]


def _block_sum(x, onehots):
    for n, h in enumerate(onehots):
        x = np.moveaxis(np.tensordot(h.T, x, axes=(1, n)), 0, n)
    return x


def block_model(t, clustering):
    t = as_tensor(t)
    raw = clustering.labels if isinstance(clustering, MultiwayClustering) else clustering
    if len(raw) != 3:
        raise ContractError("need one label vector per mode")
    labels, onehots, firsts = [], [], []
    for n, lab in enumerate(raw):
        lab = _labels(lab)
        if lab.size != t.shape[n]:
            raise ContractError(f"mode-{n + 1} labels cover {lab.size} of {t.shape[n]} indices")
        ids, first, inv = np.unique(lab, return_index=True, return_inverse=True)
        labels.append(inv.ravel())
        onehots.append(np.eye(ids.size)[inv.ravel()])
        firsts.append(first)
    l1, l2, l3 = labels
    counts = _block_sum(np.ones(t.shape), onehots)
    # shift by one cell per block so constant blocks give an exact zero spread
    ref = t[np.ix_(*firsts)]
    shifted = t - ref[np.ix_(l1, l2, l3)]
    with np.errstate(invalid="ignore", divide="ignore"):
        offset = _block_sum(shifted, onehots) / counts
    means = ref + offset
    return BlockModel(means, counts, tuple(labels))


def block_rmse(t, clustering):
    """Unweighted mean over non-empty blocks of each block's RMSE.

    Returns ``(mean_rmse, per_block)`` where ``per_block`` is a K1 x K2 x K3
    array with NaN for empty blocks.
    """
    t = as_tensor(t)
    model = block_model(t, clustering)
    onehots = [np.eye(model.means.shape[n])[lab] for n, lab in enumerate(model.labels)]
    dev = t - model.expand()
    sq = _block_sum(dev * dev, onehots)
    nonempty = model.counts > 0
    per_block = np.full(model.means.shape, np.nan)
    per_block[nonempty] = np.sqrt(sq[nonempty] / model.counts[nonempty])
    return float(per_block[nonempty].mean()), per_block


def count_signal_clusters(labels, signal_mask):
    """Number of distinct clusters that contain at least one signal index."""
    labels = _labels(labels)
    return int(np.unique(labels[np.asarray(signal_mask, dtype=bool)]).size)


def metric_record(metric, mode, value, **params):
    return {"metric": metric, "mode": mode, "value": float(value), "params": params}


def dump_records(records, path):
    with open(path, "w") as fh:
        json.dump(records, fh, indent=2, sort_keys=True)
        fh.write("\n")
