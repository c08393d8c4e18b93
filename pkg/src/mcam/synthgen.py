"""Synthetic block tensors with known multiway clusters.

The signal is a sum of ``c`` rank-one terms ``gamma_j * u_j (x) v_j (x) w_j``
whose factor columns are normalised indicators of disjoint index sets, so
component ``j`` lights up the block ``J_j x J_j x J_j``. Optional i.i.d.
standard normal noise is added on top.
"""
import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, FormatError
from .tensor import as_tensor


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a synthetic block tensor.

    ``clusters[mode][j]`` lists the indices of cluster ``j`` along ``mode``
    (0-based mode position). Every mode carries the same number of clusters.
    """

    dims: tuple
    clusters: tuple
    gammas: tuple
    noise: bool = True
    seed: int = 0

    def __post_init__(self):
        dims = tuple(int(m) for m in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ContractError(f"dims must be three positive integers, got {self.dims}")
        if len(self.clusters) != 3:
            raise ContractError("clusters must hold one list of index sets per mode")
        clusters = tuple(tuple(tuple(int(i) for i in js) for js in mode) for mode in self.clusters)
        c = len(clusters[0])
        if c < 1 or any(len(mode) != c for mode in clusters):
            raise ContractError("every mode needs the same, positive number of clusters")
        if c > min(dims):
            raise ContractError(f"{c} clusters exceed the smallest dimension {min(dims)}")
        for mode, (m, sets) in enumerate(zip(dims, clusters), start=1):
            seen = set()
            for js in sets:
                if not js:
                    raise ContractError(f"mode-{mode} has an empty cluster")
                if any(not 0 <= i < m for i in js):
                    raise ContractError(f"mode-{mode} cluster index outside [0, {m})")
                if seen.intersection(js) or len(set(js)) != len(js):
                    raise ContractError(f"mode-{mode} cluster index sets overlap")
                seen.update(js)
        gammas = np.broadcast_to(np.asarray(self.gammas, dtype=float), (c,))
        if np.any(gammas <= 0):
            raise ContractError("component weights must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "clusters", clusters)
        object.__setattr__(self, "gammas", tuple(float(g) for g in gammas))

    @property
    def n_clusters(self):
        return len(self.clusters[0])

    @classmethod
    def blocks(cls, dims=(100, 100, 100), n_clusters=9, block_size=11, gamma=55.0,
               noise=True, seed=0):
        """Contiguous equal-size blocks starting at index 0 in every mode.

        The defaults reproduce the benchmark setup: nine blocks of eleven
        indices per mode, leaving the last index of each mode uncovered.
        """
        dims = tuple(dims)
        if n_clusters * block_size > min(dims):
            raise ContractError("blocks do not fit inside the tensor")
        sets = tuple(tuple(range(j * block_size, (j + 1) * block_size)) for j in range(n_clusters))
        return cls(dims, (sets, sets, sets), (gamma,) * n_clusters, noise, seed)

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        dims = doc.pop("dims", (100, 100, 100))
        noise = bool(doc.pop("noise", True))
        seed = int(doc.pop("seed", 0))
        gamma = doc.pop("gamma", 55.0)
        if "clusters" in doc:
            clusters = doc.pop("clusters")
        else:
            n_clusters = int(doc.pop("n_clusters", 9))
            clusters = cls.blocks(dims, n_clusters, int(doc.pop("block_size", 11))).clusters
        spec = cls(dims, clusters, gamma, noise, seed)
        if doc:
            raise ContractError(f"unknown synthetic spec keys: {sorted(doc)}")
        return spec

    def to_dict(self):
        return {
            "dims": list(self.dims),
            "clusters": [[list(js) for js in mode] for mode in self.clusters],
            "gamma": list(self.gammas),
            "noise": self.noise,
            "seed": self.seed,
        }


def load_spec(path):
    with open(path) as fh:
        return SyntheticSpec.from_dict(json.load(fh))


@dataclass(frozen=True)
class GroundTruth:
    """True per-mode labels; indices in no cluster get ``background``."""

    labels: tuple
    background: int

    def signal_mask(self, mode):
        return self.labels[mode - 1] != self.background


def factor_matrices(spec):
    """Normalised indicator factors, one ``m x c`` matrix per mode."""
    factors = []
    for m, sets in zip(spec.dims, spec.clusters):
        f = np.zeros((m, spec.n_clusters))
        for j, js in enumerate(sets):
            f[list(js), j] = 1.0 / np.sqrt(len(js))
        factors.append(f)
    return factors


def signal_tensor(spec):
    a, b, c = factor_matrices(spec)
    return np.einsum("j,aj,bj,cj->abc", np.asarray(spec.gammas), a, b, c)


def generate(spec):
    """Build the tensor and its ground-truth labels.

    Returns ``(tensor, truth)``. The noise comes from
    ``numpy.random.default_rng(spec.seed)`` so a fixed seed reproduces the
    tensor bit for bit.
    """
    x = signal_tensor(spec)
    if spec.noise:
        rng = np.random.default_rng(spec.seed)
        x = x + rng.standard_normal(spec.dims)
    c = spec.n_clusters
    labels = []
    for m, sets in zip(spec.dims, spec.clusters):
        lab = np.full(m, c, dtype=int)
        for j, js in enumerate(sets):
            lab[list(js)] = j
        labels.append(lab)
    return as_tensor(x), GroundTruth(tuple(labels), c)


def save_labels_csv(labels, path):
    """Write per-mode label vectors as ``mode,index,label`` rows."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["mode", "index", "label"])
        for mode, lab in enumerate(labels, start=1):
            for i, v in enumerate(lab):
                out.writerow([mode, i, int(v)])


def load_labels_csv(path):
    rows = {1: {}, 2: {}, 3: {}}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["mode", "index", "label"]:
            raise FormatError(f"expected header mode,index,label, got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            try:
                mode, i, v = (int(x) for x in row)
            except ValueError:
                raise FormatError(f"line {lineno}: bad row {row!r}") from None
            if mode not in rows:
                raise FormatError(f"line {lineno}: mode {mode} not in 1..3")
            rows[mode][i] = v
    labels = []
    for mode in (1, 2, 3):
        entries = rows[mode]
        if sorted(entries) != list(range(len(entries))):
            raise FormatError(f"mode-{mode} indices are not 0..n-1")
        labels.append(np.array([entries[i] for i in range(len(entries))], dtype=int))
    return tuple(labels)
