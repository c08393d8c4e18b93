"""Per-mode slice affinity matrices.

Each slice ``i`` contributes scaled eigenvectors ``x_k(i) = (lam_k(i) / lam) w_k(i)``
where ``lam`` is the largest top eigenvalue over the slices of the mode.
Component matrices hold ``|<x_k(i), x_k'(j)>|``; the two variants combine
them with and without the cross terms ``k != k'``.
"""
import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateInputError, FormatError

# Row-block size for the Gram products. Fixed so that the result never
# depends on how many workers fill the blocks.
_ROW_BLOCK = 256


@dataclass(frozen=True)
class AffinityMatrix:
    mode: int
    values: np.ndarray

    @property
    def size(self):
        return self.values.shape[0]


def _scaled_vectors(spectra, r):
    if not 1 <= r <= spectra.count:
        raise ContractError(f"r must lie in [1, {spectra.count}], got {r}")
    lam = spectra.lambda_per_component
    if not lam[0] > 0:
        raise DegenerateInputError(f"mode-{spectra.mode}: every slice has zero energy")
    sigma = spectra.eigenvalues[:, :r] / lam[0]
    # (m, q, r) -> (q, m*r), column i*r + k holds x_k(i)
    x = spectra.eigenvectors[:, :, :r] * sigma[:, None, :]
    m, q, _ = x.shape
    return np.ascontiguousarray(x.transpose(1, 0, 2).reshape(q, m * r)), lam


def _gram_abs(v, workers=None):
    n = v.shape[1]
    starts = range(0, n, _ROW_BLOCK)

    def block(a):
        return np.abs(v[:, a:a + _ROW_BLOCK].T @ v)

    if workers and workers > 1 and n > _ROW_BLOCK:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(block, starts))
    else:
        rows = [block(a) for a in starts]
    g = np.vstack(rows)
    return 0.5 * (g + g.T)


def _mirror_upper(c):
    """Copy the upper triangle onto the lower one: one value per unordered pair."""
    return np.triu(c) + np.triu(c, 1).T


def component_blocks(spectra, r, workers=None):
    """All component matrices at once: ``out[i, k, j, l] = (C_{k+1, l+1})_{ij}``."""
    v, _ = _scaled_vectors(spectra, r)
    m = spectra.size
    return _gram_abs(v, workers).reshape(m, r, m, r)


def component_matrix(spectra, k, kp):
    """``|<x_k(i), x_kp(j)>|`` for all slice pairs; ``k`` and ``kp`` start at 1."""
    r = max(k, kp)
    if min(k, kp) < 1:
        raise ContractError("component indices start at 1")
    return component_blocks(spectra, r)[:, k - 1, :, kp - 1]


def affinity_mcam1(spectra, r, workers=None):
    """Affinity with cross terms: all ``r*r`` component matrices, normalised."""
    blocks = component_blocks(spectra, r, workers)
    lam = spectra.lambda_per_component
    scale = lam[0] ** 2 / lam[:r].sum() ** 2
    return AffinityMatrix(spectra.mode, _mirror_upper(scale * blocks.sum(axis=(1, 3))))


def affinity_mcam2(spectra, r, workers=None):
    """Affinity from the diagonal component matrices ``C_kk`` only."""
    blocks = component_blocks(spectra, r, workers)
    lam = spectra.lambda_per_component
    scale = lam[0] ** 2 / (lam[:r] ** 2).sum()
    diag = np.einsum("ikjk->ij", blocks) if r > 1 else blocks[:, 0, :, 0]
    return AffinityMatrix(spectra.mode, _mirror_upper(scale * diag))


def affinity_top(spectra):
    """Top-eigenpair similarity ``sigma_i sigma_j |<w_i, w_j>|``."""
    return AffinityMatrix(spectra.mode, _mirror_upper(component_blocks(spectra, 1)[:, 0, :, 0]))


VARIANTS = {"mcam1": affinity_mcam1, "mcam2": affinity_mcam2}


def build_affinity(spectra, r, variant="mcam1", workers=None):
    try:
        fn = VARIANTS[variant]
    except KeyError:
        raise ContractError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}") from None
    return fn(spectra, r, workers)


def save_affinity_csv(a, path):
    """Header ``mode,m``, one line with their values, then the matrix row by row."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["mode", "m"])
        out.writerow([a.mode, a.size])
        for row in a.values:
            out.writerow([repr(float(v)) for v in row])


def load_affinity_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0] != ["mode", "m"]:
        raise FormatError("missing mode,m header")
    mode, m = (int(v) for v in rows[1])
    values = np.array([[float(v) for v in row] for row in rows[2:]], dtype=np.float64)
    if values.shape != (m, m):
        raise FormatError(f"expected a {m}x{m} matrix, got {values.shape}")
    return AffinityMatrix(mode, values)
