"""Slice covariance spectra and the effective clustering dimension.

For every slice ``S`` of a mode we form the covariance ``S.T @ S``, keep its
leading eigenpairs, and pick how many of them carry signal with a scree
(largest successive gap) rule.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericError
from .tensor import check_mode, mode_slice, mode_slices

#: Upper bound on the eigenpairs kept per slice and inspected by the scree rule.
MAX_COMPONENTS = 10


@dataclass(frozen=True)
class SliceSpectrum:
    """Leading eigenpairs of one slice covariance.

    ``eigenvectors[:, k]`` is the unit eigenvector for ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    selected_count: int


@dataclass(frozen=True)
class ModeSpectra:
    """Spectra of every slice of one mode, stored as stacked arrays.

    Attributes
    ----------
    mode : int
    eigenvalues : ndarray, shape (m, p)
        Descending eigenvalues per slice.
    eigenvectors : ndarray, shape (m, q, p)
        ``eigenvectors[i, :, k]`` pairs with ``eigenvalues[i, k]``.
    selected_counts : ndarray of int, shape (m,)
        Scree-selected component count per slice.
    """

    mode: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    selected_counts: np.ndarray

    @property
    def size(self):
        return self.eigenvalues.shape[0]

    @property
    def count(self):
        return self.eigenvalues.shape[1]

    @property
    def lambda_per_component(self):
        """Largest k-th eigenvalue across slices, for each k."""
        return self.eigenvalues.max(axis=0)

    @property
    def spectra(self):
        return [
            SliceSpectrum(self.eigenvalues[i], self.eigenvectors[i], int(self.selected_counts[i]))
            for i in range(self.size)
        ]

    def __getitem__(self, index):
        return SliceSpectrum(
            self.eigenvalues[index], self.eigenvectors[index], int(self.selected_counts[index])
        )


def slice_covariance(t, mode, index):
    s = mode_slice(t, mode, index)
    return s.T @ s


def _check_symmetric(c):
    if c.ndim < 2 or c.shape[-1] != c.shape[-2]:
        raise ContractError(f"expected square matrices, got shape {c.shape}")
    scale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
    asym = float(np.max(np.abs(c - np.swapaxes(c, -1, -2)))) if c.size else 0.0
    if asym > 1e-9 * scale:
        raise ContractError(f"matrix is not symmetric (max asymmetry {asym:.3g})")


def _eigh_top(c, count):
    """Batched top-``count`` eigenpairs of symmetric matrices ``c[..., n, n]``."""
    try:
        w, v = np.linalg.eigh(c)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolver failed: {exc}") from exc
    w = w[..., ::-1][..., :count]
    v = v[..., ::-1][..., :count]
    # deterministic sign: largest-magnitude component of each vector positive
    pivot = np.take_along_axis(v, np.argmax(np.abs(v), axis=-2)[..., None, :], axis=-2)
    v = v * np.where(pivot < 0, -1.0, 1.0)
    resid = np.linalg.norm(c @ v - v * w[..., None, :], axis=-2)
    bound = 1e-7 * (1.0 + np.abs(w).max(axis=-1, keepdims=True)) if w.size else 0.0
    if np.any(resid > bound):
        raise NumericError(f"eigenpair residual {float(resid.max()):.3g} exceeds tolerance")
    return w, v


def top_eigenpairs(c, count):
    """Largest ``count`` eigenvalues of symmetric ``c``, descending, with unit eigenvectors.

    Returns ``(eigenvalues, eigenvectors)`` where column ``k`` of the second
    array is the eigenvector of ``eigenvalues[k]``.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2:
        raise ContractError(f"expected a matrix, got shape {c.shape}")
    _check_symmetric(c)
    if not 1 <= count <= c.shape[0]:
        raise ContractError(f"count must lie in [1, {c.shape[0]}], got {count}")
    return _eigh_top(c, count)


def select_components(eigenvalues):
    """Scree rule: position of the largest drop among the first ten eigenvalues."""
    ev = np.asarray(eigenvalues, dtype=np.float64).ravel()
    if ev.size == 0:
        raise ContractError("eigenvalue list is empty")
    ev = ev[:MAX_COMPONENTS]
    if ev.size == 1:
        return 1
    gaps = ev[:-1] - ev[1:]
    if not np.any(gaps > 0):
        return 1
    return int(np.argmax(gaps)) + 1


def _chunk_spectra(stack, count):
    cov = np.einsum("iab,iac->ibc", stack, stack)
    # exact symmetry; einsum may round the two triangles differently
    cov = 0.5 * (cov + np.swapaxes(cov, 1, 2))
    w, v = _eigh_top(cov, count)
    eps = 1e-9 * np.abs(w).max(axis=1, keepdims=True)
    if np.any(w < -eps):
        raise NumericError("covariance has a significantly negative eigenvalue")
    # round-off below the tolerance is an exact zero for a PSD covariance
    return np.where(w <= eps, 0.0, w), v


def mode_spectra(t, mode, count=None, workers=None):
    """Eigen-decompose every slice covariance of ``mode``.

    ``count`` defaults to ``min(10, covariance size)``. With ``workers > 1``
    the slices are processed in chunks on a thread pool; the result does not
    depend on the number of workers.
    """
    check_mode(mode)
    stack = np.asarray(mode_slices(t, mode), dtype=np.float64)
    m, _, q = stack.shape
    if count is None:
        count = min(MAX_COMPONENTS, q)
    if not 1 <= count <= q:
        raise ContractError(f"count must lie in [1, {q}], got {count}")
    if workers is None or workers <= 1 or m < 2:
        w, v = _chunk_spectra(stack, count)
    else:
        bounds = np.linspace(0, m, min(workers, m) + 1).astype(int)
        chunks = [stack[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ch: _chunk_spectra(ch, count), chunks))
        w = np.concatenate([p[0] for p in parts])
        v = np.concatenate([p[1] for p in parts])
    selected = np.array([select_components(row) for row in w], dtype=int)
    return ModeSpectra(mode, w, v, selected)


def effective_dimension(spectra):
    """r = the largest scree-selected count over the slices of a mode."""
    if spectra.size < 1:
        raise ContractError("no slices")
    return int(spectra.selected_counts.max())
