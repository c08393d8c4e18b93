"""Decomposition + k-means reference pipelines (CP and Tucker)."""
from dataclasses import dataclass, field

import numpy as np

from .clustering import ModeClustering, kmeans, relabel
from .errors import ContractError
from .tensor import as_tensor, check_mode

RIDGE = 1e-12


def unfold(t, mode):
    """Mode-``mode`` matricisation: rows indexed by that mode."""
    check_mode(mode)
    return np.moveaxis(t, mode - 1, 0).reshape(t.shape[mode - 1], -1)


def mode_product(t, matrix, mode):
    """Multiply ``t`` along ``mode`` by ``matrix`` (rows become the new mode size)."""
    out = np.tensordot(matrix, t, axes=(1, mode - 1))
    return np.moveaxis(out, 0, mode - 1)


@dataclass
class CPModel:
    weights: np.ndarray
    factors: list
    fit: float = 0.0
    history: list = field(default_factory=list)

    @property
    def rank(self):
        return self.weights.size

    def reconstruct(self):
        a, b, c = self.factors
        shape = (a.shape[0], b.shape[0], c.shape[0])
        return ((a * self.weights) @ khatri_rao(b, c).T).reshape(shape)


@dataclass
class TuckerModel:
    core: np.ndarray
    factors: list
    history: list = field(default_factory=list)

    def reconstruct(self):
        t = self.core
        for mode, u in enumerate(self.factors, start=1):
            t = mode_product(t, u, mode)
        return t


def khatri_rao(b, c):
    """Column-wise Kronecker product; row ``i*len(c) + j`` holds ``b[i] * c[j]``."""
    return (b[:, None, :] * c[None, :, :]).reshape(-1, b.shape[1])


def _mttkrp(t, factors, mode):
    others = [f for n, f in enumerate(factors, start=1) if n != mode]
    return unfold(t, mode) @ khatri_rao(*others)


def cp_als(t, d, max_iters=100, seed=0, tol=1e-8):
    """Rank-``d`` CP decomposition by alternating least squares.

    Factors start from a seeded standard normal draw with unit columns. The
    fit ``1 - ||t - model|| / ||t||`` is recorded after every sweep.
    """
    t = as_tensor(t)
    if not 1 <= d <= min(t.shape):
        raise ContractError(f"rank d must lie in [1, {min(t.shape)}], got {d}")
    rng = np.random.default_rng(seed)
    factors = []
    for m in t.shape:
        f = rng.standard_normal((m, d))
        factors.append(f / np.linalg.norm(f, axis=0))
    norm_t = np.linalg.norm(t)
    if norm_t == 0:
        return CPModel(np.zeros(d), factors, 1.0, [1.0])

    weights = np.ones(d)
    history = []
    for _ in range(max_iters):
        for n in range(3):
            others = [factors[i] for i in range(3) if i != n]
            gram = (others[0].T @ others[0]) * (others[1].T @ others[1])
            m = _mttkrp(t, factors, n + 1)
            f = np.linalg.solve(gram + RIDGE * np.eye(d), m.T).T
            weights = np.linalg.norm(f, axis=0)
            factors[n] = f / np.where(weights > 0, weights, 1.0)
        model = CPModel(weights, factors)
        fit = 1.0 - np.linalg.norm(t - model.reconstruct()) / norm_t
        history.append(fit)
        if len(history) > 1 and abs(history[-1] - history[-2]) < tol:
            break
    return CPModel(weights, factors, history[-1], history)


def _leading_left(mat, r):
    # a projected unfolding can have fewer columns than r; complete the basis
    u, _, _ = np.linalg.svd(mat, full_matrices=mat.shape[1] < r)
    u = u[:, :r]
    pivot = u[np.argmax(np.abs(u), axis=0), np.arange(r)]
    return u * np.where(pivot < 0, -1.0, 1.0)


def hooi(t, ranks, max_iters=50, seed=0, tol=1e-10):
    """Tucker decomposition: HOSVD start, then higher-order orthogonal iteration.

    ``seed`` is accepted for interface symmetry with :func:`cp_als`; the
    HOSVD start makes the result deterministic.
    """
    t = as_tensor(t)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != 3 or any(not 1 <= r <= m for r, m in zip(ranks, t.shape)):
        raise ContractError(f"ranks {ranks} must satisfy 1 <= r_k <= m_k for dims {t.shape}")
    factors = [_leading_left(unfold(t, n), r) for n, r in zip((1, 2, 3), ranks)]
    history = []
    for _ in range(max_iters):
        for n in (1, 2, 3):
            y = t
            for k in (1, 2, 3):
                if k != n:
                    y = mode_product(y, factors[k - 1].T, k)
            factors[n - 1] = _leading_left(unfold(y, n), ranks[n - 1])
        core = mode_product(y, factors[2].T, 3)
        history.append(float(np.linalg.norm(core)))
        if len(history) > 1 and history[-1] - history[-2] <= tol * max(history[-1], 1e-300):
            break
    if not history:
        core = t
        for k in (1, 2, 3):
            core = mode_product(core, factors[k - 1].T, k)
    return TuckerModel(core, factors, history)


def factor_clustering(model, mode, k, seed=0):
    """k-means over the rows of the fitted factor matrix of ``mode``."""
    check_mode(mode)
    f = model.factors[mode - 1]
    labels = relabel(kmeans(f, k, seed))
    return ModeClustering(mode, labels, int(labels.max()) + 1)
