"""Matrix clustering engines: k-means, spectral clustering, affinity propagation."""
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DegenerateInputError


@dataclass(frozen=True)
class ModeClustering:
    """Partition of the slices of one mode.

    ``labels`` take values in ``range(n_clusters)`` and every id is used.
    ``exemplars``, ``converged`` and ``preference`` (the self-similarity
    actually used) are only meaningful for affinity propagation.
    """

    mode: int
    labels: np.ndarray
    n_clusters: int
    exemplars: tuple = None
    converged: bool = True
    iterations: int = 0
    preference: float = None

    def members(self, cluster):
        return np.flatnonzero(self.labels == cluster)


def relabel(labels):
    """Map labels onto ``0..K-1`` in order of first appearance."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse].ravel()


# --------------------------------------------------------------------------
# k-means
# --------------------------------------------------------------------------

@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    history: list = field(default_factory=list)


def _sq_dists(x, centers):
    d = (x * x).sum(1)[:, None] - 2.0 * x @ centers.T + (centers * centers).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeans_pp(x, k, rng):
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(x, x[chosen])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # every point sits on a centre already: pick an unused one
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(free))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(x, x[idx:idx + 1])[:, 0])
    return x[chosen].copy()


def _lloyd(x, centers, max_iter, tol):
    k = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iter):
        d = _sq_dists(x, centers)
        new = np.argmin(d, axis=1)
        # empty clusters take the point currently worst served
        for c in np.flatnonzero(np.bincount(new, minlength=k) == 0):
            counts = np.bincount(new, minlength=k)
            cost = d[np.arange(len(x)), new]
            cost[counts[new] <= 1] = -1.0
            new[int(np.argmax(cost))] = c
        for c in range(k):
            centers[c] = x[new == c].mean(axis=0)
        inertia = float(((x - centers[new]) ** 2).sum())
        history.append(inertia)
        stalled = labels is not None and np.array_equal(new, labels)
        labels = new
        if stalled:
            break
        if len(history) > 1 and history[-2] - inertia <= tol * history[-2]:
            break
    return labels, centers, history


def kmeans_fit(points, k, seed=0, n_init=10, max_iter=300, tol=1e-6):
    """Lloyd's algorithm with k-means++ seeding; best of ``n_init`` restarts."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n == 0:
        raise ContractError("kmeans needs at least one point")
    if not 1 <= k <= n:
        raise ContractError(f"k must lie in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        labels, centers, history = _lloyd(x, _kmeans_pp(x, k, rng), max_iter, tol)
        if best is None or history[-1] < best.inertia:
            best = KMeansResult(labels, centers, history[-1], history)
    return best


def kmeans(points, k, seed=0, **kwargs):
    return kmeans_fit(points, k, seed, **kwargs).labels


# --------------------------------------------------------------------------
# spectral clustering
# --------------------------------------------------------------------------

def _check_affinity(values):
    s = np.asarray(values, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ContractError(f"affinity must be square, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ContractError("affinity contains NaN or Inf")
    return s


def spectral_embedding(values, k):
    """Row-normalised top-k eigenvectors of ``D^-1/2 C D^-1/2``.

    These are the eigenvectors of the k smallest eigenvalues of the symmetric
    normalised Laplacian. Only rows with positive degree are embedded.
    """
    deg = values.sum(axis=1)
    inv = 1.0 / np.sqrt(deg)
    m = inv[:, None] * values * inv[None, :]
    m = 0.5 * (m + m.T)
    _, vecs = np.linalg.eigh(m)
    emb = vecs[:, ::-1][:, :k]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    return emb / np.where(norms > 0, norms, 1.0)


def spectral_clustering(affinity, k, seed=0):
    """Ng-Jordan-Weiss spectral clustering of an affinity matrix.

    Slices with zero degree (no similarity to anything, themselves included)
    become singleton clusters; the rest are split into the remaining clusters.
    """
    values = _check_affinity(affinity.values)
    m = values.shape[0]
    if not 1 <= k <= m:
        raise ContractError(f"k must lie in [1, {m}], got {k}")
    deg = values.sum(axis=1)
    if not np.any(deg > 0):
        raise DegenerateInputError(f"mode-{affinity.mode}: affinity matrix is zero")
    isolated = np.flatnonzero(deg <= 0)
    live = np.flatnonzero(deg > 0)
    k_live = k - isolated.size
    if k_live < 1:
        raise ContractError(
            f"mode-{affinity.mode}: {isolated.size} isolated slices leave no room for k={k}"
        )
    labels = np.empty(m, dtype=int)
    if k_live == 1:
        labels[live] = 0
    else:
        emb = spectral_embedding(values[np.ix_(live, live)], k_live)
        labels[live] = kmeans(emb, k_live, seed)
    labels[isolated] = k_live + np.arange(isolated.size)
    return ModeClustering(affinity.mode, relabel(labels), k)


# --------------------------------------------------------------------------
# affinity propagation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class APParams:
    damping: float = 0.5
    max_iterations: int = 200
    convergence_window: int = 15
    preference: object = "median"
    seed: int = 0

    def __post_init__(self):
        if not 0.5 <= self.damping < 1.0:
            raise ContractError(f"damping must lie in [0.5, 1), got {self.damping}")
        if not 1 <= self.convergence_window < self.max_iterations:
            raise ContractError("convergence_window must be positive and below max_iterations")
        if self.preference != "median" and not np.isfinite(float(self.preference)):
            raise ContractError("preference must be 'median' or a finite number")


def affinity_propagation(affinity, params=APParams()):
    """Frey-Dueck message passing on similarities ``s(i, j) = C'_ij``.

    The diagonal is replaced by the preference. Ties are broken by a tiny
    seeded jitter; labels point every slice to its most similar exemplar
    under the original similarities.
    """
    s0 = _check_affinity(affinity.values)
    n = s0.shape[0]
    if n < 2:
        raise ContractError("affinity propagation needs at least two slices")
    off = ~np.eye(n, dtype=bool)
    if params.preference == "median":
        pref = float(np.median(s0[off]))
    else:
        pref = float(params.preference)
    s = s0.copy()
    np.fill_diagonal(s, pref)
    rng = np.random.default_rng(params.seed)
    tiny = np.finfo(np.float64).tiny
    s += (np.finfo(np.float64).eps * np.abs(s) + tiny * 100) * rng.standard_normal((n, n))

    lam = params.damping
    r = np.zeros((n, n))
    a = np.zeros((n, n))
    rows = np.arange(n)
    window = np.zeros((n, params.convergence_window), dtype=bool)
    converged = False
    it = 0
    for it in range(1, params.max_iterations + 1):
        # responsibilities
        tmp = a + s
        first = np.argmax(tmp, axis=1)
        best = tmp[rows, first]
        tmp[rows, first] = -np.inf
        second = tmp.max(axis=1)
        new_r = s - best[:, None]
        new_r[rows, first] = s[rows, first] - second
        r = lam * r + (1 - lam) * new_r
        # availabilities
        rp = np.maximum(r, 0)
        rp[rows, rows] = r[rows, rows]
        col = rp.sum(axis=0)
        new_a = col[None, :] - rp
        diag = new_a[rows, rows].copy()
        new_a = np.minimum(new_a, 0)
        new_a[rows, rows] = diag
        a = lam * a + (1 - lam) * new_a

        exemplar = (np.diag(a) + np.diag(r)) > 0
        window[:, it % params.convergence_window] = exemplar
        if it >= params.convergence_window:
            stable = window.sum(axis=1)
            unchanged = np.all((stable == 0) | (stable == params.convergence_window))
            if unchanged and exemplar.any():
                converged = True
                break

    evidence = np.diag(a) + np.diag(r)
    exemplars = np.flatnonzero(evidence > 0)
    if exemplars.size == 0:
        exemplars = np.array([int(np.argmax(evidence))])
    sim = s0[:, exemplars].copy()
    labels = np.argmax(sim, axis=1)
    labels[exemplars] = np.arange(exemplars.size)
    return ModeClustering(
        affinity.mode, labels, int(exemplars.size),
        exemplars=tuple(int(e) for e in exemplars), converged=converged, iterations=it,
        preference=pref,
    )
