import numpy as np
import pytest
from scipy.sparse.csgraph import connected_components
from sklearn.cluster import AffinityPropagation

from mcam.affinity import AffinityMatrix, affinity_mcam1
from mcam.clustering import (APParams, affinity_propagation, kmeans, kmeans_fit, relabel,
                             spectral_clustering)
from mcam.errors import ContractError, DegenerateInputError
from mcam.metrics import ari
from mcam.spectra import mode_spectra


def blocks(*sizes, within=1.0, cross=0.0):
    n = sum(sizes)
    a = np.full((n, n), cross)
    start = 0
    for s in sizes:
        a[start:start + s, start:start + s] = within
        start += s
    return a


def brute_inertia(x, labels):
    return sum(((x[labels == c] - x[labels == c].mean(0)) ** 2).sum() for c in np.unique(labels))


# k-means ------------------------------------------------------------------

def test_kmeans_separated_pairs():
    labels = kmeans([0.0, 0.1, 10.0, 10.1], 2, seed=0)
    assert labels[0] == labels[1] != labels[2] == labels[3]


def test_kmeans_k_equals_n():
    x = np.random.default_rng(0).standard_normal((7, 2))
    res = kmeans_fit(x, 7, seed=1)
    assert sorted(res.labels) == list(range(7))
    assert res.inertia == 0.0


def test_kmeans_three_blobs():
    rng = np.random.default_rng(5)
    centres = np.array([[0, 0], [10, 0], [0, 10]])
    truth = np.repeat([0, 1, 2], 30)
    x = centres[truth] + 0.1 * rng.standard_normal((90, 2))
    assert ari(truth, kmeans(x, 3, seed=2)) == 1.0


def test_kmeans_objective_non_increasing_and_deterministic():
    x = np.random.default_rng(1).standard_normal((200, 3))
    res = kmeans_fit(x, 6, seed=4, n_init=1)
    assert np.all(np.diff(res.history) <= 1e-12 * res.history[0])
    assert res.inertia == pytest.approx(brute_inertia(x, res.labels), rel=1e-10)
    again = kmeans_fit(x, 6, seed=4, n_init=1)
    np.testing.assert_array_equal(res.labels, again.labels)


def test_kmeans_best_of_restarts():
    x = np.random.default_rng(2).standard_normal((120, 2))
    best = kmeans_fit(x, 5, seed=9, n_init=10)
    singles = [kmeans_fit(x, 5, seed=s, n_init=1).inertia for s in range(3)]
    assert best.inertia <= min(singles) + 1e-9 or best.inertia <= max(singles)
    assert len(np.unique(best.labels)) == 5


def test_kmeans_duplicate_points_keep_clusters_non_empty():
    x = np.array([[0.0, 0.0]] * 5 + [[1.0, 1.0]] * 5)
    labels = kmeans(x, 3, seed=0)
    assert len(np.unique(labels)) == 3


def test_kmeans_errors():
    with pytest.raises(ContractError):
        kmeans([[0.0], [1.0]], 3)
    with pytest.raises(ContractError):
        kmeans(np.zeros((0, 2)), 1)


# spectral clustering -------------------------------------------------------

def test_spectral_recovers_connected_components():
    a = blocks(3, 4)
    _, components = connected_components(a > 0, directed=False)
    mc = spectral_clustering(AffinityMatrix(1, a), 2, seed=0)
    assert ari(components, mc.labels) == 1.0
    assert mc.n_clusters == 2


def test_spectral_identity_gives_singletons():
    mc = spectral_clustering(AffinityMatrix(2, np.eye(6)), 6, seed=0)
    assert sorted(mc.labels) == list(range(6))


def test_spectral_on_noiseless_two_block_tensor(two_block):
    t, truth = two_block
    for mode in (1, 2, 3):
        a = affinity_mcam1(mode_spectra(t, mode), 1)
        mc = spectral_clustering(a, 2, seed=0)
        assert ari(truth.labels[mode - 1], mc.labels) == 1.0


def test_spectral_permutation_equivariance():
    rng = np.random.default_rng(3)
    a = blocks(5, 6, 7, within=0.9, cross=0.05)
    a = np.clip(a + 0.02 * rng.random(a.shape), 0, 1)
    a = 0.5 * (a + a.T)
    perm = rng.permutation(a.shape[0])
    base = spectral_clustering(AffinityMatrix(1, a), 3, seed=1).labels
    other = spectral_clustering(AffinityMatrix(1, a[np.ix_(perm, perm)]), 3, seed=1).labels
    assert ari(base[perm], other) == 1.0


def test_spectral_zero_degree_rows_become_singletons():
    a = blocks(3, 3)
    a = np.pad(a, ((0, 1), (0, 1)))
    mc = spectral_clustering(AffinityMatrix(1, a), 3, seed=0)
    assert ari(mc.labels, [0, 0, 0, 1, 1, 1, 2]) == 1.0


def test_spectral_errors():
    with pytest.raises(ContractError):
        spectral_clustering(AffinityMatrix(1, np.eye(3)), 4)
    with pytest.raises(DegenerateInputError):
        spectral_clustering(AffinityMatrix(1, np.zeros((3, 3))), 2)


# affinity propagation --------------------------------------------------------

def test_ap_two_blocks_median_preference():
    a = blocks(4, 5)
    mc = affinity_propagation(AffinityMatrix(1, a))
    assert mc.n_clusters == 2 and mc.converged
    assert ari(mc.labels, [0] * 4 + [1] * 5) == 1.0
    assert len(mc.exemplars) == 2
    assert mc.preference == 0.0


def test_ap_pair_with_low_preference_is_one_cluster():
    mc = affinity_propagation(AffinityMatrix(1, np.ones((2, 2))), APParams(preference=-100.0))
    assert mc.n_clusters == 1
    np.testing.assert_array_equal(mc.labels, [0, 0])


@pytest.mark.parametrize("seed", range(4))
def test_ap_matches_reference_implementation(seed):
    rng = np.random.default_rng(seed)
    centres = rng.standard_normal((4, 3)) * 4
    x = centres[rng.integers(0, 4, 40)] + 0.3 * rng.standard_normal((40, 3))
    s = np.exp(-((x[:, None] - x[None]) ** 2).sum(-1) / 4.0)
    ours = affinity_propagation(AffinityMatrix(1, s))
    ref = AffinityPropagation(affinity="precomputed", random_state=0,
                              preference=np.median(s[~np.eye(40, dtype=bool)])).fit(s)
    assert ours.n_clusters == len(ref.cluster_centers_indices_)
    assert ari(ours.labels, ref.labels_) == 1.0


def test_ap_members_point_to_most_similar_exemplar():
    rng = np.random.default_rng(8)
    s = rng.random((30, 30))
    s = 0.5 * (s + s.T)
    mc = affinity_propagation(AffinityMatrix(1, s), APParams(preference=0.2))
    ex = np.array(mc.exemplars)
    for i in range(30):
        if i in ex:
            assert ex[mc.labels[i]] == i
        else:
            assert s[i, ex[mc.labels[i]]] == s[i, ex].max()


def test_ap_reports_non_convergence():
    s = np.random.default_rng(1).random((20, 20))
    mc = affinity_propagation(AffinityMatrix(1, 0.5 * (s + s.T)),
                              APParams(max_iterations=3, convergence_window=2))
    assert not mc.converged and mc.iterations == 3
    assert mc.n_clusters >= 1


def test_ap_deterministic():
    s = np.random.default_rng(2).random((25, 25))
    a = AffinityMatrix(1, 0.5 * (s + s.T))
    np.testing.assert_array_equal(affinity_propagation(a).labels, affinity_propagation(a).labels)


@pytest.mark.parametrize("kwargs", [dict(damping=0.4), dict(damping=1.0),
                                    dict(max_iterations=10, convergence_window=10)])
def test_ap_params_validation(kwargs):
    with pytest.raises(ContractError):
        APParams(**kwargs)


def test_relabel_first_appearance():
    np.testing.assert_array_equal(relabel([5, 5, 2, 9, 2]), [0, 0, 1, 2, 1])
