import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone

from orgmod import InputError, OrganizedModularityClustering
from orgmod.datasets import load_karate
from orgmod.quality import modularity


def test_fit_predict_identity():
    g = load_karate()
    est = OrganizedModularityClustering(n_clusters=4, outer_steps=151, n_init=2)
    labels = est.fit_predict(g.weights)
    assert labels.shape == (34,)
    assert est.modularity_ == pytest.approx(0.4198, abs=5e-4)
    assert est.organized_modularity_ == pytest.approx(est.modularity_)
    assert est.n_nonempty_clusters_ == 4
    soft = est.transform(g)
    assert soft.shape == (34, 4)
    np.testing.assert_allclose(soft.sum(axis=1), 1)
    np.testing.assert_array_equal(est.predict(g.weights), labels)


def test_grid_transform_dense_input():
    a = load_karate().weights.toarray()
    est = OrganizedModularityClustering(grid=(2, 2), kernel="linear", scale=1.0).fit(a)
    pos = est.transform(a)
    assert pos.shape == (34, 2)
    assert np.all((pos >= 0) & (pos <= 1))
    with pytest.raises(InputError):
        est.transform(np.eye(34))


def test_params_and_clone():
    est = OrganizedModularityClustering(grid=(3, 3), scale=0.5, random_state=7)
    params = est.get_params()
    assert params["grid"] == (3, 3) and params["random_state"] == 7
    est2 = clone(est).set_params(scale=0.25)
    assert est2.scale == 0.25 and est.scale == 0.5


def test_input_validation():
    with pytest.raises(InputError):
        OrganizedModularityClustering(n_clusters=2).fit(np.ones((3, 2)))
    with pytest.raises(InputError):
        OrganizedModularityClustering().fit(sp.eye(3, format="csr"))
    with pytest.raises(InputError):
        OrganizedModularityClustering(n_clusters=2, n_init=0).fit(np.ones((3, 3)))


def test_custom_similarity():
    g = load_karate()
    s = np.eye(4)
    pos = [[0, 0], [0, 1], [1, 0], [1, 1]]
    est = OrganizedModularityClustering(similarity=s, positions=pos, outer_steps=151).fit(g)
    assert modularity(g, est.result_.clustering) == pytest.approx(est.modularity_)
