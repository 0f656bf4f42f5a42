import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsk_cvh.fcm import fcm_cluster, fcm_objective


def _blobs(seed=0, n=60):
    rng = np.random.default_rng(seed)
    return np.vstack([rng.normal(c, 0.3, size=(n // 3, 2)) for c in ((0, 0), (3, 0), (0, 3))])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5), st.integers(6, 30), st.integers(1, 4))
def test_objective_monotone_and_rows_sum_to_one(seed, c, n, d):
    x = np.random.default_rng(seed).normal(size=(n, d))
    res = fcm_cluster(x, c, seed=seed)
    tr = np.array(res.objective_trace)
    assert np.all(np.diff(tr) <= 1e-10 * np.maximum(1.0, tr[:-1]))
    np.testing.assert_allclose(res.memberships.sum(axis=1), 1.0, atol=1e-12)
    assert res.final_objective == pytest.approx(
        fcm_objective(x, res.centers, res.memberships, 2.0), rel=1e-12)


def test_single_cluster_is_exact():
    x = np.random.default_rng(1).normal(size=(17, 3))
    res = fcm_cluster(x, 1)
    np.testing.assert_array_equal(res.memberships, np.ones((17, 1)))
    np.testing.assert_allclose(res.centers[0], x.mean(axis=0), atol=1e-15)


def test_two_separated_points():
    res = fcm_cluster(np.array([[0.0], [10.0]]), 2, seed=4)
    assert np.all(res.memberships.max(axis=1) > 0.99)
    assert res.memberships[0].argmax() != res.memberships[1].argmax()


def test_midpoint_is_shared():
    x = np.array([[0.0], [0.0], [2.0], [2.0], [1.0]])
    res = fcm_cluster(x, 2, seed=0, tol=1e-14, max_iter=1000)
    np.testing.assert_allclose(res.memberships[4], [0.5, 0.5], atol=1e-6)


def test_coincident_point_shared_equally():
    from tsk_cvh.fcm import _memberships
    d2 = np.array([[0.0, 0.0, 4.0], [1.0, 4.0, 9.0]])
    u = _memberships(d2, 2.0)
    np.testing.assert_allclose(u[0], [0.5, 0.5, 0.0])
    np.testing.assert_allclose(u[1].sum(), 1.0)


def test_permuting_init_columns_permutes_result():
    x = _blobs()
    init = np.random.default_rng(2).uniform(size=(x.shape[0], 3))
    perm = [2, 0, 1]
    a = fcm_cluster(x, 3, init=init)
    b = fcm_cluster(x, 3, init=init[:, perm])
    np.testing.assert_allclose(b.centers, a.centers[perm], atol=1e-10)
    np.testing.assert_allclose(b.memberships, a.memberships[:, perm], atol=1e-10)


def test_recovers_blob_centers():
    res = fcm_cluster(_blobs(), 3, seed=5)
    found = sorted(map(tuple, np.round(res.centers)))
    assert found == [(0.0, 0.0), (0.0, 3.0), (3.0, 0.0)]


def test_seed_determinism():
    x = _blobs(3)
    a, b = fcm_cluster(x, 3, seed=9), fcm_cluster(x, 3, seed=9)
    np.testing.assert_array_equal(a.memberships, b.memberships)


@pytest.mark.parametrize("kwargs", [dict(clusters=5), dict(clusters=2, fuzzifier=1.0),
                                    dict(clusters=2, tol=0.0)])
def test_invalid_arguments(kwargs):
    with pytest.raises(ValueError):
        fcm_cluster(np.zeros((4, 1)), **kwargs)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        fcm_cluster(np.array([[0.0], [np.nan]]), 2)
