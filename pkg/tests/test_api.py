from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone

from bulktri.api import TriangleCountEstimator, check_edges
from bulktri.estimator import InvalidEdgeError
from bulktri.generate import gnp
from bulktri.oracle import exact_triangle_count


def test_fit_estimates_triangles():
    e = gnp(60, 0.3, seed=1)
    tau = exact_triangle_count(e.tolist())
    est = TriangleCountEstimator(n_estimators=50_000, batch_size=64, random_state=3).fit(e)
    assert est.n_edges_seen_ == len(e)
    assert abs(est.estimate() - tau) / tau < 0.15
    assert est.coarse_estimates().shape == (50_000,)


def test_partial_fit_matches_fit_at_same_boundaries():
    e = gnp(40, 0.3, seed=2)
    a = TriangleCountEstimator(n_estimators=2000, batch_size=10, random_state=5).fit(e)
    b = TriangleCountEstimator(n_estimators=2000, batch_size=10, random_state=5)
    for i in range(0, len(e), 30):
        b.partial_fit(e[i:i + 30])
    assert np.array_equal(a.coarse_estimates(), b.coarse_estimates())
    assert a.estimate_ == b.estimate_
    a.fit(e[:5])
    assert a.n_edges_seen_ == 5


def test_params_and_clone():
    est = TriangleCountEstimator(n_estimators=10, n_groups=2)
    params = est.get_params()
    assert params["n_estimators"] == 10 and params["n_groups"] == 2
    c = clone(est)
    assert c.get_params() == params and not hasattr(c, "engine_")
    est.set_params(batch_size=7)
    assert est.batch_size == 7


def test_unfitted():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        TriangleCountEstimator().estimate()


def test_empty_stream():
    est = TriangleCountEstimator(n_estimators=10).fit(np.empty((0, 2)))
    assert est.estimate() == 0.0


@pytest.mark.parametrize("bad, exc", [
    ([[1, 2, 3]], ValueError),
    ([[-1, 2]], InvalidEdgeError),
    ([[1.5, 2]], InvalidEdgeError),
    ([["a", "b"]], Exception),
])
def test_check_edges_rejects(bad, exc):
    with pytest.raises(exc):
        check_edges(bad)


def test_check_edges_accepts_lists_and_floats():
    assert check_edges([[1, 2], [3.0, 4]]).tolist() == [[1, 2], [3, 4]]
    assert check_edges(np.array([[1, 2]], dtype=np.uint64)).dtype == np.uint64


@pytest.mark.parametrize("kw", [dict(n_estimators=0), dict(batch_size=0), dict(delta=1.0),
                                dict(n_estimators=3, n_groups=4), dict(random_state="x")])
def test_bad_params(kw):
    with pytest.raises(ValueError):
        TriangleCountEstimator(**kw).fit([[1, 2]])
