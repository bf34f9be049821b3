import numpy as np
import pytest

from sheaflap.errors import ConfigError
from sheaflap.hypercore import Hypergraph
from sheaflap.verify import (PropertyResult, check_descent, check_quadratic_form, check_spectrum,
                             classical_hypergcn_laplacian, classical_hypergnn_laplacian, random_hypergraph,
                             random_instance, run_all)


def test_run_all_passes():
    results = run_all(trials=8, seed=3, max_nodes=6)
    assert len(results) == 7
    assert all(r.passed for r in results), [r.line() for r in results]


def test_injected_asymmetry_fails():
    failed = {r.name for r in run_all(trials=3, seed=0, max_nodes=5, inject_asymmetry=True) if not r.passed}
    assert len(failed) >= 2


def test_corruption_detected_per_suite():
    assert not check_quadratic_form(3, 0, 5, corrupt=True).passed
    assert not check_spectrum(3, 0, 5, corrupt=True).passed


def test_reproducible_lines():
    a = [r.line() for r in run_all(trials=4, seed=11, max_nodes=5)]
    b = [r.line() for r in run_all(trials=4, seed=11, max_nodes=5)]
    assert a == b


def test_result_line_format():
    r = PropertyResult("spectrum bounds", True, 5, 1.5e-16, "min/max eigenvalue excess")
    assert r.line() == "PASS spectrum bounds: 5 trials, worst 1.5e-16 (min/max eigenvalue excess)"
    assert PropertyResult("x", False, 1, 2.0).line() == "FAIL x: 1 trials, worst 2"


def test_random_instance_shapes(rng):
    for _ in range(20):
        H, S, x = random_instance(rng, 5, 3, 2)
        assert 2 <= H.num_nodes <= 5 and 1 <= H.num_edges <= 3
        assert S.stalk_dim <= 2 and x.shape[0] == H.num_nodes * S.stalk_dim
    with pytest.raises(ConfigError):
        random_hypergraph(rng, 1)
    with pytest.raises(ConfigError):
        run_all(trials=0)


def test_classical_oracles_by_hand():
    H = Hypergraph(3, [[0, 1, 2]])
    L = classical_hypergnn_laplacian(H)
    assert np.allclose(L, [[2 / 3, -1 / 3, -1 / 3], [-1 / 3, 2 / 3, -1 / 3], [-1 / 3, -1 / 3, 2 / 3]])
    G = classical_hypergcn_laplacian(H, np.array([0.0, 1.0, 5.0]), mediators=False)
    assert np.allclose(G, np.array([[1, 0, -1], [0, 0, 0], [-1, 0, 1]]) / 3)
    G = classical_hypergcn_laplacian(H, np.array([0.0, 1.0, 5.0]), mediators=True)
    assert np.allclose(G, np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]]) / 3)


def test_descent_suite_reports_increase():
    res = check_descent(12, 0)
    assert res.trials == 12 and res.worst > 1e-9 and not res.passed
