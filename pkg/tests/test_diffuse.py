import numpy as np
import pytest

from sheaflap.diffuse import (diffuse_linear, diffuse_nonlinear, max_nonlinear_eigenvalue,
                              subgradient_check)
from sheaflap.errors import DegeneratePoint, ShapeError, ValidationError
from sheaflap.hypercore import Hypergraph
from sheaflap.lap import linear_laplacian, normalize, normalizer
from sheaflap.sheaf import MapKind, random_sheaf, trivial_sheaf
from sheaflap.spectral import eigenvalues_sym, lambda_star
from sheaflap.verify import _streams, random_instance


def identity_normalizer(H):
    # degree mode is exactly D = I on a single hyperedge
    return normalizer(H, trivial_sheaf(H), "degree")


def test_linear_one_step(H3, x3):
    X, trace = diffuse_linear(H3, trivial_sheaf(H3), identity_normalizer(H3), x3, 1)
    assert np.allclose(X[:, 0], [2.0, 2.0, 2.0], atol=1e-15)
    assert trace.energies[0] == pytest.approx(14.0)
    assert trace.energies[1] == pytest.approx(0.0, abs=1e-28)
    assert trace.law == "linear_dirichlet" and trace.step_size == 1.0


def test_linear_constant_is_fixed(H3):
    _, trace = diffuse_linear(H3, trivial_sheaf(H3), identity_normalizer(H3), np.ones(3), 5)
    assert np.all(trace.energies == 0.0)


@pytest.mark.parametrize("seed", range(15))
def test_linear_contraction(seed):
    H, S, x = random_instance(np.random.default_rng(seed))
    N = normalizer(H, S)
    spec = eigenvalues_sym(normalize(linear_laplacian(H, S), N).to_dense())
    if spec.max <= spec.zero_tolerance:
        pytest.skip("operator vanishes")
    lam = lambda_star(spec)
    E = diffuse_linear(H, S, N, x, 10)[1].energies
    assert np.all(E[1:] <= lam * E[:-1] + 1e-9)


def test_nonlinear_one_step(H3, x3):
    X, trace = diffuse_nonlinear(H3, trivial_sheaf(H3), identity_normalizer(H3), x3, 1, eta=1.0)
    assert np.allclose(X[:, 0], [5 / 3, 1.0, 10 / 3], atol=1e-15)
    assert trace.energies[0] == pytest.approx(25 / 6)
    assert trace.energies[1] == pytest.approx((10 / 3 - 1) ** 2 / 6)
    assert trace.steps[1][2] == "0-2"


def test_nonlinear_constant_is_fixed():
    # every node has degree 2, so normalization keeps the signal constant
    H = Hypergraph(4, [[0, 1, 2], [1, 2, 3], [0, 3]])
    _, trace = diffuse_nonlinear(H, trivial_sheaf(H), normalizer(H, trivial_sheaf(H)), np.ones(4), 4, 0.3)
    assert np.all(trace.energies == 0.0)


def test_nonlinear_reproducible():
    H, S, x = random_instance(np.random.default_rng(9))
    N = normalizer(H, S)
    a = diffuse_nonlinear(H, S, N, x, 5, 0.2, True, 4)
    b = diffuse_nonlinear(H, S, N, x, 5, 0.2, True, 4)
    assert np.array_equal(a[0], b[0]) and a[1].to_csv() == b[1].to_csv()


def test_descent_can_fail_near_a_kink():
    # Ē_TV is a max of quadratics per hyperedge; a step that crosses into a
    # steeper piece can raise it by an amount proportional to the step size.
    rng = _streams(0, 5, 24)[14]
    H, S, x = random_instance(rng, 8)
    N = normalizer(H, S)
    seed = int(rng.integers(2**32))
    top = max_nonlinear_eigenvalue(H, S, N, x, False, seed)
    assert H.hyperedges == ((0, 5), (0, 1, 3, 4, 5))
    rises = []
    for f in (0.5, 0.05):
        E = diffuse_nonlinear(H, S, N, x, int(25 / f), f / top, False, seed)[1].energies
        rises.append(np.max(np.diff(E)))
    assert rises[0] == pytest.approx(9.27635765523821e-4, rel=1e-6)
    assert 0 < rises[1] < rises[0] / 5


def test_trace_csv(H3, x3, tmp_path):
    _, trace = diffuse_linear(H3, trivial_sheaf(H3), identity_normalizer(H3), x3, 10)
    text = trace.to_csv()
    lines = text.splitlines()
    assert lines[0] == "step,energy" and len(lines) == 12
    assert lines[1] == "0,14.0"
    trace.write_csv(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == text


def test_validation(H3, x3):
    S, N = trivial_sheaf(H3), identity_normalizer(H3)
    with pytest.raises(ValidationError):
        diffuse_linear(H3, S, N, x3, 0)
    with pytest.raises(ValidationError):
        diffuse_nonlinear(H3, S, N, x3, 3, eta=0.0)
    with pytest.raises(ShapeError):
        diffuse_linear(H3, S, N, np.zeros(4), 2)


def test_subgradient_H3(H3, x3):
    S = trivial_sheaf(H3)
    assert subgradient_check(H3, S, None, x3) < 1e-4
    assert subgradient_check(H3, S, normalizer(H3, S), x3) < 1e-4


def test_subgradient_d2_diagonal(rng):
    H = Hypergraph(5, [[0, 1, 2], [1, 3, 4], [0, 4]])
    S = random_sheaf(H, 2, MapKind.diagonal(), 11)
    x = rng.standard_normal((10, 1))
    assert subgradient_check(H, S, normalizer(H, S), x) < 1e-4


def test_tied_pairs_are_degenerate(H3):
    with pytest.raises(DegeneratePoint):
        subgradient_check(H3, trivial_sheaf(H3), None, np.array([0.0, 0.0, 1.0]))
