import numpy as np
import pytest

from sheaflap.energy import dirichlet_energy, quadratic_form, total_variation
from sheaflap.errors import ShapeError
from sheaflap.hypercore import Hypergraph
from sheaflap.lap import BlockMatrix, linear_laplacian, nonlinear_laplacian, normalize, normalizer
from sheaflap.sheaf import MapKind, random_sheaf, trivial_sheaf
from sheaflap.verify import random_instance


def test_dirichlet_H3(H3, x3):
    S = trivial_sheaf(H3)
    assert dirichlet_energy(H3, S, None, x3).value == pytest.approx(14.0, rel=1e-15)
    # degree normalization is exactly the identity here
    assert dirichlet_energy(H3, S, normalizer(H3, S, "degree"), x3).value == pytest.approx(14.0, rel=1e-15)


def test_total_variation_H3(H3, x3):
    E = total_variation(H3, trivial_sheaf(H3), None, x3)
    assert E.value == pytest.approx(25 / 6, rel=1e-15)
    assert E.kind == "total_variation" and float(E) == E.value


def test_constant_signal_has_zero_energy():
    H = Hypergraph(5, [[0, 1, 2], [2, 3, 4], [1, 4]])
    S = trivial_sheaf(H)
    x = np.full(5, 2.5)
    assert dirichlet_energy(H, S, None, x).value == 0.0
    assert total_variation(H, S, None, x).value == 0.0


def test_quadratic_form_examples(H3, x3):
    x = np.array([0.6, 0.0, 0.8, 0.0])
    assert quadratic_form(BlockMatrix.identity(2, 2), x) == pytest.approx(1.0)
    assert quadratic_form(linear_laplacian(H3, trivial_sheaf(H3)), x3) == pytest.approx(14.0, rel=1e-14)
    assert quadratic_form(linear_laplacian(H3, trivial_sheaf(H3)), np.zeros(3)) == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_dirichlet_matches_quadratic_form(seed):
    H, S, x = random_instance(np.random.default_rng(seed))
    N = normalizer(H, S)
    E = dirichlet_energy(H, S, N, x).value
    q = quadratic_form(normalize(linear_laplacian(H, S), N), x)
    assert abs(E - q) <= 1e-10 * max(abs(E), 1e-300)


@pytest.mark.parametrize("seed", range(20))
def test_total_variation_matches_nonlinear_form(seed):
    H, S, x = random_instance(np.random.default_rng(100 + seed))
    N = normalizer(H, S)
    tv = total_variation(H, S, N, x).value
    q = quadratic_form(normalize(nonlinear_laplacian(H, S, x, False, N), N), x)
    assert abs(2 * tv - q) <= 1e-10 * max(abs(q), 1e-300)


@pytest.mark.parametrize("seed", range(10))
def test_total_variation_below_dirichlet(seed):
    H, S, x = random_instance(np.random.default_rng(200 + seed))
    assert total_variation(H, S, None, x).value <= dirichlet_energy(H, S, None, x).value + 1e-12


def test_energy_invariant_under_relabel(rng):
    H = Hypergraph(6, [[0, 1, 2, 3], [2, 4, 5], [1, 5]])
    S = random_sheaf(H, 2, MapKind.general(), 3)
    x = rng.standard_normal((12, 2))
    perm = rng.permutation(6)
    R = H.relabel(perm)
    # incidences keep their edge order and within-edge position
    position = {(int(perm[v]), e): i for i, (v, e) in enumerate(zip(*H.incidence))}
    order = [position[(int(v), int(e))] for v, e in zip(*R.incidence)]
    SR = type(S)(S.stalk_dim, S.kind, S.params[order])
    xr = np.empty_like(x.reshape(6, 2, 2))
    xr[perm] = x.reshape(6, 2, 2)
    xr = xr.reshape(12, 2)
    for f in (dirichlet_energy, total_variation):
        assert f(R, SR, None, xr).value == pytest.approx(f(H, S, None, x).value, rel=1e-12)


def test_shape_error(H3):
    with pytest.raises(ShapeError):
        dirichlet_energy(H3, trivial_sheaf(H3), None, np.zeros(4))
    with pytest.raises(ShapeError):
        total_variation(H3, random_sheaf(H3, 2, MapKind.diagonal(), 0), None, np.zeros(3))
    with pytest.raises(ShapeError):
        quadratic_form(BlockMatrix.identity(2, 2), np.zeros(3))
