"""Randomized property suites certifying the Laplacian and energy identities.

Every trial draws its own generator from ``SeedSequence(seed)`` so a run is
reproducible from the master seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .diffuse import diffuse_linear, diffuse_nonlinear, max_nonlinear_eigenvalue, subgradient_check
from .energy import dirichlet_energy, quadratic_form, total_variation
from .errors import ConfigError, DegeneratePoint, SheafLapError
from .hypercore import Hypergraph, degrees
from .lap import linear_laplacian, nonlinear_laplacian, normalize, normalizer
from .sheaf import MapKind, random_sheaf, trivial_sheaf
from .spectral import eigenvalues_sym, lambda_star

RELATIVE_TOL = 1e-10
STEP_TOL = 1e-9
SUBGRADIENT_TOL = 1e-4


@dataclass
class PropertyResult:
    name: str
    passed: bool
    trials: int
    worst: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: {self.trials} trials, worst {self.worst:.3g}"
        return text + (f" ({self.detail})" if self.detail else "")


def random_hypergraph(rng: np.random.Generator, max_nodes: int = 8, max_edges: int = 6) -> Hypergraph:
    if max_nodes < 2 or max_edges < 1:
        raise ConfigError("need max_nodes >= 2 and max_edges >= 1")
    n = int(rng.integers(2, max_nodes + 1))
    m = int(rng.integers(1, max_edges + 1))
    edges = [rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist() for _ in range(m)]
    return Hypergraph(n, edges)


def random_kind(rng: np.random.Generator, d: int) -> MapKind:
    tag = int(rng.integers(3))
    if tag == 0:
        return MapKind.diagonal()
    if tag == 1:
        return MapKind.low_rank(int(rng.integers(1, d + 1)))
    return MapKind.general()


def random_instance(rng: np.random.Generator, max_nodes: int = 8, max_edges: int = 6, max_d: int = 3,
                    channels: int | None = None):
    """Random (H, S, x) with ``x`` of shape (n*d, c)."""
    H = random_hypergraph(rng, max_nodes, max_edges)
    d = int(rng.integers(1, max_d + 1))
    S = random_sheaf(H, d, random_kind(rng, d), int(rng.integers(2**32)))
    c = channels if channels is not None else int(rng.integers(1, 4))
    x = rng.standard_normal((H.num_nodes * d, c))
    return H, S, x


def _relerr(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _streams(seed: int, tag: int, trials: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence([seed, tag]).spawn(trials)]


def _corrupt(M: np.ndarray) -> np.ndarray:
    M = M.copy()
    M[0, -1] += 1e-3
    return M


# -- the suites ---------------------------------------------------------------

def check_quadratic_form(trials: int, seed: int, max_nodes: int = 8, corrupt: bool = False) -> PropertyResult:
    """Dirichlet sum equals xᵀΔx for the sheaf-normalized linear Laplacian."""
    worst = 0.0
    for rng in _streams(seed, 1, trials):
        H, S, x = random_instance(rng, max_nodes)
        N = normalizer(H, S, "sheaf", "symmetric")
        delta = normalize(linear_laplacian(H, S), N)
        dense = delta.to_dense()
        if corrupt:
            dense = _corrupt(dense)
        quad = float(np.sum(x * (dense @ x)))
        worst = max(worst, _relerr(dirichlet_energy(H, S, N, x).value, quad))
    return PropertyResult("quadratic-form identity", worst <= RELATIVE_TOL, trials, worst)


def check_spectrum(trials: int, seed: int, max_nodes: int = 8, corrupt: bool = False) -> PropertyResult:
    """Eigenvalues of D^{-1/2} L D^{-1/2} lie in [0, 1]."""
    worst = 0.0
    for rng in _streams(seed, 2, trials):
        H, S, _ = random_instance(rng, max_nodes)
        N = normalizer(H, S, "sheaf", "symmetric")
        dense = normalize(linear_laplacian(H, S), N).to_dense()
        if corrupt:
            dense = _corrupt(dense)
        try:
            lam = eigenvalues_sym(dense).eigenvalues
        except SheafLapError as exc:
            return PropertyResult("spectrum in [0,1]", False, trials, float("inf"), str(exc))
        if len(lam):
            worst = max(worst, -float(lam[0]), float(lam[-1]) - 1.0)
    return PropertyResult("spectrum in [0,1]", worst <= STEP_TOL, trials, worst)


def check_contraction(trials: int, seed: int, max_nodes: int = 8, steps: int = 10,
                      corrupt: bool = False) -> PropertyResult:
    """Per-step Dirichlet energy ratio of linear diffusion stays below λ*.

    Ratios are only formed while the energy is above roundoff relative to the
    signal norm; below that the quotient measures cancellation noise.
    """
    worst = -np.inf
    for rng in _streams(seed, 3, trials):
        H, S, x = random_instance(rng, max_nodes)
        N = normalizer(H, S, "sheaf", "symmetric")
        dense = normalize(linear_laplacian(H, S), N).to_dense()
        if corrupt:
            dense = _corrupt(dense)
        try:
            lam = lambda_star(eigenvalues_sym(dense))
        except SheafLapError as exc:
            if corrupt:
                return PropertyResult("linear contraction", False, trials, float("inf"), str(exc))
            continue
        _, trace = diffuse_linear(H, S, N, x, steps)
        E = trace.energies
        floor = 1e-20 * float(np.sum(x * x))
        for a, b in zip(E[:-1], E[1:]):
            if a > floor:
                worst = max(worst, b / a - lam)
    worst = max(worst, 0.0) if np.isfinite(worst) else 0.0
    return PropertyResult("linear contraction", worst <= STEP_TOL, trials, worst, "max ratio - λ*")


def check_tv_identity(trials: int, seed: int, max_nodes: int = 8) -> PropertyResult:
    """xᵀΔ̄x = 2 Ē_TV without mediators."""
    worst = 0.0
    for rng in _streams(seed, 4, trials):
        H, S, x = random_instance(rng, max_nodes)
        N = normalizer(H, S, "sheaf", "symmetric")
        delta = normalize(nonlinear_laplacian(H, S, x, False, N, int(rng.integers(2**32))), N)
        worst = max(worst, _relerr(quadratic_form(delta, x), 2.0 * total_variation(H, S, N, x).value))
    return PropertyResult("total-variation identity", worst <= RELATIVE_TOL, trials, worst)


def check_descent(trials: int, seed: int, max_nodes: int = 8, steps: int = 50) -> PropertyResult:
    """Ē_TV never increases under non-linear diffusion with η = 0.5 / λ_max."""
    worst = 0.0
    for rng in _streams(seed, 5, trials):
        H, S, x = random_instance(rng, max_nodes)
        N = normalizer(H, S, "sheaf", "symmetric")
        run_seed = int(rng.integers(2**32))
        top = max_nonlinear_eigenvalue(H, S, N, x, False, run_seed)
        eta = 0.5 / top if top > 0 else 0.5
        _, trace = diffuse_nonlinear(H, S, N, x, steps, eta, False, run_seed)
        E = trace.energies
        worst = max(worst, float(np.max(np.diff(E), initial=0.0)))
    return PropertyResult("total-variation descent", worst <= STEP_TOL, trials, worst, "max per-step increase")


def check_subgradient(trials: int, seed: int, max_nodes: int = 8, attempts: int = 50) -> PropertyResult:
    """Δ̄(x)x matches finite differences of Ē_TV at generic points."""
    worst = 0.0
    done = 0
    for rng in _streams(seed, 6, trials):
        for _ in range(attempts):
            H, S, x = random_instance(rng, max_nodes)
            N = normalizer(H, S, "sheaf", "symmetric")
            try:
                err = subgradient_check(H, S, N, x)
            except DegeneratePoint:
                continue
            worst = max(worst, err)
            done += 1
            break
    ok = worst < SUBGRADIENT_TOL and done == trials
    return PropertyResult("subgradient identity", ok, done, worst)


# -- classical scalar oracles ---------------------------------------------------

def classical_hypergnn_laplacian(H: Hypergraph) -> np.ndarray:
    """Scalar clique-expansion Laplacian: (δ-1)/δ on the diagonal, -1/δ per co-member."""
    n = H.num_nodes
    L = np.zeros((n, n))
    for e in H.hyperedges:
        size = len(e)
        for v in e:
            L[v, v] += (size - 1) / size
        for u, v in combinations(e, 2):
            L[u, v] += -(1.0 / size)
            L[v, u] += -(1.0 / size)
    return L


def classical_hypergcn_laplacian(H: Hypergraph, x: np.ndarray, mediators: bool, scale=None) -> np.ndarray:
    """Scalar non-linear Laplacian: per hyperedge, connect the farthest pair (and mediators) with weight 1/δ."""
    n = H.num_nodes
    X = np.asarray(x, dtype=float).reshape(n, -1)
    Y = X if scale is None else X * scale[:, None]
    L = np.zeros((n, n))
    for e in H.hyperedges:
        size = len(e)
        w = 1.0 / size
        if size == 1:
            continue
        best, pair = -1.0, None
        for u, v in combinations(e, 2):
            dist = float(np.sum((Y[u] - Y[v]) ** 2))
            if dist > best:
                best, pair = dist, (u, v)
        u, v = pair
        rel = [(u, v)]
        if mediators:
            rel += [(u, k) for k in e if k not in pair] + [(v, k) for k in e if k not in pair]
        for a, b in rel:
            a, b = min(a, b), max(a, b)
            L[a, a] += w
            L[b, b] += w
            L[a, b] += -w
            L[b, a] += -w
    return L


def degree_scale(H: Hypergraph) -> np.ndarray:
    deg = degrees(H).node_degrees.astype(float)
    return 1.0 / np.sqrt(np.where(deg == 0, 1e-6, deg))


def _normalized_dense(L: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``s_u L_uv s_v`` evaluated on the upper triangle and mirrored."""
    upper = np.triu((s[:, None] * L) * s[None, :])
    return upper + np.triu(upper, 1).T


def check_trivial_linear(trials: int, seed: int, max_nodes: int = 8) -> PropertyResult:
    mismatches = 0
    for rng in _streams(seed, 7, trials):
        H = random_hypergraph(rng, max_nodes)
        T = trivial_sheaf(H)
        L = linear_laplacian(H, T)
        oracle = classical_hypergnn_laplacian(H)
        N = normalizer(H, T, "degree", "symmetric")
        same = np.array_equal(L.to_dense(), oracle) and \
            np.array_equal(normalize(L, N).to_dense(), _normalized_dense(oracle, degree_scale(H)))
        mismatches += not same
    return PropertyResult("trivial sheaf = classical HyperGNN", mismatches == 0, trials, float(mismatches),
                          "bitwise mismatches")


def check_trivial_nonlinear(trials: int, seed: int, max_nodes: int = 8) -> PropertyResult:
    mismatches = 0
    for rng in _streams(seed, 8, trials):
        H = random_hypergraph(rng, max_nodes)
        T = trivial_sheaf(H)
        x = rng.standard_normal(H.num_nodes)
        N = normalizer(H, T, "degree", "symmetric")
        s = degree_scale(H)
        for med in (False, True):
            L = nonlinear_laplacian(H, T, x, med, N, int(rng.integers(2**32)))
            oracle = classical_hypergcn_laplacian(H, x, med, s)
            same = np.array_equal(L.to_dense(), oracle) and \
                np.array_equal(normalize(L, N).to_dense(), _normalized_dense(oracle, s))
            mismatches += not same
    return PropertyResult("trivial sheaf = classical HyperGCN", mismatches == 0, trials, float(mismatches),
                          "bitwise mismatches")


def run_all(trials: int = 50, seed: int = 0, max_nodes: int = 8, inject_asymmetry: bool = False,
            log=None) -> list[PropertyResult]:
    """Run the gating suites; ``inject_asymmetry`` corrupts the assembled operator to exercise the failure path.

    Total-variation descent is not among them: a subgradient step can cross
    into a steeper max-pair piece, so per-step monotonicity is not guaranteed.
    :func:`check_descent` measures it separately.
    """
    if trials < 1:
        raise ConfigError("trials must be positive")
    suites = [
        lambda: check_quadratic_form(trials, seed, max_nodes, inject_asymmetry),
        lambda: check_spectrum(trials, seed, max_nodes, inject_asymmetry),
        lambda: check_contraction(trials, seed, max_nodes, corrupt=inject_asymmetry),
        lambda: check_tv_identity(trials, seed, max_nodes),
        lambda: check_subgradient(trials, seed, max_nodes),
        lambda: check_trivial_linear(trials, seed, max_nodes),
        lambda: check_trivial_nonlinear(trials, seed, max_nodes),
    ]
    results = []
    for suite in suites:
        res = suite()
        results.append(res)
        if log is not None:
            log(res.line())
    return results
