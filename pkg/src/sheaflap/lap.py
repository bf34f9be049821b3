"""Linear and non-linear sheaf hypergraph Laplacians as block-sparse operators.

Both Laplacians are sums of terms ``coef * F_a^T F_b`` placed in block
``(a, b)``.  A :class:`BlockPlan` records those terms (which incidence maps,
which coefficient, which block slot) so the same assembly can be replayed on
plain arrays here and on autograd tensors in :mod:`sheaflap.nn`.

Accumulation always runs in ascending hyperedge order, and an off-diagonal
term lands in ``(a, b)`` and, transposed, in ``(b, a)``, so the assembled
matrices are exactly symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ShapeError, SingularBlock, ValidationError
from .hypercore import Hypergraph, degrees
from .sheaf import DIAGONAL, Sheaf

SINGULAR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """An (n d) x (n d) operator stored as d x d blocks at sorted (row, col) slots."""

    n: int
    d: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.rows), self.d, self.d):
            raise ShapeError(f"block values have shape {self.values.shape}, expected ({len(self.rows)}, {self.d}, {self.d})")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n * self.d, self.n * self.d)

    @property
    def blocks(self) -> dict[tuple[int, int], np.ndarray]:
        return {(int(u), int(v)): b for u, v, b in zip(self.rows, self.cols, self.values)}

    def block(self, u: int, v: int) -> np.ndarray:
        hit = np.flatnonzero((self.rows == u) & (self.cols == v))
        return self.values[hit[0]].copy() if len(hit) else np.zeros((self.d, self.d))

    def to_dense(self) -> np.ndarray:
        n, d = self.n, self.d
        out = np.zeros((n, d, n, d))
        out[self.rows, :, self.cols, :] = self.values
        return out.reshape(n * d, n * d)

    @classmethod
    def identity(cls, n: int, d: int) -> "BlockMatrix":
        idx = np.arange(n)
        return cls(n, d, idx, idx.copy(), np.broadcast_to(np.eye(d), (n, d, d)).copy())

    @classmethod
    def zeros(cls, n: int, d: int) -> "BlockMatrix":
        empty = np.zeros(0, dtype=np.int64)
        return cls(n, d, empty, empty.copy(), np.zeros((0, d, d)))

    @classmethod
    def from_dense(cls, M: np.ndarray, d: int) -> "BlockMatrix":
        M = np.asarray(M, dtype=float)
        n = M.shape[0] // d
        if M.shape != (n * d, n * d):
            raise ShapeError(f"dense matrix {M.shape} is not a multiple of block size {d}")
        blocks = M.reshape(n, d, n, d).transpose(0, 2, 1, 3)
        rows, cols = np.nonzero(np.any(blocks != 0, axis=(2, 3)))
        return cls(n, d, rows, cols, blocks[rows, cols].copy())

    def transpose(self) -> "BlockMatrix":
        order = np.lexsort((self.rows, self.cols))
        return BlockMatrix(self.n, self.d, self.cols[order], self.rows[order],
                           self.values[order].transpose(0, 2, 1).copy())

    def to_coo_text(self) -> str:
        """One ``row col value`` line per nonzero scalar, sorted by (row, col)."""
        d, shape = self.d, self.values.shape
        r = np.broadcast_to(self.rows[:, None, None] * d + np.arange(d)[None, :, None], shape).ravel()
        c = np.broadcast_to(self.cols[:, None, None] * d + np.arange(d)[None, None, :], shape).ravel()
        v = self.values.ravel()
        keep = v != 0
        r, c, v = r[keep], c[keep], v[keep]
        order = np.lexsort((c, r))
        return "".join(f"{int(a)} {int(b)} {float(x)!r}\n" for a, b, x in zip(r[order], c[order], v[order]))


def read_coo_text(text: str, n: int, d: int) -> np.ndarray:
    """Dense matrix from the coordinate-list export."""
    M = np.zeros((n * d, n * d))
    for line in text.splitlines():
        if line.strip():
            a, b, x = line.split()
            M[int(a), int(b)] = float(x)
    return M


@dataclass(frozen=True, eq=False)
class BlockPlan:
    """Term list for assembling a Laplacian from per-incidence restriction maps.

    Diagonal terms put ``coef * F_i^T F_i`` at ``diag_slot``.  Off-diagonal
    terms put ``C = coef * F_l^T F_r`` at ``off_slot`` and ``C^T`` at
    ``off_slot_t``.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    diag_inc: np.ndarray
    diag_coef: np.ndarray
    diag_slot: np.ndarray
    off_left: np.ndarray
    off_right: np.ndarray
    off_coef: np.ndarray
    off_slot: np.ndarray
    off_slot_t: np.ndarray

    @property
    def num_slots(self) -> int:
        return len(self.rows)


def _make_plan(n, diag_node, diag_inc, diag_coef, off_a, off_b, off_left, off_right, off_coef) -> BlockPlan:
    i64 = lambda a: np.asarray(a, dtype=np.int64)  # noqa: E731
    diag_node, off_a, off_b = i64(diag_node), i64(off_a), i64(off_b)
    keys = np.concatenate([diag_node * n + diag_node, off_a * n + off_b, off_b * n + off_a])
    uniq, inv = np.unique(keys, return_inverse=True)
    nd, no = len(diag_node), len(off_a)
    return BlockPlan(
        n=n,
        rows=uniq // n,
        cols=uniq % n,
        diag_inc=i64(diag_inc),
        diag_coef=np.asarray(diag_coef, dtype=float),
        diag_slot=inv[:nd],
        off_left=i64(off_left),
        off_right=i64(off_right),
        off_coef=np.asarray(off_coef, dtype=float),
        off_slot=inv[nd: nd + no],
        off_slot_t=inv[nd + no:],
    )


def linear_plan(H: Hypergraph) -> BlockPlan:
    """Terms of the linear Laplacian: ``(delta-1)/delta F_v^T F_v`` on the diagonal,
    ``-1/delta F_u^T F_v`` off it, for every hyperedge and node pair."""
    nodes, edges = H.incidence
    offsets = H.edge_offsets()
    sizes = H.edge_sizes
    diag_coef = ((sizes - 1) / sizes)[edges] if len(edges) else np.zeros(0)
    off_left, off_right, off_coef = [], [], []
    for e in range(H.num_edges):
        start, size = offsets[e], sizes[e]
        w = -(1.0 / size)
        for i, j in combinations(range(start, start + size), 2):
            off_left.append(i)
            off_right.append(j)
            off_coef.append(w)
    off_left = np.asarray(off_left, dtype=np.int64)
    off_right = np.asarray(off_right, dtype=np.int64)
    return _make_plan(H.num_nodes, nodes, np.arange(len(nodes)), diag_coef,
                      nodes[off_left], nodes[off_right], off_left, off_right, off_coef)


def relation_plan(H: Hypergraph, relations: list[list[tuple[int, int]]]) -> BlockPlan:
    """Terms of a non-linear Laplacian from per-hyperedge node relations.

    ``relations[e]`` lists the pairs ``(a, b)`` connected because of hyperedge
    ``e``; each contributes ``1/delta_e`` times ``F_a^T F_a`` and ``F_b^T F_b``
    on the diagonal and ``-F_a^T F_b`` off it.
    """
    nodes, _ = H.incidence
    offsets = H.edge_offsets()
    sizes = H.edge_sizes
    diag_node, diag_inc, diag_coef = [], [], []
    off_left, off_right, off_coef = [], [], []
    for e, rel in enumerate(relations):
        pos = {int(v): offsets[e] + k for k, v in enumerate(H.hyperedges[e])}
        w = 1.0 / sizes[e]
        for a, b in rel:
            if a == b:
                continue
            if a > b:
                a, b = b, a
            ia, ib = pos[a], pos[b]
            diag_node += [a, b]
            diag_inc += [ia, ib]
            diag_coef += [w, w]
            off_left.append(ia)
            off_right.append(ib)
            off_coef.append(-w)
    off_left = np.asarray(off_left, dtype=np.int64)
    off_right = np.asarray(off_right, dtype=np.int64)
    return _make_plan(H.num_nodes, diag_node, diag_inc, diag_coef,
                      nodes[off_left], nodes[off_right], off_left, off_right, off_coef)


def assemble(plan: BlockPlan, maps: np.ndarray, d: int) -> BlockMatrix:
    values = np.zeros((plan.num_slots, d, d))
    if len(plan.diag_inc):
        F = maps[plan.diag_inc]
        C = (F.transpose(0, 2, 1) @ F) * plan.diag_coef[:, None, None]
        np.add.at(values, plan.diag_slot, C)
    if len(plan.off_left):
        C = (maps[plan.off_left].transpose(0, 2, 1) @ maps[plan.off_right]) * plan.off_coef[:, None, None]
        np.add.at(values, plan.off_slot, C)
        np.add.at(values, plan.off_slot_t, C.transpose(0, 2, 1))
    return BlockMatrix(plan.n, d, plan.rows, plan.cols, values)


def linear_laplacian(H: Hypergraph, S: Sheaf) -> BlockMatrix:
    S.check_host(H)
    return assemble(linear_plan(H), S.maps, S.stalk_dim)


@dataclass(frozen=True, eq=False)
class Normalizer:
    mode: str
    style: str
    epsilon: float
    D_blocks: np.ndarray
    D_inv_sqrt: np.ndarray
    D_inv: np.ndarray

    @property
    def transform(self) -> np.ndarray:
        return self.D_inv_sqrt if self.style == "symmetric" else self.D_inv


def _inv_powers(D: np.ndarray, diagonal: bool) -> tuple[np.ndarray, np.ndarray]:
    n, d, _ = D.shape
    if diagonal:
        lam = np.diagonal(D, axis1=1, axis2=2)
        if lam.size and lam.min() < SINGULAR_TOL:
            raise SingularBlock(f"normalizer block of node {int(np.argmin(lam.min(axis=1)))} is singular")
        idx = np.arange(d)
        inv_sqrt = np.zeros_like(D)
        inv = np.zeros_like(D)
        inv_sqrt[:, idx, idx] = 1.0 / np.sqrt(lam)
        inv[:, idx, idx] = 1.0 / lam
        return inv_sqrt, inv
    lam, Q = np.linalg.eigh(D)
    if lam.size and lam.min() < SINGULAR_TOL:
        raise SingularBlock(f"normalizer block of node {int(np.argmin(lam.min(axis=1)))} is singular")
    inv_sqrt = (Q * (lam ** -0.5)[:, None, :]) @ Q.transpose(0, 2, 1)
    inv = (Q * (1.0 / lam)[:, None, :]) @ Q.transpose(0, 2, 1)
    return 0.5 * (inv_sqrt + inv_sqrt.transpose(0, 2, 1)), 0.5 * (inv + inv.transpose(0, 2, 1))


def sheaf_degree_blocks(H: Hypergraph, S: Sheaf) -> np.ndarray:
    """``sum_{e ∋ v} F_{v,e}^T F_{v,e}`` for every node, shape (n, d, d)."""
    nodes, _ = H.incidence
    d = S.stalk_dim
    D = np.zeros((H.num_nodes, d, d))
    if len(nodes):
        np.add.at(D, nodes, S.maps.transpose(0, 2, 1) @ S.maps)
    return D


def normalizer(H: Hypergraph, S: Sheaf, mode: str = "sheaf", style: str = "symmetric",
               epsilon: float = 1e-6) -> Normalizer:
    if epsilon < 0:
        raise ValidationError("epsilon must be nonnegative")
    if style not in ("symmetric", "asymmetric"):
        raise ValidationError(f"unknown normalization style {style!r}")
    S.check_host(H)
    d = S.stalk_dim
    eye = np.eye(d)
    if mode == "sheaf":
        D = sheaf_degree_blocks(H, S) + epsilon * eye
        diagonal = S.kind.tag == DIAGONAL
    elif mode == "degree":
        deg = degrees(H).node_degrees.astype(float)
        deg = np.where(deg == 0, epsilon, deg)
        D = deg[:, None, None] * eye
        diagonal = True
    else:
        raise ValidationError(f"unknown normalization mode {mode!r}")
    inv_sqrt, inv = _inv_powers(D, diagonal)
    return Normalizer(mode, style, float(epsilon), D, inv_sqrt, inv)


def _mirror_slots(L: BlockMatrix) -> np.ndarray | None:
    """Index of the (v, u) slot for every (u, v) slot, or None if the pattern is not symmetric."""
    keys = L.rows.astype(np.int64) * L.n + L.cols
    twin = L.cols.astype(np.int64) * L.n + L.rows
    order = np.argsort(keys, kind="stable")
    pos = np.searchsorted(keys, twin, sorter=order)
    pos = np.minimum(pos, len(keys) - 1)
    idx = order[pos] if len(keys) else pos
    if len(keys) and not np.array_equal(keys[idx], twin):
        return None
    return idx


def normalize(L: BlockMatrix, N: Normalizer) -> BlockMatrix:
    """``D^{-1/2} L D^{-1/2}`` (symmetric) or ``D^{-1} L`` (asymmetric)."""
    if N.D_blocks.shape != (L.n, L.d, L.d):
        raise ShapeError(f"normalizer blocks {N.D_blocks.shape} do not match operator ({L.n}, {L.d}, {L.d})")
    if N.style == "symmetric":
        S = N.D_inv_sqrt
        values = (S[L.rows] @ L.values) @ S[L.cols]
        mirror = _mirror_slots(L)
        if mirror is not None:
            # compute each pair once so block(v,u) == block(u,v)^T holds bit for bit
            lower = L.rows > L.cols
            values[lower] = values[mirror[lower]].transpose(0, 2, 1)
            diag = L.rows == L.cols
            values[diag] = 0.5 * (values[diag] + values[diag].transpose(0, 2, 1))
    else:
        values = N.D_inv[L.rows] @ L.values
    return BlockMatrix(L.n, L.d, L.rows, L.cols, values)


def _as_stalks(x, n: int, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != n * d:
        raise ShapeError(f"signal needs {n * d} rows, got shape {x.shape}")
    return x.reshape(n, d, x.shape[1])


def stalk_images(H: Hypergraph, S: Sheaf, x, N: Normalizer | None = None) -> np.ndarray:
    """``F_{v,e} D_v^{-1/2} x_v`` for every incidence, shape (nnz, d, f)."""
    n, d = H.num_nodes, S.stalk_dim
    X = _as_stalks(x, n, d)
    if N is not None:
        X = N.D_inv_sqrt @ X
    nodes, _ = H.incidence
    return S.maps @ X[nodes]


@dataclass(frozen=True)
class DiscrepantPair:
    u: int
    v: int
    mediators: tuple[int, ...]
    distance: float
    ties: int = 1


def _edge_pairs(H: Hypergraph, images: np.ndarray):
    """Yield (edge, node tuple, local pair indices, squared distances) per hyperedge."""
    offsets = H.edge_offsets()
    for e, members in enumerate(H.hyperedges):
        block = images[offsets[e]: offsets[e + 1]]
        k = len(members)
        if k < 2:
            yield e, members, None, None
            continue
        iu, iv = np.triu_indices(k, 1)
        diff = block[iu] - block[iv]
        dist = np.einsum("kij,kij->k", diff, diff)
        yield e, members, (iu, iv), dist


def discrepant_pairs(H: Hypergraph, S: Sheaf, x, N: Normalizer | None = None, seed: int = 0) -> list[DiscrepantPair]:
    """Most discrepant node pair of every hyperedge, measured in the hyperedge stalk.

    Distances are squared Frobenius norms over all channels.  Exact ties are
    broken uniformly at random from ``seed``.  Single-node hyperedges report
    the pair ``(v, v)`` at distance 0.
    """
    S.check_host(H)
    return pairs_from_images(H, stalk_images(H, S, x, N), seed)


def pairs_from_images(H: Hypergraph, images: np.ndarray, seed: int = 0) -> list[DiscrepantPair]:
    """:func:`discrepant_pairs` given precomputed per-incidence stalk images (nnz, d, f)."""
    rng = np.random.default_rng(seed)
    out = []
    for e, members, idx, dist in _edge_pairs(H, images):
        if idx is None:
            v = members[0]
            out.append(DiscrepantPair(v, v, (), 0.0))
            continue
        best = dist.max()
        hits = np.flatnonzero(dist == best)
        pick = hits[rng.integers(len(hits))] if len(hits) > 1 else hits[0]
        u, v = members[idx[0][pick]], members[idx[1][pick]]
        med = tuple(k for k in members if k != u and k != v)
        out.append(DiscrepantPair(u, v, med, float(best), len(hits)))
    return out


def pair_relations(pairs: list[DiscrepantPair], mediators: bool) -> list[list[tuple[int, int]]]:
    rel = []
    for p in pairs:
        r = [(p.u, p.v)]
        if mediators:
            for k in p.mediators:
                r += [(p.u, k), (p.v, k)]
        rel.append(r)
    return rel


def nonlinear_laplacian(H: Hypergraph, S: Sheaf, x, mediators: bool = False, N: Normalizer | None = None,
                        seed: int = 0) -> BlockMatrix:
    """Unnormalized non-linear Laplacian at signal ``x``.

    Pairs are selected on ``D^{-1/2} x`` when ``N`` is given; normalize the
    result with :func:`normalize` to get the normalized operator.
    """
    pairs = discrepant_pairs(H, S, x, N, seed)
    plan = relation_plan(H, pair_relations(pairs, mediators))
    return assemble(plan, S.maps, S.stalk_dim)


def apply(M: BlockMatrix, X) -> np.ndarray:
    """Block-sparse product ``M @ X`` summed in ascending block order."""
    X = np.asarray(X, dtype=float)
    vector = X.ndim == 1
    Xs = _as_stalks(X, M.n, M.d)
    out = np.zeros_like(Xs)
    if len(M.rows):
        np.add.at(out, M.rows, M.values @ Xs[M.cols])
    out = out.reshape(M.n * M.d, -1)
    return out[:, 0] if vector else out
