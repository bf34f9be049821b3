"""Cellular sheaves on hypergraphs: one d x d restriction map per incidence pair.

Parameters are stored per incidence in canonical order (see
:func:`sheaflap.hypercore.incidence_pairs`).  :func:`materialize` turns a
parameter vector into its matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import HostMismatch, ParseError, ShapeError, ValidationError, WidthError
from .hypercore import Hypergraph

DIAGONAL = "diagonal"
LOW_RANK = "low_rank"
GENERAL = "general"

EDGE_MODES = ("mean-of-inputs", "mean-of-hidden", "mean-of-transformed")
SQUASHES = ("sigmoid", "tanh")


@dataclass(frozen=True)
class MapKind:
    tag: str
    rank: int | None = None

    def __post_init__(self):
        if self.tag not in (DIAGONAL, LOW_RANK, GENERAL):
            raise ValidationError(f"unknown map kind {self.tag!r}")
        if self.tag == LOW_RANK:
            if self.rank is None or int(self.rank) < 1:
                raise ValidationError("low-rank maps need rank >= 1")
        elif self.rank is not None:
            raise ValidationError(f"{self.tag} maps take no rank")

    @classmethod
    def diagonal(cls) -> "MapKind":
        return cls(DIAGONAL)

    @classmethod
    def low_rank(cls, r: int) -> "MapKind":
        return cls(LOW_RANK, int(r))

    @classmethod
    def general(cls) -> "MapKind":
        return cls(GENERAL)

    @classmethod
    def parse(cls, text: str, rank: int | None = None) -> "MapKind":
        """Accepts ``diag``/``diagonal``, ``general``/``gen``, ``lowrank``/``low_rank[:r]``."""
        t = text.lower().replace("-", "_")
        if t in ("diag", "diagonal"):
            return cls.diagonal()
        if t in ("gen", "general"):
            return cls.general()
        if t.startswith(("lowrank", "low_rank", "lr")):
            if ":" in t:
                rank = int(t.split(":", 1)[1])
            return cls.low_rank(1 if rank is None else rank)
        raise ValidationError(f"unknown map kind {text!r}")

    def width(self, d: int) -> int:
        """Number of predicted parameters per restriction map."""
        if self.tag == DIAGONAL:
            return d
        if self.tag == GENERAL:
            return d * d
        return 2 * d * self.rank + d

    def check(self, d: int) -> None:
        if d < 1:
            raise ValidationError(f"stalk dimension must be >= 1, got {d}")
        if self.tag == LOW_RANK and self.rank > d:
            raise ValidationError(f"rank {self.rank} exceeds stalk dimension {d}")


def materialize(params, d: int, kind: MapKind) -> np.ndarray:
    """Build the d x d restriction map encoded by ``params``.

    Low-rank vectors pack ``A`` (d x r, row-major), then ``B`` (r x d,
    row-major), then the diagonal correction ``c``; the map is ``A @ B + diag(c)``.
    """
    p = np.asarray(params, dtype=float)
    if p.shape != (kind.width(d),):
        raise WidthError(f"{kind.tag} map with d={d} needs {kind.width(d)} parameters, got shape {p.shape}")
    return materialize_all(p[None, :], d, kind)[0]


def materialize_all(params: np.ndarray, d: int, kind: MapKind) -> np.ndarray:
    """Vectorised :func:`materialize` over the rows of ``params`` -> (k, d, d)."""
    params = np.asarray(params, dtype=float)
    k = params.shape[0]
    if params.ndim != 2 or params.shape[1] != kind.width(d):
        raise WidthError(f"expected (k, {kind.width(d)}) parameters, got {params.shape}")
    if kind.tag == DIAGONAL:
        out = np.zeros((k, d, d))
        idx = np.arange(d)
        out[:, idx, idx] = params
        return out
    if kind.tag == GENERAL:
        return params.reshape(k, d, d).copy()
    r = kind.rank
    A = params[:, : d * r].reshape(k, d, r)
    B = params[:, d * r: 2 * d * r].reshape(k, r, d)
    out = A @ B
    idx = np.arange(d)
    out[:, idx, idx] += params[:, 2 * d * r:]
    return out


@dataclass(frozen=True, eq=False)
class Sheaf:
    """Restriction-map parameters for every incidence of a host hypergraph."""

    stalk_dim: int
    kind: MapKind
    params: np.ndarray
    _maps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.kind.check(self.stalk_dim)
        p = np.array(self.params, dtype=float).reshape(-1, self.kind.width(self.stalk_dim))
        p.setflags(write=False)
        object.__setattr__(self, "params", p)
        maps = materialize_all(p, self.stalk_dim, self.kind)
        maps.setflags(write=False)
        object.__setattr__(self, "_maps", maps)

    @property
    def maps(self) -> np.ndarray:
        """All restriction maps, shape (num_incidences, d, d)."""
        return self._maps

    def __len__(self):
        return self.params.shape[0]

    def check_host(self, H: Hypergraph) -> None:
        if len(self) != H.num_incidences:
            raise HostMismatch(f"sheaf has {len(self)} maps but hypergraph has {H.num_incidences} incidences")

    def to_json(self) -> str:
        obj = {"stalk_dim": self.stalk_dim, "kind": self.kind.tag}
        if self.kind.tag == LOW_RANK:
            obj["rank"] = self.kind.rank
        obj["params"] = [[float(x) for x in row] for row in self.params]
        return json.dumps(obj, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Sheaf":
        try:
            obj = json.loads(text)
            kind = MapKind(obj["kind"], obj.get("rank"))
            return cls(int(obj["stalk_dim"]), kind, np.array(obj["params"], dtype=float))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad sheaf document: {exc}") from exc

    def __eq__(self, other):
        if not isinstance(other, Sheaf):
            return NotImplemented
        return (self.stalk_dim == other.stalk_dim and self.kind == other.kind
                and np.array_equal(self.params, other.params))

    __hash__ = None


def trivial_sheaf(H: Hypergraph) -> Sheaf:
    """d = 1 with every restriction map equal to 1."""
    return Sheaf(1, MapKind.diagonal(), np.ones((H.num_incidences, 1)))


def constant_sheaf(H: Hypergraph, d: int) -> Sheaf:
    """Identity restriction maps with stalk dimension ``d``."""
    return Sheaf(d, MapKind.diagonal(), np.ones((H.num_incidences, d)))


def random_sheaf(H: Hypergraph, d: int, kind: MapKind, seed: int) -> Sheaf:
    kind.check(d)
    rng = np.random.default_rng(seed)
    return Sheaf(d, kind, rng.uniform(-1.0, 1.0, size=(H.num_incidences, kind.width(d))))


def edge_mean(H: Hypergraph, X: np.ndarray) -> np.ndarray:
    """Row-wise mean of ``X`` over the members of each hyperedge -> (m, f)."""
    X = np.asarray(X, dtype=float)
    nodes, edges = H.incidence
    out = np.zeros((H.num_edges, X.shape[1]))
    np.add.at(out, edges, X[nodes])
    return out / np.maximum(H.edge_sizes, 1)[:, None]


def hyperedge_features(H: Hypergraph, X, mode: str = "mean-of-inputs", hidden=None, transform=None) -> np.ndarray:
    """Hyperedge features by averaging node-level quantities.

    ``mean-of-inputs`` averages ``X``; ``mean-of-hidden`` averages ``hidden``
    (falling back to ``X``); ``mean-of-transformed`` averages ``transform(X)``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != H.num_nodes:
        raise ShapeError(f"expected {H.num_nodes} feature rows, got shape {X.shape}")
    if mode == "mean-of-inputs":
        return edge_mean(H, X)
    if mode == "mean-of-hidden":
        return edge_mean(H, X if hidden is None else hidden)
    if mode == "mean-of-transformed":
        if transform is None:
            raise ValidationError("mean-of-transformed needs a transform")
        return edge_mean(H, transform(X))
    raise ValidationError(f"unknown hyperedge feature mode {mode!r}")


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True, eq=False)
class SheafPredictor:
    """One-hidden-layer ReLU perceptron from ``x_v || h_e`` to map parameters.

    ``W1``: (2 f_h, k), ``W2``: (k, k) with k the map-kind width.  ``Wt``/``bt``
    define the node transform used by ``mean-of-transformed``.
    """

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    squash: str = "sigmoid"
    edge_mode: str = "mean-of-inputs"
    Wt: np.ndarray | None = None
    bt: np.ndarray | None = None

    def __post_init__(self):
        if self.squash not in SQUASHES:
            raise ValidationError(f"squash must be one of {SQUASHES}")
        if self.edge_mode not in EDGE_MODES:
            raise ValidationError(f"edge_mode must be one of {EDGE_MODES}")
        if self.edge_mode == "mean-of-transformed" and self.Wt is None:
            raise ValidationError("mean-of-transformed needs Wt/bt")

    @property
    def in_width(self) -> int:
        return self.W1.shape[0] // 2

    @property
    def out_width(self) -> int:
        return self.W2.shape[1]

    @classmethod
    def init(cls, f_h: int, d: int, kind: MapKind, seed: int, squash="sigmoid", edge_mode="mean-of-inputs",
             scale: float | None = None) -> "SheafPredictor":
        rng = np.random.default_rng(seed)
        k = kind.width(d)

        def glorot(a, b):
            lim = np.sqrt(6.0 / (a + b)) if scale is None else scale
            return rng.uniform(-lim, lim, size=(a, b))

        Wt = bt = None
        if edge_mode == "mean-of-transformed":
            Wt, bt = glorot(f_h, f_h), np.zeros(f_h)
        return cls(glorot(2 * f_h, k), np.zeros(k), glorot(k, k), np.zeros(k), squash, edge_mode, Wt, bt)

    @classmethod
    def zeros(cls, f_h: int, d: int, kind: MapKind, squash="sigmoid") -> "SheafPredictor":
        k = kind.width(d)
        return cls(np.zeros((2 * f_h, k)), np.zeros(k), np.zeros((k, k)), np.zeros(k), squash)

    def transform(self, X):
        return np.maximum(np.asarray(X) @ self.Wt + self.bt, 0.0)

    def __call__(self, Z: np.ndarray) -> np.ndarray:
        hidden = np.maximum(Z @ self.W1 + self.b1, 0.0)
        out = hidden @ self.W2 + self.b2
        return np.tanh(out) if self.squash == "tanh" else _sigmoid(out)


def predict_sheaf(H: Hypergraph, X, P: SheafPredictor, d: int, kind: MapKind, hidden=None) -> Sheaf:
    """Predict every restriction map from its node and hyperedge features."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != H.num_nodes:
        raise ShapeError(f"expected {H.num_nodes} feature rows, got shape {X.shape}")
    if X.shape[1] != P.in_width:
        raise ShapeError(f"predictor expects node width {P.in_width}, features have {X.shape[1]}")
    if P.out_width != kind.width(d):
        raise ShapeError(f"predictor emits {P.out_width} values, {kind.tag} d={d} needs {kind.width(d)}")
    transform = P.transform if P.edge_mode == "mean-of-transformed" else None
    h = hyperedge_features(H, X, P.edge_mode, hidden=hidden, transform=transform)
    nodes, edges = H.incidence
    Z = np.concatenate([X[nodes], h[edges]], axis=1)
    return Sheaf(d, kind, P(Z).reshape(len(nodes), -1))
