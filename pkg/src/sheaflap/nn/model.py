"""Sheaf hypergraph networks (linear and non-linear Laplacian variants).

A layer computes ``Y = ReLU((I - Δ)(I_n ⊗ W1) X W2)`` where ``X`` holds ``d``
stalk rows per node and ``Δ`` is the normalized sheaf Laplacian.  Restriction
maps are predicted from node and hyperedge features by a small perceptron,
or fixed to 1 for the trivial sheaf (which recovers HyperGNN / HyperGCN).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import ConfigError, ShapeError
from ..hypercore import Hypergraph, degrees
from ..lap import BlockMatrix, BlockPlan, linear_plan, pair_relations, pairs_from_images, relation_plan
from ..sheaf import DIAGONAL, EDGE_MODES, GENERAL, LOW_RANK, SQUASHES, MapKind
from . import autograd as ag
from .autograd import Tensor

VARIANTS = ("sheaf_gnn", "sheaf_gcn")
POLICIES = ("fixed_first_layer", "recompute_each_layer")


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "sheaf_gnn"
    stalk_dim: int = 2
    map_kind: MapKind = field(default_factory=MapKind.diagonal)
    layers: int = 2
    hidden_channels: int = 16
    learn_W1: bool = True
    sheaf_policy: str = "fixed_first_layer"
    norm_mode: str = "degree"
    norm_style: str = "symmetric"
    epsilon: float = 1e-6
    mediators: bool = True
    squash: str = "sigmoid"
    edge_mode: str = "mean-of-inputs"
    trivial_sheaf: bool = False
    dropout: float = 0.0
    lr: float = 0.01
    weight_decay: float = 0.0
    epochs: int = 100
    seed: int = 0

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.stalk_dim < 1 or self.layers < 1 or self.hidden_channels < 1:
            raise ConfigError("stalk_dim, layers and hidden_channels must be positive")
        if self.sheaf_policy not in POLICIES:
            raise ConfigError(f"sheaf_policy must be one of {POLICIES}")
        if self.norm_mode not in ("degree", "sheaf") or self.norm_style not in ("symmetric", "asymmetric"):
            raise ConfigError("normalization must be (degree|sheaf, symmetric|asymmetric)")
        if self.squash not in SQUASHES or self.edge_mode not in EDGE_MODES:
            raise ConfigError("unknown squash or hyperedge feature mode")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.lr < 0 or self.weight_decay < 0 or self.epsilon < 0:
            raise ConfigError("lr, weight_decay and epsilon must be nonnegative")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if self.trivial_sheaf and (self.stalk_dim != 1 or self.learn_W1):
            raise ConfigError("the trivial sheaf needs stalk_dim=1 and learn_W1=False")
        try:
            self.map_kind.check(self.stalk_dim)
        except Exception as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def trivial(cls, **overrides) -> "ModelConfig":
        """Classical HyperGNN / HyperGCN: d=1, unit maps, W1 = I."""
        base = dict(stalk_dim=1, map_kind=MapKind.diagonal(), learn_W1=False, trivial_sheaf=True)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["map_kind"] = self.map_kind.tag
        if self.map_kind.tag == LOW_RANK:
            out["rank"] = self.map_kind.rank
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelConfig":
        obj = dict(obj)
        kind = obj.pop("map_kind", "diagonal")
        rank = obj.pop("rank", None)
        if isinstance(kind, str):
            kind = MapKind.parse(kind, rank)
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown model options: {sorted(unknown)}")
        return cls(map_kind=kind, **obj)

    def with_(self, **kw) -> "ModelConfig":
        return replace(self, **kw)


def _glorot(rng, a, b):
    lim = np.sqrt(6.0 / (a + b))
    return rng.uniform(-lim, lim, size=(a, b))


def input_embed(X, d: int, f: int, W, b=None) -> Tensor:
    """Linear projection to ``d*f`` columns, reshaped to (n, d, f).

    Node ``v``, stalk row ``k``, channel ``c`` reads projected column ``k*f + c``.
    """
    X = ag.as_tensor(X)
    W = ag.as_tensor(W)
    if W.shape[1] != d * f:
        raise ShapeError(f"projection width {W.shape[1]} != d*f = {d * f}")
    Z = X @ W
    if b is not None:
        Z = Z + b
    return ag.reshape(Z, (X.shape[0], d, f))


def layer_forward(Xt, delta, W1, W2, rows=None, cols=None) -> Tensor:
    """``ReLU((I - Δ)(I ⊗ W1) Xt W2)`` for ``Xt`` of shape (n, d, f).

    ``delta`` is a :class:`BlockMatrix` or a tensor of block values with
    ``rows``/``cols``.  ``W1=None`` means the identity.
    """
    Xt = ag.as_tensor(Xt)
    if isinstance(delta, BlockMatrix):
        rows, cols, delta = delta.rows, delta.cols, delta.values
    if Xt.data.ndim != 3:
        raise ShapeError(f"layer input must be (n, d, f), got {Xt.shape}")
    Z = Xt @ W2
    if W1 is not None:
        Z = ag.kron_apply(W1, Z)
    if len(rows) == 0:
        return ag.relu(Z)
    return ag.relu(Z - ag.block_apply(delta, rows, cols, Z))


def assemble_tensor(plan: BlockPlan, F: Tensor) -> Tensor:
    """Differentiable twin of :func:`sheaflap.lap.assemble`."""
    d = F.shape[-1]
    S = plan.num_slots
    parts = []
    if len(plan.diag_inc):
        Fd = ag.gather(F, plan.diag_inc)
        C = (ag.transpose(Fd) @ Fd) * plan.diag_coef[:, None, None]
        parts.append(ag.scatter_add(C, plan.diag_slot, S))
    if len(plan.off_left):
        C = (ag.transpose(ag.gather(F, plan.off_left)) @ ag.gather(F, plan.off_right)) * plan.off_coef[:, None, None]
        parts.append(ag.scatter_add(C, plan.off_slot, S))
        parts.append(ag.scatter_add(ag.transpose(C), plan.off_slot_t, S))
    if not parts:
        return Tensor(np.zeros((0, d, d)))
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return out


def maps_from_params(P: Tensor, d: int, kind: MapKind) -> Tensor:
    """Differentiable :func:`sheaflap.sheaf.materialize_all`."""
    k = P.shape[0]
    if kind.tag == DIAGONAL:
        return ag.diag_embed(P)
    if kind.tag == GENERAL:
        return ag.reshape(P, (k, d, d))
    r = kind.rank
    A = ag.reshape(ag.slice_last(P, 0, d * r), (k, d, r))
    B = ag.reshape(ag.slice_last(P, d * r, 2 * d * r), (k, r, d))
    return A @ B + ag.diag_embed(ag.slice_last(P, 2 * d * r, 2 * d * r + d))


class SheafHyperNet:
    """SheafHyperGNN (``sheaf_gnn``) or SheafHyperGCN (``sheaf_gcn``).

    ``params`` maps names to leaf tensors; the forward pass is a pure function
    of them, the hypergraph and the input features.
    """

    def __init__(self, cfg: ModelConfig, in_dim: int, num_classes: int):
        cfg.validate()
        self.cfg = cfg
        self.in_dim = in_dim
        self.num_classes = num_classes
        rng = np.random.default_rng(cfg.seed)
        d, f = cfg.stalk_dim, cfg.hidden_channels
        p = {"embed.W": _glorot(rng, in_dim, d * f), "embed.b": np.zeros(d * f)}
        if not cfg.trivial_sheaf:
            k = cfg.map_kind.width(d)
            p["sheaf.W1"] = _glorot(rng, 2 * d * f, k)
            p["sheaf.b1"] = np.zeros(k)
            p["sheaf.W2"] = _glorot(rng, k, k)
            p["sheaf.b2"] = np.zeros(k)
            if cfg.edge_mode == "mean-of-transformed":
                p["sheaf.Wt"] = _glorot(rng, d * f, d * f)
                p["sheaf.bt"] = np.zeros(d * f)
        for i in range(cfg.layers):
            if cfg.learn_W1:
                p[f"layer{i}.W1"] = np.eye(d) + 0.1 * rng.standard_normal((d, d))
            p[f"layer{i}.W2"] = _glorot(rng, f, f)
        p["cls.W"] = _glorot(rng, d * f, num_classes)
        p["cls.b"] = np.zeros(num_classes)
        self.params = {name: ag.parameter(v) for name, v in p.items()}
        self._plans: dict[int, tuple] = {}

    # -- structure caches -------------------------------------------------
    def _structure(self, H: Hypergraph):
        key = id(H)
        if key not in self._plans:
            self._plans[key] = (H, linear_plan(H) if self.cfg.variant == "sheaf_gnn" else None,
                                degrees(H).node_degrees.astype(float))
        return self._plans[key][1:]

    # -- pieces of the forward pass ----------------------------------------
    def restriction_maps(self, H: Hypergraph, Xt: Tensor, X0: Tensor) -> Tensor:
        cfg = self.cfg
        d = cfg.stalk_dim
        nodes, edges = H.incidence
        if cfg.trivial_sheaf:
            return Tensor(np.ones((len(nodes), 1, 1)))
        n = H.num_nodes
        flat = ag.reshape(Xt, (n, -1))
        p = self.params
        if cfg.edge_mode == "mean-of-inputs":
            src = ag.reshape(X0, (n, -1))
        elif cfg.edge_mode == "mean-of-hidden":
            src = flat
        else:
            src = ag.relu(flat @ p["sheaf.Wt"] + p["sheaf.bt"])
        h = ag.segment_mean(ag.gather(src, nodes), edges, H.num_edges)
        Z = ag.concat([ag.gather(flat, nodes), ag.gather(h, edges)], axis=1)
        out = ag.relu(Z @ p["sheaf.W1"] + p["sheaf.b1"]) @ p["sheaf.W2"] + p["sheaf.b2"]
        out = ag.tanh(out) if cfg.squash == "tanh" else ag.sigmoid(out)
        return maps_from_params(out, d, cfg.map_kind)

    def normalizer_blocks(self, H: Hypergraph, F: Tensor, node_deg: np.ndarray) -> Tensor:
        """Per-node D^{-1/2} (symmetric) or D^{-1} (asymmetric) as a tensor (n, d, d)."""
        cfg = self.cfg
        d = cfg.stalk_dim
        n = H.num_nodes
        eye = np.eye(d)
        symmetric = cfg.norm_style == "symmetric"
        if cfg.norm_mode == "degree":
            deg = np.where(node_deg == 0, cfg.epsilon, node_deg)
            inv = 1.0 / np.sqrt(deg) if symmetric else 1.0 / deg
            return Tensor(inv[:, None, None] * eye)
        nodes, _ = H.incidence
        D = ag.scatter_add(ag.transpose(F) @ F, nodes, n) + cfg.epsilon * eye
        if cfg.map_kind.tag == DIAGONAL:
            diag = ag.diag_part(D)
            return ag.diag_embed(ag.rsqrt(diag) if symmetric else ag.reciprocal(diag))
        return ag.sym_inv_sqrt(D) if symmetric else ag.sym_inv(D)

    def laplacian(self, H: Hypergraph, F: Tensor, Snorm: Tensor, Xt: Tensor, pair_seed: int):
        """Normalized block values plus their (rows, cols) for the current layer."""
        plan, _ = self._structure(H)
        if plan is None:
            # pairs are compared on D^{-1/2} x; the asymmetric variant compares raw x
            nodes, _ = H.incidence
            Y = Snorm.data @ Xt.data if self.cfg.norm_style == "symmetric" else Xt.data
            images = F.data @ Y[nodes]
            pairs = pairs_from_images(H, images, pair_seed)
            plan = relation_plan(H, pair_relations(pairs, self.cfg.mediators))
        L = assemble_tensor(plan, F)
        if plan.num_slots == 0:
            return L, plan.rows, plan.cols
        if self.cfg.norm_style == "symmetric":
            vals = (ag.gather(Snorm, plan.rows) @ L) @ ag.gather(Snorm, plan.cols)
        else:
            vals = ag.gather(Snorm, plan.rows) @ L
        return vals, plan.rows, plan.cols

    # -- forward -----------------------------------------------------------
    def forward(self, H: Hypergraph, X, training: bool = False, rng: np.random.Generator | None = None,
                step: int = 0):
        """Return (logits, final representation) tensors."""
        cfg = self.cfg
        p = self.params
        d, f = cfg.stalk_dim, cfg.hidden_channels
        _, node_deg = self._structure(H)
        X0 = input_embed(np.asarray(X, dtype=float), d, f, p["embed.W"], p["embed.b"])
        Xt = X0
        F = Snorm = None
        for i in range(cfg.layers):
            if F is None or cfg.sheaf_policy == "recompute_each_layer":
                F = self.restriction_maps(H, Xt, X0)
                Snorm = self.normalizer_blocks(H, F, node_deg)
            pair_seed = int(np.random.SeedSequence([cfg.seed, step, i]).generate_state(1)[0])
            vals, rows, cols = self.laplacian(H, F, Snorm, Xt, pair_seed)
            W1 = p.get(f"layer{i}.W1")
            Xt = layer_forward(Xt, vals, W1, p[f"layer{i}.W2"], rows, cols)
            Xt = ag.dropout(Xt, cfg.dropout, rng, training)
        rep = ag.reshape(Xt, (H.num_nodes, d * f))
        logits = rep @ p["cls.W"] + p["cls.b"]
        return logits, Xt

    def predict(self, H: Hypergraph, X) -> np.ndarray:
        logits, _ = self.forward(H, X, training=False)
        return np.argmax(logits.data, axis=1)

    def representations(self, H: Hypergraph, X) -> np.ndarray:
        _, rep = self.forward(H, X, training=False)
        return rep.data.reshape(H.num_nodes, -1)

    def get_state(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def set_state(self, state: dict[str, np.ndarray]) -> None:
        for k, v in state.items():
            self.params[k].data = np.array(v, dtype=float)
