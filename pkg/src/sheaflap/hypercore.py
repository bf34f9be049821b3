"""Hypergraph data model, degrees, incidence layout and the JSON dataset format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Sequence

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "Hypergraph",
    "DegreeProfile",
    "load_hypergraph",
    "loads_hypergraph",
    "dumps_hypergraph",
    "save_hypergraph",
    "degrees",
    "incidence_pairs",
]


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """An undirected hypergraph on nodes ``0..num_nodes-1``.

    Hyperedges are stored as sorted tuples so that the incidence layout is
    stable.  Features (``n x f``) and labels (length ``n``) are optional.
    """

    num_nodes: int
    hyperedges: tuple[tuple[int, ...], ...]
    features: np.ndarray | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        n = self.num_nodes
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ValidationError(f"num_nodes must be a positive integer, got {n!r}")
        object.__setattr__(self, "num_nodes", int(n))
        edges = []
        for i, e in enumerate(self.hyperedges):
            members = [int(v) for v in e]
            if not members:
                raise ValidationError(f"hyperedge {i} is empty")
            if len(set(members)) != len(members):
                raise ValidationError(f"hyperedge {i} repeats a node: {members}")
            for v in members:
                if v < 0 or v >= n:
                    raise ValidationError(f"hyperedge {i} references node {v} outside [0, {n})")
            edges.append(tuple(sorted(members)))
        object.__setattr__(self, "hyperedges", tuple(edges))

        if self.features is not None:
            feats = np.array(self.features, dtype=float)
            if feats.ndim != 2 or feats.shape[0] != n:
                raise ValidationError(f"features must be an {n} x f matrix, got shape {feats.shape}")
            feats.setflags(write=False)
            object.__setattr__(self, "features", feats)
        if self.labels is not None:
            labels = np.array(self.labels)
            if labels.ndim != 1 or labels.shape[0] != n:
                raise ValidationError(f"labels must have length {n}, got shape {labels.shape}")
            if labels.size and not np.issubdtype(labels.dtype, np.integer):
                if not np.all(labels == np.round(labels)):
                    raise ValidationError("labels must be integers")
            labels = labels.astype(np.int64)
            if labels.size and labels.min() < 0:
                raise ValidationError("labels must be nonnegative class indices")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def num_edges(self) -> int:
        return len(self.hyperedges)

    @cached_property
    def edge_sizes(self) -> np.ndarray:
        return np.array([len(e) for e in self.hyperedges], dtype=np.int64)

    @cached_property
    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """Node and hyperedge index arrays in canonical incidence order."""
        nodes = np.fromiter((v for e in self.hyperedges for v in e), dtype=np.int64)
        edges = np.repeat(np.arange(self.num_edges, dtype=np.int64), self.edge_sizes)
        return nodes, edges

    @property
    def num_incidences(self) -> int:
        return int(self.edge_sizes.sum())

    def edge_offsets(self) -> np.ndarray:
        """Start index of each hyperedge's block in the incidence layout (length m+1)."""
        return np.concatenate([[0], np.cumsum(self.edge_sizes)])

    def relabel(self, perm: Sequence[int]) -> "Hypergraph":
        """Return the hypergraph with node ``v`` renamed to ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        feats = None if self.features is None else self.features[inv]
        labels = None if self.labels is None else self.labels[inv]
        edges = [[int(perm[v]) for v in e] for e in self.hyperedges]
        return Hypergraph(self.num_nodes, edges, feats, labels)

    def with_features(self, features, labels=None) -> "Hypergraph":
        return Hypergraph(self.num_nodes, self.hyperedges, features,
                          self.labels if labels is None else labels)

    def __eq__(self, other):
        if not isinstance(other, Hypergraph):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.shape == b.shape and bool(np.array_equal(a, b))

        return (self.num_nodes == other.num_nodes
                and self.hyperedges == other.hyperedges
                and same(self.features, other.features)
                and same(self.labels, other.labels))

    __hash__ = None


@dataclass(frozen=True)
class DegreeProfile:
    node_degrees: np.ndarray
    edge_degrees: np.ndarray


def degrees(H: Hypergraph) -> DegreeProfile:
    nodes, _ = H.incidence
    node_deg = np.bincount(nodes, minlength=H.num_nodes).astype(np.int64)
    return DegreeProfile(node_deg, H.edge_sizes.copy())


def incidence_pairs(H: Hypergraph) -> list[tuple[int, int]]:
    """(node, hyperedge) pairs ordered by hyperedge, then node ascending."""
    nodes, edges = H.incidence
    return list(zip(nodes.tolist(), edges.tolist()))


def _as_int(x, what):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError(f"{what} must be an integer, got {x!r}")
    return x


def _from_obj(obj) -> Hypergraph:
    if not isinstance(obj, dict):
        raise ParseError("dataset must be a JSON object")
    unknown = set(obj) - {"num_nodes", "hyperedges", "features", "labels"}
    if unknown:
        raise ParseError(f"unknown keys: {sorted(unknown)}")
    if "num_nodes" not in obj or "hyperedges" not in obj:
        raise ParseError("dataset needs 'num_nodes' and 'hyperedges'")
    n = _as_int(obj["num_nodes"], "num_nodes")
    raw_edges = obj["hyperedges"]
    if not isinstance(raw_edges, list) or not all(isinstance(e, list) for e in raw_edges):
        raise ParseError("'hyperedges' must be an array of arrays")
    edges = [[_as_int(v, "node index") for v in e] for e in raw_edges]

    features = obj.get("features")
    if features is not None:
        if not isinstance(features, list) or not all(isinstance(r, list) for r in features):
            raise ParseError("'features' must be an array of arrays")
        widths = {len(r) for r in features}
        if len(widths) > 1:
            raise ValidationError("feature rows have differing lengths")
        for row in features:
            for x in row:
                if isinstance(x, bool) or not isinstance(x, (int, float)):
                    raise ParseError(f"feature entries must be numbers, got {x!r}")
        features = np.array(features, dtype=float).reshape(len(features), widths.pop() if widths else 0)
    labels = obj.get("labels")
    if labels is not None:
        if not isinstance(labels, list):
            raise ParseError("'labels' must be an array")
        labels = np.array([_as_int(y, "label") for y in labels], dtype=np.int64)
    return Hypergraph(n, edges, features, labels)


def loads_hypergraph(text: str | bytes) -> Hypergraph:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"dataset is not UTF-8: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    return _from_obj(obj)


def load_hypergraph(source: IO[bytes] | IO[str] | str) -> Hypergraph:
    """Read a dataset from a path or an open stream."""
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return loads_hypergraph(fh.read())
    return loads_hypergraph(source.read())


def dumps_hypergraph(H: Hypergraph) -> str:
    """Canonical serialization: fixed key order, no whitespace, repr floats."""
    obj = {"num_nodes": H.num_nodes, "hyperedges": [list(e) for e in H.hyperedges]}
    if H.features is not None:
        obj["features"] = [[float(x) for x in row] for row in H.features]
    if H.labels is not None:
        obj["labels"] = [int(y) for y in H.labels]
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def save_hypergraph(H: Hypergraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_hypergraph(H))
