"""Contextual hypergraph stochastic block model for heterophily experiments.

Two equal classes; every hyperedge holds exactly ``beta`` class-0 nodes and
``cardinality - beta`` class-1 nodes, and node features are Gaussian around a
label-dependent mean.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .hypercore import Hypergraph


@dataclass(frozen=True)
class SynthConfig:
    num_nodes: int = 5000
    num_hyperedges: int = 1000
    cardinality: int = 15
    beta: int = 7
    feature_dim: int = 10
    mean_separation: float = 1.0
    noise_std: float = 1.0
    seed: int = 0

    @property
    def alpha(self) -> int:
        return min(self.beta, self.cardinality - self.beta)

    def validate(self) -> None:
        if self.num_nodes < 2 or self.num_nodes % 2:
            raise ConfigError("num_nodes must be an even integer >= 2")
        if self.num_hyperedges < 1:
            raise ConfigError("num_hyperedges must be positive")
        if self.cardinality < 1:
            raise ConfigError("cardinality must be positive")
        if not 0 <= self.beta <= self.cardinality:
            raise ConfigError(f"beta must lie in [0, {self.cardinality}]")
        half = self.num_nodes // 2
        if self.beta > half or self.cardinality - self.beta > half:
            raise ConfigError(f"a class holds only {half} nodes; cannot draw {max(self.beta, self.cardinality - self.beta)}")
        if self.feature_dim < 1:
            raise ConfigError("feature_dim must be positive")
        if self.mean_separation <= 0 or self.noise_std <= 0:
            raise ConfigError("mean_separation and noise_std must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def class_means(cfg: SynthConfig) -> np.ndarray:
    mu = np.zeros((2, cfg.feature_dim))
    mu[0, 0] = cfg.mean_separation / 2
    mu[1, 0] = -cfg.mean_separation / 2
    return mu


def generate(cfg: SynthConfig) -> Hypergraph:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    half = cfg.num_nodes // 2
    labels = np.repeat([0, 1], half)
    class0 = np.arange(half)
    class1 = np.arange(half, cfg.num_nodes)
    edges = []
    for _ in range(cfg.num_hyperedges):
        a = rng.choice(class0, size=cfg.beta, replace=False)
        b = rng.choice(class1, size=cfg.cardinality - cfg.beta, replace=False)
        edges.append(np.concatenate([a, b]).tolist())
    noise = rng.standard_normal((cfg.num_nodes, cfg.feature_dim)) * cfg.noise_std
    features = class_means(cfg)[labels] + noise
    return Hypergraph(cfg.num_nodes, edges, features, labels)


def split(n: int, fractions=(0.5, 0.25, 0.25), seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded random train/val/test partition; train and val sizes are floored."""
    fr = np.asarray(fractions, dtype=float)
    if fr.shape != (3,) or np.any(fr <= 0) or abs(fr.sum() - 1.0) > 1e-9:
        raise ConfigError("fractions must be three positive numbers summing to 1")
    if n < 0:
        raise ConfigError("n must be nonnegative")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(fr[0] * n + 1e-9))
    n_val = int(np.floor(fr[1] * n + 1e-9))
    return (np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_val]),
            np.sort(perm[n_train + n_val:]))
