"""Full-batch node-classification training with Adam."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..energy import dirichlet_energy
from ..errors import ConfigError
from ..hypercore import Hypergraph
from ..lap import normalizer
from ..sheaf import trivial_sheaf
from . import autograd as ag
from .model import ModelConfig, SheafHyperNet


class Adam:
    """Adam with L2 weight decay folded into the gradient."""

    def __init__(self, params: dict, lr=0.01, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.0):
        self.params = params
        self.lr, self.betas, self.eps, self.weight_decay = lr, betas, eps, weight_decay
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.betas
        for k, p in self.params.items():
            g = grads[k]
            if self.weight_decay:
                g = g + self.weight_decay * p.data
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            m_hat = self.m[k] / (1 - b1 ** self.t)
            v_hat = self.v[k] / (1 - b2 ** self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainReport:
    epochs: list[dict] = field(default_factory=list)
    test_acc: float = 0.0
    best_epoch: int = 0
    dirichlet_probe: float = 0.0

    def to_json(self) -> str:
        obj = {"epochs": self.epochs, "test_acc": self.test_acc, "dirichlet_probe": self.dirichlet_probe}
        return json.dumps(obj, separators=(",", ":"))

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


def accuracy(pred: np.ndarray, labels: np.ndarray, index: np.ndarray) -> float:
    if len(index) == 0:
        return 0.0
    return float(np.mean(pred[index] == labels[index]))


def dirichlet_probe(model: SheafHyperNet, H: Hypergraph, X) -> float:
    """Trivial-sheaf, degree-normalized Dirichlet energy of the last-layer node representations."""
    rep = model.representations(H, X)
    triv = trivial_sheaf(H)
    return dirichlet_energy(H, triv, normalizer(H, triv, "degree", "symmetric"), rep).value


def loss_and_grads(model: SheafHyperNet, H: Hypergraph, X, labels, train_idx, rng=None, training=True, step=0):
    logits, _ = model.forward(H, X, training=training, rng=rng, step=step)
    loss = ag.softmax_cross_entropy(logits, labels, train_idx)
    names = list(model.params)
    grads = ag.grad([model.params[k] for k in names], loss)
    return float(loss.data), dict(zip(names, grads))


def train(H: Hypergraph, splits, cfg: ModelConfig, log=None) -> tuple[TrainReport, SheafHyperNet]:
    """Train on ``splits = (train, val, test)``; test accuracy is read at the best validation epoch."""
    if H.labels is None or H.features is None:
        raise ConfigError("training needs node features and labels")
    train_idx, val_idx, test_idx = (np.asarray(s, dtype=np.int64) for s in splits)
    if (set(train_idx.tolist()) & set(val_idx.tolist())) or (set(train_idx.tolist()) & set(test_idx.tolist())) \
            or (set(val_idx.tolist()) & set(test_idx.tolist())):
        raise ConfigError("splits must be disjoint")
    cfg.validate()
    labels = np.asarray(H.labels)
    num_classes = int(labels.max()) + 1
    X = H.features
    model = SheafHyperNet(cfg, X.shape[1], num_classes)
    opt = Adam(model.params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))

    report = TrainReport()
    pred = model.predict(H, X)
    best_val = accuracy(pred, labels, val_idx)
    report.test_acc = accuracy(pred, labels, test_idx)
    best_state = model.get_state()
    for epoch in range(1, cfg.epochs + 1):
        loss, grads = loss_and_grads(model, H, X, labels, train_idx, rng, True, epoch)
        opt.step(grads)
        pred = model.predict(H, X)
        val = accuracy(pred, labels, val_idx)
        report.epochs.append({"epoch": epoch, "train_loss": loss, "val_acc": val})
        if val > best_val:
            best_val = val
            report.best_epoch = epoch
            report.test_acc = accuracy(pred, labels, test_idx)
            best_state = model.get_state()
        if log is not None:
            log(f"epoch {epoch:3d} loss {loss:.4f} val {val:.3f}")
    model.set_state(best_state)
    report.dirichlet_probe = dirichlet_probe(model, H, X)
    return report, model
