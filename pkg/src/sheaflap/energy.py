"""Sheaf Dirichlet energy and sheaf total variation, computed from their pair sums.

These never touch the Laplacian matrices, which makes them usable as
independent checks on :mod:`sheaflap.lap`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hypercore import Hypergraph
from .lap import BlockMatrix, Normalizer, apply, stalk_images
from .sheaf import Sheaf

DIRICHLET = "dirichlet"
TOTAL_VARIATION = "total_variation"


@dataclass(frozen=True)
class EnergyValue:
    value: float
    kind: str

    def __float__(self):
        return self.value


def _edge_blocks(H: Hypergraph, S: Sheaf, N: Normalizer | None, x):
    S.check_host(H)
    images = stalk_images(H, S, x, N)
    offsets = H.edge_offsets()
    for e in range(H.num_edges):
        yield len(H.hyperedges[e]), images[offsets[e]: offsets[e + 1]]


def dirichlet_energy(H: Hypergraph, S: Sheaf, N: Normalizer | None, x) -> EnergyValue:
    """½ Σ_e 1/δ_e Σ_{u≠v ∈ e} ‖F_v D_v^{-1/2} x_v − F_u D_u^{-1/2} x_u‖², over ordered pairs."""
    total = 0.0
    for size, block in _edge_blocks(H, S, N, x):
        diff = block[:, None] - block[None, :]
        total += 0.5 / size * float(np.sum(diff * diff))
    return EnergyValue(total, DIRICHLET)


def total_variation(H: Hypergraph, S: Sheaf, N: Normalizer | None, x) -> EnergyValue:
    """½ Σ_e 1/δ_e max_{u,v ∈ e} ‖F_v D_v^{-1/2} x_v − F_u D_u^{-1/2} x_u‖²."""
    total = 0.0
    for size, block in _edge_blocks(H, S, N, x):
        diff = block[:, None] - block[None, :]
        total += 0.5 / size * float(np.sum(diff * diff, axis=(2, 3)).max())
    return EnergyValue(total, TOTAL_VARIATION)


def quadratic_form(M: BlockMatrix, x) -> float:
    """Σ over channels of xᵀ M x."""
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * apply(M, x)))
