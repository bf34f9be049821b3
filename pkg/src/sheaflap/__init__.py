"""Cellular sheaves on hypergraphs: Laplacians, energies, diffusion and networks."""

from .energy import dirichlet_energy, quadratic_form, total_variation
from .hypercore import Hypergraph, degrees, dumps_hypergraph, incidence_pairs, load_hypergraph, loads_hypergraph
from .lap import (BlockMatrix, apply, discrepant_pairs, linear_laplacian, nonlinear_laplacian, normalize,
                  normalizer)
from .sheaf import MapKind, Sheaf, materialize, predict_sheaf, random_sheaf, trivial_sheaf
from .spectral import eigenvalues_sym, lambda_star

__version__ = "0.1.0"
