"""Simulation and verification tools for squared Bessel matrix processes on the PSD cone."""

from .sde import GridSpec, RngStream
from .symcore import eig, elementary_symmetric, rank_tol, spectral_apply
from .wallach import central_member, cone_sde_solvable, laplace_closed_form, noncentral_member

__all__ = [
    "GridSpec",
    "RngStream",
    "eig",
    "elementary_symmetric",
    "rank_tol",
    "spectral_apply",
    "central_member",
    "cone_sde_solvable",
    "laplace_closed_form",
    "noncentral_member",
]

__version__ = "0.1.0"
