"""Variational multi-coherent-state dynamics of open spin-1/2 lattices."""

from .ansatz import VariationalState, evaluate_q, init_product_state, renormalize
from .eom import EomConfig, assemble_force, assemble_tensor, solve_theta_dot
from .integrator import extract_steady_state, rk4_step, run_dynamics
from .kernels import ModelParams, liouville_generating, overlap_generating
from .lattice import build_lattice, translation_group

__version__ = "0.1.0"

__all__ = [
    "EomConfig",
    "ModelParams",
    "VariationalState",
    "assemble_force",
    "assemble_tensor",
    "build_lattice",
    "evaluate_q",
    "extract_steady_state",
    "init_product_state",
    "liouville_generating",
    "overlap_generating",
    "renormalize",
    "rk4_step",
    "run_dynamics",
    "solve_theta_dot",
    "translation_group",
]
