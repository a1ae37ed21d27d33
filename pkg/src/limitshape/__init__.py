"""limitshape: gradient-constrained convex minimizers and lozenge tiling limit shapes."""

#makes package exports explicit for downstream imports
from . import (
    artifacts,
    config,
    diagnostics,
    geometry,
    lattice,
    lexer,
    lobachevsky,
    mesh,
    obstacles,
    parser,
    pipeline,
    report,
    sampler,
    solver,
    syntax,
    tension,
    token,
)

__all__ = [
    "artifacts",
    "config",
    "diagnostics",
    "geometry",
    "lattice",
    "lexer",
    "lobachevsky",
    "mesh",
    "obstacles",
    "parser",
    "pipeline",
    "report",
    "sampler",
    "solver",
    "syntax",
    "tension",
    "token",
]
