"""Exact scalars, rational functions, exterior forms and sparse linear algebra."""

from .forms import ExteriorForm, compose_substitutions, exterior_derivative, pullback, wedge
from .linalg import Echelon, RankKernelImage, SparseMatrix, rank, rank_kernel_image, solve
from .polyfield import (
    MultiPoly,
    RationalFunction,
    SymbolicDomainError,
    coefficient_field,
    const,
    gen,
    render,
    substitute,
)
from .rational import ExactRational, format_rational, parse_rational

__all__ = [
    "ExactRational",
    "Echelon",
    "ExteriorForm",
    "MultiPoly",
    "RankKernelImage",
    "RationalFunction",
    "SparseMatrix",
    "SymbolicDomainError",
    "coefficient_field",
    "compose_substitutions",
    "const",
    "exterior_derivative",
    "format_rational",
    "gen",
    "parse_rational",
    "pullback",
    "rank",
    "rank_kernel_image",
    "render",
    "solve",
    "substitute",
    "wedge",
]
