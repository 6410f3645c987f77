"""Sobol' matrices of multi-output Gaussian-process surrogates."""

from ._core import (
    DivisionByZero,
    DomainError,
    Error,
    FactorizationFailure,
    IoError,
    NegativeQ,
    OddRowCount,
    Surrogate,
    ZeroVariance,
    closed_table,
    latin_hypercube,
    mnu9,
    oracle_sobol_matrix,
    sobol_reports,
)

__all__ = [
    "DivisionByZero",
    "DomainError",
    "Error",
    "FactorizationFailure",
    "IoError",
    "NegativeQ",
    "OddRowCount",
    "Surrogate",
    "ZeroVariance",
    "closed_table",
    "latin_hypercube",
    "mnu9",
    "oracle_sobol_matrix",
    "sobol_reports",
]
