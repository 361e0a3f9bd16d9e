"""Discretized mean field games: FPK flows, occupation-measure best responses and equilibria.

Curves are arrays of shape (K + 1, n^d), controls (K, n^d, control_dim).
"""

from ._core import (
    NumericalError,
    Scenario,
    ValidationError,
    beta_vw,
    catalog_names,
    kr_distance,
    legendre,
)

__all__ = [
    "NumericalError",
    "Scenario",
    "ValidationError",
    "beta_vw",
    "catalog_names",
    "kr_distance",
    "legendre",
]
