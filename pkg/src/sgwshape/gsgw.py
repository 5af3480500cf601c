"""Global shape descriptor: area-weighted aggregation of vertex signatures.

A shape's descriptor is g = S a, the signature matrix times the vertex
area vector. One length-p vector summarizes the whole mesh, comparable
across shapes computed at the same resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParam
from .sgws import SignatureMatrix, signature_length

__all__ = ["GsgwVector", "aggregate", "gsgw_distance"]


@dataclass(frozen=True)
class GsgwVector:
    """Global descriptor of one shape.

    Attributes
    ----------
    values : (p,) float64, finite and nonnegative
    R : int
        Resolution the signature was computed at.
    mesh_hash : str
        Content hash of the source mesh, "" when unknown.
    """

    values: np.ndarray
    R: int
    mesh_hash: str = ""

    def __post_init__(self):
        self.values.setflags(write=False)
        if self.values.shape != (signature_length(self.R),):
            raise InvalidParam(
                f"descriptor has length {self.values.shape}, "
                f"expected ({signature_length(self.R)},) for R={self.R}"
            )
        if not np.isfinite(self.values).all():
            raise InvalidParam("descriptor entries must be finite")

    @property
    def p(self) -> int:
        return self.values.shape[0]


def aggregate(
    sig: SignatureMatrix, areas, mesh_hash: str = "", normalize: bool = False
) -> GsgwVector:
    """Aggregate per-vertex signatures into one descriptor, g = S a.

    Parameters
    ----------
    sig : SignatureMatrix
    areas : (m,) positive vertex areas
    mesh_hash : str
        Carried into the result for cache keying.
    normalize : bool
        Divide by the total area, making the descriptor comparable across
        tessellation densities. Off by default.
    """
    a = np.asarray(areas, dtype=np.float64)
    if a.shape != (sig.m,):
        raise DimensionMismatch(
            f"area vector has shape {a.shape}, signature matrix has {sig.m} columns"
        )
    if (a <= 0).any():
        raise InvalidParam("vertex areas must be positive")
    g = sig.values @ a
    if normalize:
        g = g / a.sum()
    return GsgwVector(g, R=sig.R, mesh_hash=mesh_hash)


def gsgw_distance(g1: GsgwVector, g2: GsgwVector) -> float:
    """Euclidean distance between two descriptors of equal resolution."""
    if g1.R != g2.R or g1.p != g2.p:
        raise DimensionMismatch(
            f"descriptors disagree: R={g1.R} p={g1.p} vs R={g2.R} p={g2.p}"
        )
    return float(np.linalg.norm(g1.values - g2.values))
