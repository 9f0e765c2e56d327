"""Annular-sector cross-section of a slit-patterned tube.

Only the uncut spine (central angle ``uncut_angle``) carries load, so the
neutral layer sits at the sector centroid rather than on the tube axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidGeometryError

#: 304 stainless steel, MPa (N/mm^2)
DEFAULT_YOUNGS_MODULUS = 193000.0

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TubeCrossSection:
    """One tube's cross-section. Lengths in mm, angle in rad, modulus in MPa."""

    inner_radius: float
    outer_radius: float
    uncut_angle: float
    youngs_modulus: float = DEFAULT_YOUNGS_MODULUS

    def __post_init__(self):
        if not (0.0 < self.inner_radius < self.outer_radius):
            raise InvalidGeometryError(
                f"need 0 < inner_radius < outer_radius, got {self.inner_radius}, {self.outer_radius}"
            )
        if not (0.0 < self.uncut_angle <= TWO_PI):
            raise InvalidGeometryError(f"uncut_angle must lie in (0, 2*pi], got {self.uncut_angle}")
        if not self.youngs_modulus > 0.0:
            raise InvalidGeometryError(f"youngs_modulus must be positive, got {self.youngs_modulus}")

    @property
    def neutral_offset(self) -> float:
        return neutral_offset(self)

    @property
    def second_moment(self) -> float:
        return second_moment(self)

    @property
    def bending_rigidity(self) -> float:
        return self.youngs_modulus * second_moment(self)


def _sector_centroid(ri: float, ro: float, beta: float) -> float:
    return (4.0 / 3.0) * (ro**3 - ri**3) * math.sin(0.5 * beta) / ((ro**2 - ri**2) * beta)


def _beta_minus_sin(beta: float) -> float:
    # series for small angles, where beta - sin(beta) cancels catastrophically
    if beta < 0.05:
        b2 = beta * beta
        return beta * b2 / 6.0 * (1.0 - b2 / 20.0 * (1.0 - b2 / 42.0 * (1.0 - b2 / 72.0)))
    return beta - math.sin(beta)


def _sector_second_moment(ri: float, ro: float, beta: float) -> float:
    return 0.25 * (ro**4 - ri**4) * 0.5 * _beta_minus_sin(beta)


def neutral_offset(cs: TubeCrossSection) -> float:
    """Distance (mm) from the tube axis to the centroid of the uncut sector."""
    if cs.uncut_angle == TWO_PI:
        return 0.0
    return _sector_centroid(cs.inner_radius, cs.outer_radius, cs.uncut_angle)


def second_moment(cs: TubeCrossSection) -> float:
    """Lateral second moment of area (mm^4) of the uncut sector about the tube axis.

    The lateral coordinate is ``r sin(theta)`` with ``theta`` measured from the
    spine's symmetry line, so a full annulus gives ``pi (Ro^4 - Ri^4) / 4``.
    """
    if cs.uncut_angle == TWO_PI:
        return 0.25 * math.pi * (cs.outer_radius**4 - cs.inner_radius**4)
    return _sector_second_moment(cs.inner_radius, cs.outer_radius, cs.uncut_angle)
