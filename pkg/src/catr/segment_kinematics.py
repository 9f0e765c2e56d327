"""Constant-curvature mapping for one push/pull segment.

Sign convention for the push/pull distance ``D_p``: positive pushes the inner
tube (bends "down", inherent direction 0), negative pulls it (bends "up",
inherent direction pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cross_section import TWO_PI, TubeCrossSection
from .errors import DegenerateGeometryError, InvalidGeometryError, OutOfStrokeError

#: below this bend angle the arc formulas switch to their series limits
SMALL_ANGLE = 1e-6

PUSHED = "pushed"
PULLED = "pulled"


@dataclass(frozen=True)
class SegmentSpec:
    """An assembled segment: outer tube, inner tube and actuation limits.

    ``pushpull_min``/``pushpull_max`` default to the stroke that produces
    ``max_bend_angle`` in either direction.
    """

    outer_cs: TubeCrossSection
    inner_cs: TubeCrossSection
    steerable_length: float = 30.0
    max_bend_angle: float = math.pi
    pushpull_min: float | None = None
    pushpull_max: float | None = None

    def __post_init__(self):
        if not self.steerable_length > 0:
            raise InvalidGeometryError("steerable_length must be positive")
        if not self.inner_cs.outer_radius < self.outer_cs.inner_radius:
            raise InvalidGeometryError(
                "inner tube does not fit: inner_cs.outer_radius must be < outer_cs.inner_radius"
            )
        if not self.max_bend_angle > 0:
            raise InvalidGeometryError("max_bend_angle must be positive")
        lo, hi = self.pushpull_bounds
        if not (lo < 0.0 < hi):
            raise InvalidGeometryError(f"need pushpull_min < 0 < pushpull_max, got ({lo}, {hi})")
        if max(-lo, hi) >= self.steerable_length:
            raise InvalidGeometryError("push/pull stroke must stay below the steerable length")

    @cached_property
    def d_o(self) -> float:
        return self.outer_cs.neutral_offset

    @cached_property
    def d_i(self) -> float:
        return self.inner_cs.neutral_offset

    @property
    def offset_sum(self) -> float:
        return self.d_o + self.d_i

    @cached_property
    def pushpull_bounds(self) -> tuple[float, float]:
        stroke = self.max_bend_angle * (self.outer_cs.neutral_offset + self.inner_cs.neutral_offset)
        lo = -stroke if self.pushpull_min is None else self.pushpull_min
        hi = stroke if self.pushpull_max is None else self.pushpull_max
        return float(lo), float(hi)

    @property
    def rigidity(self) -> float:
        """Composite bending rigidity E_o I_o + E_i I_i, N mm^2."""
        return self.outer_cs.bending_rigidity + self.inner_cs.bending_rigidity

    def arc_state(self, D_p: float, theta_M: float = 0.0) -> "ArcState":
        theta = bending_angle(D_p, self.d_o, self.d_i)
        L_o, L_i = bendable_lengths(self.steerable_length, D_p)
        L_b = backbone_length(theta, _mode(D_p), L_o, L_i, self.d_o, self.d_i)
        return ArcState(theta, direction_angle(theta_M, D_p), L_b)


@dataclass(frozen=True)
class ArcState:
    bend_angle: float
    direction_angle: float
    backbone_length: float

    def __post_init__(self):
        if not self.backbone_length > 0:
            raise InvalidGeometryError("backbone_length must be positive")
        if self.bend_angle < 0:
            raise InvalidGeometryError("bend_angle must be non-negative")


def _mode(D_p: float) -> str:
    return PULLED if D_p < 0 else PUSHED


def bendable_lengths(L: float, D_p: float) -> tuple[float, float]:
    """Bendable lengths ``(L_o, L_i)`` of the outer and inner tube."""
    if abs(D_p) >= L:
        raise OutOfStrokeError(f"|D_p|={abs(D_p)} must be below the steerable length {L}")
    if D_p < 0:
        return L, L - abs(D_p)
    return L - abs(D_p), L


def bending_angle(D_p, d_o: float, d_i: float):
    """Bend angle from the push/pull distance; the two neutral layers share one arc centre."""
    s = d_o + d_i
    if not s > 0:
        raise DegenerateGeometryError("neutral offsets sum to zero; the pair cannot bend")
    return np.abs(D_p) / s


def backbone_length(theta: float, mode: str, L_o: float, L_i: float, d_o: float, d_i: float) -> float:
    """Centre-line arc length; the inextensible layer of the shorter tube sets the radius."""
    if theta < 0:
        raise InvalidGeometryError("theta must be non-negative")
    if mode == PUSHED:
        return L_o + theta * d_o
    if mode == PULLED:
        return L_i + theta * d_i
    raise ValueError(f"mode must be {PUSHED!r} or {PULLED!r}, got {mode!r}")


def direction_angle(theta_M, D_p):
    """Bending-plane azimuth in [0, 2 pi): base rotation plus pi when pulled."""
    alpha = np.where(np.asarray(D_p) < 0, np.asarray(theta_M) + math.pi, theta_M)
    alpha = np.mod(alpha, TWO_PI)
    return float(alpha) if np.ndim(alpha) == 0 else alpha


def _arc_factors(theta: float) -> tuple[float, float]:
    """(1 - cos t)/t and sin t / t with series limits near zero."""
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return 0.5 * theta - theta * t2 / 24.0, 1.0 - t2 / 6.0
    return (1.0 - math.cos(theta)) / theta, math.sin(theta) / theta


def tip_position(arc: ArcState) -> np.ndarray:
    """Tip of a constant-curvature arc in the segment base frame (mm)."""
    a, b = _arc_factors(arc.bend_angle)
    ca, sa = math.cos(arc.direction_angle), math.sin(arc.direction_angle)
    L = arc.backbone_length
    return np.array([L * a * ca, L * a * sa, L * b])


def arc_transform(q: float, alpha: float, L: float, theta: float) -> np.ndarray:
    """Homogeneous transform T_z(q) R_z(alpha) T_x(L/t) R_y(t) T_x(-L/t).

    Evaluated in closed form so that ``theta -> 0`` reduces to a translation
    of ``q + L`` along z.
    """
    if theta < 0:
        raise InvalidGeometryError("theta must be non-negative")
    a, b = _arc_factors(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    ct, st = math.cos(theta), math.sin(theta)
    return np.array(
        [
            [ca * ct, -sa, ca * st, L * a * ca],
            [sa * ct, ca, sa * st, L * a * sa],
            [-st, 0.0, ct, q + L * b],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def translation(axis: str, d: float) -> np.ndarray:
    T = np.eye(4)
    T["xyz".index(axis), 3] = d
    return T


def rotation(axis: str, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    T = np.eye(4)
    i, j = {"x": (1, 2), "y": (2, 0), "z": (0, 1)}[axis]
    T[i, i] = c
    T[j, j] = c
    T[i, j] = -s
    T[j, i] = s
    return T


def arc_transform_product(q: float, alpha: float, L: float, theta: float) -> np.ndarray:
    """Same transform as :func:`arc_transform`, built as an explicit matrix product.

    Undefined at ``theta == 0``; used as an independent check.
    """
    r = L / theta
    return (
        translation("z", q)
        @ rotation("z", alpha)
        @ translation("x", r)
        @ rotation("y", theta)
        @ translation("x", -r)
    )
