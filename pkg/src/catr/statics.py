"""Planar statics of the nested tube pair under actuation force and tip loads.

Both tubes share one deflection curve, so their bending moments are summed
and divided by the composite rigidity; the contact load between them is an
internal action-reaction pair and drops out. It is recovered afterwards from
the inner tube's moment balance.

The curve is integrated in tangent-angle form (``phi' = kappa``), which stays
valid past 90 degrees of bend.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GridTooSmallError, InvalidGeometryError
from .segment_kinematics import SegmentSpec

MIN_GRID = 16
DEFAULT_GRID = 512


@dataclass(frozen=True)
class LoadCase:
    """Forces in N (axial: + push, - pull), active bending length in mm."""

    axial_force: float = 0.0
    tip_radial_force: float = 0.0
    tip_tangent_force: float = 0.0
    active_length: float = 30.0

    def __post_init__(self):
        if not self.active_length > 0:
            raise InvalidGeometryError("active_length must be positive")

    def scaled(self, c: float) -> "LoadCase":
        return LoadCase(
            c * self.axial_force, c * self.tip_radial_force, c * self.tip_tangent_force, self.active_length
        )


@dataclass(frozen=True)
class DeflectionCurve:
    s: np.ndarray
    phi: np.ndarray
    x: np.ndarray
    z: np.ndarray
    kappa: np.ndarray

    @property
    def grid_size(self) -> int:
        return len(self.s)

    @property
    def samples(self) -> np.ndarray:
        """(grid, 5) array of s, phi, x, z, kappa."""
        return np.column_stack([self.s, self.phi, self.x, self.z, self.kappa])

    def to_csv(self, path, fmt: str = "%.9f") -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "phi", "x", "z", "kappa"])
            for row in self.samples:
                w.writerow([fmt % v for v in row])


@dataclass(frozen=True)
class InteractionLoad:
    """Inter-tube contact load per unit length, arm-weighted as it enters the inner moment.

    ``rho`` is finite everywhere including the tip. ``tip_moment`` is the
    concentrated moment the tip weld transmits to the inner tube, i.e. the
    difference between the shared-curve moment at ``L_s`` and ``-F_A d_i``.
    """

    s: np.ndarray
    rho: np.ndarray
    tip_moment: float
    inner_moment_tip: float

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.s, self.rho])

    def inner_moment(self) -> np.ndarray:
        """Inner-tube moment M_i(s) rebuilt by integrating ``rho`` back from the tip."""
        tail = _cumtrapz(self.rho[::-1], -self.s[::-1])[::-1]
        return self.inner_moment_tip - tail


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def composite_curvature(s, lc: LoadCase, seg: SegmentSpec):
    """Shared curvature (1/mm) of the pair at arc length ``s``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s > lc.active_length * (1 + 1e-12)):
        raise ValueError("s must lie in [0, active_length]")
    moment = (
        lc.axial_force * (seg.d_o - seg.d_i)
        + lc.tip_tangent_force * seg.d_o
        + lc.tip_radial_force * (lc.active_length - s)
    )
    k = moment / seg.rigidity
    return float(k) if k.ndim == 0 else k


def solve_deflection(lc: LoadCase, seg: SegmentSpec, grid: int = DEFAULT_GRID) -> DeflectionCurve:
    """Clamped-base deflection curve sampled on ``grid`` uniform points."""
    if grid < MIN_GRID:
        raise GridTooSmallError(f"grid must be >= {MIN_GRID}, got {grid}")
    s = np.linspace(0.0, lc.active_length, grid)
    kappa = composite_curvature(s, lc, seg)
    phi = _cumtrapz(kappa, s)
    x = _cumtrapz(np.sin(phi), s)
    z = _cumtrapz(np.cos(phi), s)
    return DeflectionCurve(s, phi, x, z, kappa)


def recover_interaction_load(curve: DeflectionCurve, lc: LoadCase, seg: SegmentSpec) -> InteractionLoad:
    """Contact load that makes the inner tube follow ``curve``.

    The inner tube carries ``E_i I_i kappa(s)``; its distributed part is the
    derivative of that moment along s, taken with second-order finite
    differences on the curve grid.
    """
    EI_i = seg.inner_cs.bending_rigidity
    m_inner = EI_i * curve.kappa
    rho = np.gradient(m_inner, curve.s, edge_order=2)
    tip = float(m_inner[-1])
    return InteractionLoad(
        s=curve.s.copy(),
        rho=rho,
        tip_moment=tip + lc.axial_force * seg.d_i,
        inner_moment_tip=tip,
    )


def tip_from_deflection(curve: DeflectionCurve) -> np.ndarray:
    return np.array([curve.x[-1], curve.z[-1]])
