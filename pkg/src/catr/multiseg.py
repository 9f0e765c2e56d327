"""Dual-segment robot: forward/inverse kinematics, workspace and dexterity.

The distal segment runs through the proximal one. Its insertion ``q_d`` is
measured from the proximal tip along the proximal tip tangent; a negative
value means it is partly retracted, in which case its bending plane is locked
to the proximal one.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage
from scipy.spatial.transform import Rotation

from . import kernels
from .cross_section import TWO_PI
from .errors import EmptyVoxelError, InvalidGeometryError, OutOfBoundsError
from .optim import OptimizerOptions, SearchResult, ga_minimize
from .segment_kinematics import SegmentSpec, arc_transform, direction_angle

BOUND_TOL = 1e-9
DEFAULT_GRID = (41, 72, 6, 41, 72)
DEFAULT_VOXEL = 2.0


@dataclass(frozen=True)
class Robot:
    proximal: SegmentSpec
    distal: SegmentSpec
    insertion_max: float = 20.0
    extension_max: float = 10.0
    compliant_length: float = 40.0

    def __post_init__(self):
        if self.insertion_max < 0 or self.extension_max < 0:
            raise InvalidGeometryError("insertion_max and extension_max must be non-negative")

    @property
    def segment_table(self) -> np.ndarray:
        return np.array(
            [
                [self.proximal.d_o, self.proximal.d_i, self.proximal.steerable_length],
                [self.distal.d_o, self.distal.d_i, self.distal.steerable_length],
            ]
        )

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Actuation box in the order (q_p, D_p^p, theta_M^p, q_d, D_p^d, theta_M^d)."""
        pl, ph = self.proximal.pushpull_bounds
        dl, dh = self.distal.pushpull_bounds
        lo = np.array([0.0, pl, 0.0, -self.proximal.steerable_length, dl, 0.0])
        hi = np.array([self.insertion_max, ph, TWO_PI, self.extension_max, dh, TWO_PI])
        return lo, hi

    @property
    def max_reach(self) -> float:
        return (
            self.insertion_max
            + self.proximal.steerable_length
            + self.extension_max
            + self.distal.steerable_length
        )


@dataclass(frozen=True)
class ActuationState:
    q_p: float = 0.0
    D_p_p: float = 0.0
    theta_M_p: float = 0.0
    q_d: float = 0.0
    D_p_d: float = 0.0
    theta_M_d: float = 0.0

    FIELDS = ("q_p", "D_p_p", "theta_M_p", "q_d", "D_p_d", "theta_M_d")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in self.FIELDS])

    @classmethod
    def from_array(cls, a) -> "ActuationState":
        return cls(*(float(v) for v in a))

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.FIELDS}

    def check_bounds(self, robot: Robot) -> None:
        lo, hi = robot.bounds
        a = self.as_array()
        for name, v, l, h in zip(self.FIELDS, a, lo, hi):
            if not (l - BOUND_TOL <= v <= h + BOUND_TOL):
                raise OutOfBoundsError(f"{name}={v} outside [{l}, {h}]")


@dataclass(frozen=True)
class TaskTarget:
    position: np.ndarray
    pointing: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pointing, dtype=float)
        if abs(np.linalg.norm(p) - 1.0) > 1e-9:
            raise ValueError("pointing must be a unit vector")
        object.__setattr__(self, "pointing", p)
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    orientation: np.ndarray

    @property
    def pointing(self) -> np.ndarray:
        return self.orientation[:, 2]

    def euler_xyz(self) -> np.ndarray:
        """Extrinsic x-y-z Euler angles (tau_x, tau_y, tau_z) in rad."""
        return Rotation.from_matrix(self.orientation).as_euler("xyz")

    def as_matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.orientation
        T[:3, 3] = self.position
        return T


def distal_direction_angle(A: ActuationState) -> float:
    """Distal bending-plane angle; locked to the proximal one while retracted."""
    alpha_p = direction_angle(A.theta_M_p, A.D_p_p)
    if A.q_d < 0:
        return alpha_p
    return direction_angle(A.theta_M_d, A.D_p_d)


def segment_transforms(A: ActuationState, robot: Robot) -> tuple[np.ndarray, np.ndarray]:
    """The two 4x4 arc transforms of the chain, proximal first."""
    prox = robot.proximal.arc_state(A.D_p_p, A.theta_M_p)
    dist = robot.distal.arc_state(A.D_p_d, A.theta_M_d)
    T1 = arc_transform(A.q_p, prox.direction_angle, prox.backbone_length, prox.bend_angle)
    T2 = arc_transform(A.q_d, distal_direction_angle(A), dist.backbone_length, dist.bend_angle)
    return T1, T2


def forward_kinematics(A: ActuationState, robot: Robot, check: bool = True) -> Pose:
    if check:
        A.check_bounds(robot)
    pos, rot = kernels.fk_batch(A.as_array()[None], robot.segment_table)
    return Pose(pos[0], rot[0])


# ---------------------------------------------------------------------- IK


@dataclass(frozen=True)
class IKSettings:
    direction_weight: float = 10.0
    pushpull_weight: float = 0.1
    tolerance: float = 1.0
    local_refine: bool = True
    refine_evaluations: int = 600
    generation_refine: int = 30
    restarts: int = 2


@dataclass
class IKResult:
    actuation: ActuationState
    position_residual: float
    direction_residual: float
    reachable: bool
    loss: float
    search: SearchResult = field(repr=False)

    @property
    def history(self) -> list[float]:
        return self.search.history


def ik_loss(X, target: TaskTarget, robot: Robot, prev: ActuationState, settings: IKSettings) -> np.ndarray:
    pos, rot = kernels.fk_batch(X, robot.segment_table)
    X = np.atleast_2d(X)
    err = np.linalg.norm(pos - target.position, axis=1)
    dir_err = 1.0 - rot[:, :, 2] @ target.pointing
    p = prev.as_array()
    dD = np.abs(X[:, 1] - p[1]) + np.abs(X[:, 4] - p[4])
    return err + settings.direction_weight * dir_err + settings.pushpull_weight * dD


IK_OPTIONS = OptimizerOptions(population=20, elite=10, max_iterations=20)


def inverse_kinematics(
    target: TaskTarget,
    robot: Robot,
    prev: ActuationState | None = None,
    opts: OptimizerOptions = IK_OPTIONS,
    settings: IKSettings = IKSettings(),
) -> IKResult:
    """Actuation that brings the tip to ``target``, close to ``prev`` in push/pull.

    ``prev`` (default: rest state) is the previous control instance; it seeds
    the first GA generation. If the position residual misses
    ``settings.tolerance``, the search is repeated up to ``settings.restarts``
    times with seeds derived from ``opts.seed``; the lowest-loss run wins.
    """
    prev = prev or ActuationState()
    box = robot.bounds
    res = None
    for attempt in range(settings.restarts + 1):
        seed = opts.seed if attempt == 0 else int(np.random.SeedSequence([opts.seed, attempt]).generate_state(1)[0])
        run = ga_minimize(
            lambda X: ik_loss(X, target, robot, prev, settings),
            box,
            opts=replace(opts, seed=seed),
            initial=[prev.as_array()],
            vectorized=True,
            local_refine=settings.local_refine,
            refine_evaluations=settings.refine_evaluations,
            generation_refine=settings.generation_refine,
        )
        if res is None or run.best_value < res.best_value:
            res = run
        pos, _ = kernels.fk_batch(res.best_point[None], robot.segment_table)
        if np.linalg.norm(pos[0] - target.position) <= settings.tolerance:
            break
    A = ActuationState.from_array(res.best_point)
    pose = forward_kinematics(A, robot, check=False)
    pos_err = float(np.linalg.norm(pose.position - target.position))
    cosang = float(np.clip(pose.pointing @ target.pointing, -1.0, 1.0))
    return IKResult(
        actuation=A,
        position_residual=pos_err,
        direction_residual=math.acos(cosang),
        reachable=pos_err <= settings.tolerance,
        loss=res.best_value,
        search=res,
    )


def ik_trace_rows(results: list[IKResult]) -> list[tuple[int, int, float]]:
    """(target index, generation, best loss) rows for all solves."""
    return [(k, g, v) for k, r in enumerate(results) for g, v in enumerate(r.history)]


# --------------------------------------------------------------- workspace


@dataclass
class WorkspaceCloud:
    """Voxelised tip cloud.

    For each occupied voxel: the first recorded tip sample (``points`` and
    ``directions``), the sample count, the normalised mean pointing direction
    and the smallest cosine between any recorded direction and that mean.
    """

    voxel_size: float
    voxel_index: np.ndarray
    points: np.ndarray
    directions: np.ndarray
    counts: np.ndarray
    mean_directions: np.ndarray
    min_cos: np.ndarray
    samples: int
    volume_band: tuple[float, float] = (0.0, 0.0)
    _lookup: dict = field(default=None, init=False, repr=False)

    @property
    def occupied_voxels(self) -> int:
        return len(self.voxel_index)

    @property
    def volume(self) -> float:
        """Occupied volume in cm^3."""
        return self.occupied_voxels * self.voxel_size**3 / 1000.0

    def row_of(self, at) -> int:
        if self._lookup is None:
            self._lookup = {tuple(v): i for i, v in enumerate(self.voxel_index.tolist())}
        key = tuple(int(math.floor(c / self.voxel_size)) for c in at)
        try:
            return self._lookup[key]
        except KeyError:
            raise EmptyVoxelError(f"no recorded direction in the voxel containing {list(at)}") from None

    def to_csv(self, path, fmt: str = "%.9f") -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "z", "dir_x", "dir_y", "dir_z"])
            for p, d in zip(self.points, self.directions):
                w.writerow([fmt % v for v in (*p, *d)])

    def summary(self) -> dict:
        return {
            "voxel_size_mm": self.voxel_size,
            "occupied_voxels": self.occupied_voxels,
            "samples": self.samples,
            "volume_cm3": self.volume,
            "volume_band_cm3": list(self.volume_band),
        }

    def voxels_json(self, path) -> None:
        rows = [
            {"index": idx, "count": int(c), "mean_direction": m, "min_cos": float(mc)}
            for idx, c, m, mc in zip(
                self.voxel_index.tolist(), self.counts, self.mean_directions.tolist(), self.min_cos
            )
        ]
        with open(path, "w") as fh:
            json.dump({"summary": self.summary(), "voxels": rows}, fh)


def _axis(lo: float, hi: float, n: int, periodic: bool, shift: float) -> np.ndarray:
    if hi == lo:
        return np.array([lo])
    if periodic and n >= 1:
        return lo + (np.arange(n) + shift) * (hi - lo) / n
    if n < 2:
        raise ValueError("grid counts must be >= 2 for every active DoF")
    if shift:
        step = (hi - lo) / (n - 1)
        return np.clip(lo + (np.arange(n) + shift - 0.5) * step, lo, hi)
    return np.linspace(lo, hi, n)


def workspace_axes(robot, grid, pushpull_ranges=None, extension_range=None, seed=None):
    """Sample values for (D_p^p, theta_M^p, q_d, D_p^d, theta_M^d)."""
    if len(grid) != 5:
        raise ValueError("grid needs five counts: D_p^p, theta_M^p, q_d, D_p^d, theta_M^d")
    pr = pushpull_ranges or (robot.proximal.pushpull_bounds, robot.distal.pushpull_bounds)
    er = extension_range if extension_range is not None else (0.0, robot.extension_max)
    shifts = np.zeros(5) if seed is None else np.random.default_rng(seed).random(5)
    spans = [pr[0], (0.0, TWO_PI), er, pr[1], (0.0, TWO_PI)]
    return tuple(
        _axis(float(lo), float(hi), int(n), k in (1, 4), float(shifts[k]))
        for k, ((lo, hi), n) in enumerate(zip(spans, grid))
    )


def sample_workspace(
    robot: Robot,
    grid=DEFAULT_GRID,
    seed: int | None = None,
    *,
    voxel: float = DEFAULT_VOXEL,
    q_p: float = 0.0,
    pushpull_ranges=None,
    extension_range=None,
    workers: int = 1,
) -> WorkspaceCloud:
    """Enumerate an actuation grid and voxelise the tip cloud.

    The proximal insertion stays at ``q_p``. Distal extension defaults to
    ``[0, robot.extension_max]``. With ``seed`` set, each axis is shifted by a
    seeded fraction of its step (a jittered grid); ``None`` gives the plain
    grid. The enumeration is split over the first axis; per-worker grids are
    merged exactly, so the result does not depend on ``workers``.
    """
    axes = workspace_axes(robot, grid, pushpull_ranges, extension_range, seed)
    seg = robot.segment_table
    n1 = len(axes[0])
    reach = q_p + robot.max_reach
    chunks = [c for c in np.array_split(np.arange(n1), min(workers, n1)) if len(c)]

    def run(pass2, base=None):
        def job(c):
            g = kernels.ScanGrid(reach, voxel)
            if base is not None:
                g.mean_dir = base.mean_dir
            kernels.run_scan(axes, q_p, seg, g, int(c[0]), int(c[-1]) + 1, pass2)
            return g

        if len(chunks) == 1:
            return [job(chunks[0])]
        with ThreadPoolExecutor(len(chunks)) as pool:
            return list(pool.map(job, chunks))

    parts = run(False)
    total = parts[0]
    for p in parts[1:]:
        total.merge(p)
    total.finish_first_pass()
    parts2 = run(True, total)
    for p in parts2:
        total.merge_second(p)

    occ = total.count > 0
    idx = np.argwhere(occ)
    sel = tuple(idx.T)
    lower = ndimage.binary_erosion(occ).sum()
    upper = ndimage.binary_dilation(occ).sum()
    unit = voxel**3 / 1000.0
    return WorkspaceCloud(
        voxel_size=float(voxel),
        voxel_index=idx + total.origin,
        points=total.rep[sel][:, :3],
        directions=total.rep[sel][:, 3:],
        counts=total.count[sel],
        mean_directions=total.mean_dir[sel],
        min_cos=np.clip(total.min_dot[sel], -1.0, 1.0),
        samples=int(np.prod([len(a) for a in axes])),
        volume_band=(float(lower * unit), float(upper * unit)),
    )


# --------------------------------------------------------------- dexterity


def _cap_ratio(min_cos: float) -> float:
    return 0.5 * (1.0 - min_cos)


def dexterity_from_directions(directions) -> float:
    """Spherical-cap fraction covered by the smallest cone about the mean direction."""
    d = np.atleast_2d(np.asarray(directions, dtype=float))
    d = d / np.linalg.norm(d, axis=1, keepdims=True)
    m = d.sum(axis=0)
    n = np.linalg.norm(m)
    if n < 1e-12:
        return 1.0
    c = float(np.clip((d @ (m / n)).min(), -1.0, 1.0))
    return _cap_ratio(c)


def dexterity(cloud: WorkspaceCloud, at) -> float:
    i = cloud.row_of(at)
    if not np.any(cloud.mean_directions[i]):
        return 1.0
    return _cap_ratio(float(cloud.min_cos[i]))
