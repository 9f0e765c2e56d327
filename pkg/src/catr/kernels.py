"""Hot loops of the dual-segment model, in numba and plain numpy flavours.

``fk_batch`` and ``workspace_scan`` dispatch to the numba kernels when numba
is importable and ``CATR_DISABLE_NUMBA`` is unset; the ``*_numpy`` variants
are always available and give the same results to rounding.

Segment geometry is passed as a (2, 3) array with rows (proximal, distal) and
columns (d_o, d_i, steerable length).

Workspace direction sums are accumulated in fixed point (``DIR_SCALE``) so
that merging per-worker partial grids is exact and order independent.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import HAS_NUMBA, njit, numba_enabled

SMALL_ANGLE = 1e-6
TWO_PI = 2.0 * math.pi
DIR_SCALE = float(2**32)
NO_HIT = np.iinfo(np.int64).max


# --------------------------------------------------------------------- numba


@njit(cache=True, nogil=True)
def _segment_state(D, theta_M, d_o, d_i, L):
    s = d_o + d_i
    aD = abs(D)
    th = aD / s
    if D > 0:
        Lb = L - aD + th * d_o
        alpha = theta_M
    elif D < 0:
        Lb = L - aD + th * d_i
        alpha = theta_M + math.pi
    else:
        Lb = L
        alpha = theta_M
    alpha = alpha % TWO_PI
    return th, alpha, Lb


@njit(cache=True, nogil=True)
def _arc_into(th, alpha, Lb, q, M):
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    ct = math.cos(th)
    st = math.sin(th)
    if th < SMALL_ANGLE:
        t2 = th * th
        a = 0.5 * th - th * t2 / 24.0
        b = 1.0 - t2 / 6.0
    else:
        a = (1.0 - ct) / th
        b = st / th
    M[0, 0] = ca * ct
    M[0, 1] = -sa
    M[0, 2] = ca * st
    M[0, 3] = Lb * a * ca
    M[1, 0] = sa * ct
    M[1, 1] = ca
    M[1, 2] = sa * st
    M[1, 3] = Lb * a * sa
    M[2, 0] = -st
    M[2, 1] = 0.0
    M[2, 2] = ct
    M[2, 3] = q + Lb * b


@njit(cache=True, nogil=True)
def _compose(M1, M2, pos, R):
    for i in range(3):
        for j in range(3):
            R[i, j] = M1[i, 0] * M2[0, j] + M1[i, 1] * M2[1, j] + M1[i, 2] * M2[2, j]
        pos[i] = M1[i, 0] * M2[0, 3] + M1[i, 1] * M2[1, 3] + M1[i, 2] * M2[2, 3] + M1[i, 3]


@njit(cache=True, nogil=True)
def _fk_batch_nb(A, seg, pos, rot):
    M1 = np.empty((3, 4))
    M2 = np.empty((3, 4))
    for n in range(A.shape[0]):
        th1, a1, Lb1 = _segment_state(A[n, 1], A[n, 2], seg[0, 0], seg[0, 1], seg[0, 2])
        th2, a2, Lb2 = _segment_state(A[n, 4], A[n, 5], seg[1, 0], seg[1, 1], seg[1, 2])
        if A[n, 3] < 0:
            a2 = a1
        _arc_into(th1, a1, Lb1, A[n, 0], M1)
        _arc_into(th2, a2, Lb2, A[n, 3], M2)
        _compose(M1, M2, pos[n], rot[n])


@njit(cache=True, nogil=True)
def _scan_nb(grids, q_p, seg, voxel, origin, count, dir_sum, first, rep, mean_dir, min_dot, i1_lo, i1_hi, second_pass):
    Dpp, tmp, qd, Dpd, tmd = grids[0], grids[1], grids[2], grids[3], grids[4]
    n2, n3, n4, n5 = tmp.size, qd.size, Dpd.size, tmd.size
    M1 = np.empty((3, 4))
    M2 = np.empty((3, 4))
    pos = np.empty(3)
    R = np.empty((3, 3))
    for i1 in range(i1_lo, i1_hi):
        for i2 in range(n2):
            th1, a1, Lb1 = _segment_state(Dpp[i1], tmp[i2], seg[0, 0], seg[0, 1], seg[0, 2])
            _arc_into(th1, a1, Lb1, q_p, M1)
            for i3 in range(n3):
                for i4 in range(n4):
                    for i5 in range(n5):
                        th2, a2, Lb2 = _segment_state(Dpd[i4], tmd[i5], seg[1, 0], seg[1, 1], seg[1, 2])
                        if qd[i3] < 0:
                            a2 = a1
                        _arc_into(th2, a2, Lb2, qd[i3], M2)
                        _compose(M1, M2, pos, R)
                        ix = int(math.floor(pos[0] / voxel)) - origin[0]
                        iy = int(math.floor(pos[1] / voxel)) - origin[1]
                        iz = int(math.floor(pos[2] / voxel)) - origin[2]
                        if second_pass:
                            d = R[0, 2] * mean_dir[ix, iy, iz, 0] + R[1, 2] * mean_dir[ix, iy, iz, 1] + R[2, 2] * mean_dir[ix, iy, iz, 2]
                            if d < min_dot[ix, iy, iz]:
                                min_dot[ix, iy, iz] = d
                            continue
                        g = (((i1 * n2 + i2) * n3 + i3) * n4 + i4) * n5 + i5
                        count[ix, iy, iz] += 1
                        for k in range(3):
                            dir_sum[ix, iy, iz, k] += np.int64(round(R[k, 2] * DIR_SCALE))
                        if g < first[ix, iy, iz]:
                            first[ix, iy, iz] = g
                            for k in range(3):
                                rep[ix, iy, iz, k] = pos[k]
                                rep[ix, iy, iz, 3 + k] = R[k, 2]


# --------------------------------------------------------------------- numpy


def _segment_state_np(D, theta_M, d_o, d_i, L):
    D = np.asarray(D, dtype=float)
    aD = np.abs(D)
    th = aD / (d_o + d_i)
    Lb = np.where(D > 0, L - aD + th * d_o, np.where(D < 0, L - aD + th * d_i, L))
    alpha = np.mod(np.where(D < 0, theta_M + math.pi, theta_M), TWO_PI)
    return th, alpha, Lb


def _arc_np(th, alpha, Lb, q):
    """Stacked (…, 3, 4) arc transforms."""
    th, alpha, Lb, q = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (th, alpha, Lb, q)))
    ca, sa, ct, st = np.cos(alpha), np.sin(alpha), np.cos(th), np.sin(th)
    small = th < SMALL_ANGLE
    safe = np.where(small, 1.0, th)
    t2 = th * th
    a = np.where(small, 0.5 * th - th * t2 / 24.0, (1.0 - ct) / safe)
    b = np.where(small, 1.0 - t2 / 6.0, st / safe)
    M = np.empty(th.shape + (3, 4))
    M[..., 0, 0] = ca * ct
    M[..., 0, 1] = -sa
    M[..., 0, 2] = ca * st
    M[..., 0, 3] = Lb * a * ca
    M[..., 1, 0] = sa * ct
    M[..., 1, 1] = ca
    M[..., 1, 2] = sa * st
    M[..., 1, 3] = Lb * a * sa
    M[..., 2, 0] = -st
    M[..., 2, 1] = 0.0
    M[..., 2, 2] = ct
    M[..., 2, 3] = q + Lb * b
    return M


def _compose_np(M1, M2):
    R = np.einsum("...ij,...jk->...ik", M1[..., :3], M2[..., :3])
    pos = np.einsum("...ij,...j->...i", M1[..., :3], M2[..., 3]) + M1[..., 3]
    return pos, R


def fk_batch_numpy(A, seg):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    seg = np.asarray(seg, dtype=float)
    th1, a1, Lb1 = _segment_state_np(A[:, 1], A[:, 2], *seg[0])
    th2, a2, Lb2 = _segment_state_np(A[:, 4], A[:, 5], *seg[1])
    a2 = np.where(A[:, 3] < 0, a1, a2)
    return _compose_np(_arc_np(th1, a1, Lb1, A[:, 0]), _arc_np(th2, a2, Lb2, A[:, 3]))


def fk_batch_numba(A, seg):
    A = np.ascontiguousarray(np.atleast_2d(A), dtype=np.float64)
    seg = np.ascontiguousarray(seg, dtype=np.float64)
    pos = np.empty((A.shape[0], 3))
    rot = np.empty((A.shape[0], 3, 3))
    _fk_batch_nb(A, seg, pos, rot)
    return pos, rot


def fk_batch(A, seg):
    """Tip positions (n, 3) and orientations (n, 3, 3) for actuation rows (n, 6)."""
    if numba_enabled():
        return fk_batch_numba(A, seg)
    return fk_batch_numpy(A, seg)


# ------------------------------------------------------------ workspace scan


class ScanGrid:
    """Dense voxel accumulators covering a cube of half-width ``reach``."""

    def __init__(self, reach: float, voxel: float):
        lo = int(math.floor(-reach / voxel)) - 1
        n = -2 * lo + 1
        self.voxel = float(voxel)
        self.origin = np.array([lo, lo, lo], dtype=np.int64)
        self.shape = (n, n, n)
        self.count = np.zeros(self.shape, dtype=np.int64)
        self.dir_sum = np.zeros(self.shape + (3,), dtype=np.int64)
        self.first = np.full(self.shape, NO_HIT, dtype=np.int64)
        self.rep = np.zeros(self.shape + (6,))
        self.mean_dir = np.zeros(self.shape + (3,))
        self.min_dot = np.full(self.shape, 2.0)

    def merge(self, other: "ScanGrid") -> None:
        self.count += other.count
        self.dir_sum += other.dir_sum
        take = other.first < self.first
        self.first[take] = other.first[take]
        self.rep[take] = other.rep[take]

    def merge_second(self, other: "ScanGrid") -> None:
        np.minimum(self.min_dot, other.min_dot, out=self.min_dot)

    def finish_first_pass(self) -> None:
        s = self.dir_sum.astype(float) / DIR_SCALE
        norm = np.linalg.norm(s, axis=-1, keepdims=True)
        self.mean_dir = np.divide(s, norm, out=np.zeros_like(s), where=norm > 1e-12)


def _scan_numpy(grids, q_p, seg, g: ScanGrid, i1_lo, i1_hi, second_pass):
    Dpp, tmp, qd, Dpd, tmd = grids
    n2, n3, n4, n5 = tmp.size, qd.size, Dpd.size, tmd.size
    Q, D2, T2 = np.meshgrid(qd, Dpd, tmd, indexing="ij")
    Q, D2, T2 = Q.ravel(), D2.ravel(), T2.ravel()
    th2, a2_free, Lb2 = _segment_state_np(D2, T2, *seg[1])
    inner = n3 * n4 * n5
    local = np.arange(inner, dtype=np.int64)
    flat_shape = g.shape
    for i1 in range(i1_lo, i1_hi):
        for i2 in range(n2):
            th1, a1, Lb1 = _segment_state_np(Dpp[i1], tmp[i2], *seg[0])
            M1 = _arc_np(th1, a1, Lb1, q_p)
            a2 = np.where(Q < 0, a1, a2_free)
            pos, R = _compose_np(np.broadcast_to(M1, (inner, 3, 4)), _arc_np(th2, a2, Lb2, Q))
            idx = np.floor(pos / g.voxel).astype(np.int64) - g.origin
            lin = np.ravel_multi_index(idx.T, flat_shape)
            z = R[:, :, 2]
            if second_pass:
                d = np.einsum("ij,ij->i", z, g.mean_dir.reshape(-1, 3)[lin])
                np.minimum.at(g.min_dot.reshape(-1), lin, d)
                continue
            base = (i1 * n2 + i2) * inner
            np.add.at(g.count.reshape(-1), lin, 1)
            q = np.round(z * DIR_SCALE).astype(np.int64)
            for k in range(3):
                np.add.at(g.dir_sum.reshape(-1, 3)[:, k], lin, q[:, k])
            uniq, at = np.unique(lin, return_index=True)
            gidx = base + local[at]
            first = g.first.reshape(-1)
            better = gidx < first[uniq]
            first[uniq[better]] = gidx[better]
            reps = g.rep.reshape(-1, 6)
            reps[uniq[better], :3] = pos[at[better]]
            reps[uniq[better], 3:] = z[at[better]]


def run_scan(grids, q_p, seg, g: ScanGrid, i1_lo, i1_hi, second_pass, use_numba=None):
    if use_numba is None:
        use_numba = numba_enabled()
    grids = tuple(np.ascontiguousarray(x, dtype=np.float64) for x in grids)
    seg = np.ascontiguousarray(seg, dtype=np.float64)
    if use_numba and HAS_NUMBA:
        _scan_nb(
            grids, float(q_p), seg, g.voxel, g.origin, g.count, g.dir_sum, g.first, g.rep,
            g.mean_dir, g.min_dot, i1_lo, i1_hi, second_pass,
        )
    else:
        _scan_numpy(grids, float(q_p), seg, g, i1_lo, i1_hi, second_pass)
