"""Independent reference computations used by the tests.

Nothing here imports the code under test except plain data classes.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp


# ------------------------------------------------------- cross-section

def sector_quadrature(ri, ro, beta, n=48):
    """(centroid offset, lateral second moment) of an annular sector by polar Gauss-Legendre."""
    xr, wr = np.polynomial.legendre.leggauss(n)
    xt, wt = np.polynomial.legendre.leggauss(n)
    r = 0.5 * (ro - ri) * xr + 0.5 * (ro + ri)
    wr = wr * 0.5 * (ro - ri)
    t = 0.5 * beta * xt
    wt = wt * 0.5 * beta
    R, T = np.meshgrid(r, t, indexing="ij")
    W = np.outer(wr, wt) * R  # polar Jacobian
    area = W.sum()
    centroid = (W * R * np.cos(T)).sum() / area
    second = (W * (R * np.sin(T)) ** 2).sum()
    return centroid, second


# ----------------------------------------------------- kinematics chain

def _T(axis: str, d: float) -> np.ndarray:
    T = np.eye(4)
    T["xyz".index(axis), 3] = d
    return T


def _R(axis: str, a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    if axis == "z":
        m = [[c, -s, 0], [s, c, 0], [0, 0, 1]]
    elif axis == "y":
        m = [[c, 0, s], [0, 1, 0], [-s, 0, c]]
    else:
        m = [[1, 0, 0], [0, c, -s], [0, s, c]]
    T = np.eye(4)
    T[:3, :3] = m
    return T


def segment_arc(D_p, theta_M, d_o, d_i, L):
    """(theta, alpha, L_b) for one segment, straight from the geometric relations."""
    theta = abs(D_p) / (d_o + d_i)
    if D_p < 0:  # pulled: inner tube shortened, centre line follows the inner layer
        L_b = (L - abs(D_p)) + theta * d_i
        alpha = (theta_M + math.pi) % (2 * math.pi)
    else:
        L_b = (L - abs(D_p)) + theta * d_o
        alpha = theta_M % (2 * math.pi)
    return theta, alpha, L_b


def arc_chain(q, alpha, L, theta):
    """T_z(q) R_z(alpha) [arc of length L, bend theta about y]; the arc is integrated if theta is tiny."""
    if theta < 1e-7:
        return _T("z", q) @ _R("z", alpha) @ _T("z", L)
    r = L / theta
    return _T("z", q) @ _R("z", alpha) @ _T("x", r) @ _R("y", theta) @ _T("x", -r)


def dual_fk(A, seg_p, seg_d):
    """Tip transform of the two-segment chain; seg = (d_o, d_i, L)."""
    q_p, Dp, tMp, q_d, Dd, tMd = A
    th1, a1, L1 = segment_arc(Dp, tMp, *seg_p)
    th2, a2, L2 = segment_arc(Dd, tMd, *seg_d)
    if q_d < 0:
        a2 = a1
    return arc_chain(q_p, a1, L1, th1) @ arc_chain(q_d, a2, L2, th2)


# -------------------------------------------------------------- statics

def deflection_ivp(kappa_fn, L):
    """Tip (x, z) of phi' = kappa(s), x' = sin phi, z' = cos phi from a clamped base."""
    sol = solve_ivp(
        lambda s, y: [kappa_fn(s), math.sin(y[0]), math.cos(y[0])],
        (0.0, L), [0.0, 0.0, 0.0], rtol=1e-11, atol=1e-12,
    )
    return sol.y[1, -1], sol.y[2, -1]


def arc_tip_planar(theta, L):
    if theta == 0:
        return 0.0, L
    return L * (1 - math.cos(theta)) / theta, L * math.sin(theta) / theta


# ----------------------------------------------------- pareto frontier

def grid_frontier(f1, f2, lo, hi, n=801):
    """Non-dominated (f1, f2) pairs from a dense 2-D grid; f1, f2 take an (N, 2) array."""
    g = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(g, g, indexing="ij")
    P = np.stack([X.ravel(), Y.ravel()], 1)
    F1, F2 = f1(P), f2(P)
    order = np.lexsort((F2, F1))
    F1, F2 = F1[order], F2[order]
    best = np.minimum.accumulate(F2)
    keep = np.concatenate([[True], F2[1:] < best[:-1]])
    return F1[keep], F2[keep]


def frontier_gap(F1, F2, f1, f2):
    """Vertical gap between a point and the piecewise-linear frontier at the same f1."""
    return abs(f2 - np.interp(f1, F1, F2))
