"""Tenon-mortise slit design for one tube pair.

Objectives (both minimised):

* ``f1 = 1 / kappa_M = L / theta_M``, with ``theta_M`` the upward (pulled,
  tenons buckled) maximum bend of the outer tube;
* ``f2 = 1 / (I_o + I_i)``, the lateral compliance of the two spines.

Coupling constraints per tube::

    (2 l_s - 2 d_h / tan(theta_s)) n = (2 pi - beta) R_o
    N (d_s + d_g) = L

and between the tubes ``N_o d_s^o / cos(theta_s^o) = N_i d_s^i``.

The search eliminates the equalities: ``N`` and ``l_s`` follow from the other
parameters of each tube and ``theta_s^o`` from the inter-tube relation, which
leaves box limits on the derived values as inequality constraints.
"""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .cross_section import DEFAULT_YOUNGS_MODULUS, TWO_PI, TubeCrossSection, neutral_offset, second_moment
from .errors import DegenerateGeometryError, InfeasibleBoundsError
from .optim import OptimizerOptions, constrained_minimize, ga_minimize
from .segment_kinematics import PULLED, PUSHED

#: keeps the searched uncut angle strictly inside (0, 2 pi)
UNCUT_MARGIN = 1e-3


@dataclass(frozen=True)
class DesignBounds:
    """Box limits on the slit parameters (angles in rad)."""

    uncut_angle: tuple[float, float] = (0.0, TWO_PI)
    tenon_length: tuple[float, float] = (0.1, 0.7)
    slit_gap: tuple[float, float] = (0.3, 0.6)
    slit_count: tuple[float, float] = (1.0, 1000.0)
    tenon_counts: tuple[int, ...] = (1, 3, 5)
    slit_width: tuple[float, float] = (0.03, 0.06)
    tenon_height: tuple[float, float] = (0.25, 0.3)
    tenon_tilt: tuple[float, float] = (math.radians(25.0), math.radians(60.0))

    def __post_init__(self):
        for name in ("uncut_angle", "tenon_length", "slit_gap", "slit_count", "slit_width", "tenon_height", "tenon_tilt"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InfeasibleBoundsError(f"{name}: lower bound {lo} exceeds upper bound {hi}")
        if self.uncut_angle[1] <= 0 or self.uncut_angle[0] >= TWO_PI:
            raise InfeasibleBoundsError("uncut_angle bounds do not intersect (0, 2*pi)")
        if not self.tenon_counts or any(n < 1 or n % 2 == 0 for n in self.tenon_counts):
            raise InfeasibleBoundsError("tenon_counts must be non-empty odd positive integers")
        if not (0.0 < self.tenon_tilt[0] and self.tenon_tilt[1] < 0.5 * math.pi):
            raise InfeasibleBoundsError("tenon_tilt must stay inside (0, pi/2)")

    @property
    def search_uncut_angle(self) -> tuple[float, float]:
        lo, hi = self.uncut_angle
        return max(lo, UNCUT_MARGIN), min(hi, TWO_PI - UNCUT_MARGIN)


TABLE_I = DesignBounds()


@dataclass(frozen=True)
class SlitDesign:
    """Slit parameters of one tube. Lengths in mm, angles in rad.

    ``slit_count`` is kept real-valued; :attr:`slit_count_rounded` is the
    number actually cut, taken upward (59.8 -> 60, 73.17 -> 74) so the
    patterned length is never shorter than designed.
    """

    steerable_length: float
    uncut_angle: float
    tenon_length: float
    slit_gap: float
    slit_count: float
    tenon_count: int
    slit_width: float
    tenon_height: float
    tenon_tilt: float

    FIELDS = (
        "steerable_length", "uncut_angle", "tenon_length", "slit_gap", "slit_count",
        "tenon_count", "slit_width", "tenon_height", "tenon_tilt",
    )

    @property
    def slit_count_rounded(self) -> int:
        return int(math.ceil(self.slit_count - 1e-9))

    def rounded(self) -> "SlitDesign":
        return replace(self, slit_count=float(self.slit_count_rounded))

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.FIELDS}

    def bound_violations(self, bounds: DesignBounds = TABLE_I) -> list[str]:
        bad = []
        for name, key in (
            ("uncut_angle", "uncut_angle"), ("tenon_length", "tenon_length"), ("slit_gap", "slit_gap"),
            ("slit_count", "slit_count"), ("slit_width", "slit_width"), ("tenon_height", "tenon_height"),
            ("tenon_tilt", "tenon_tilt"),
        ):
            lo, hi = getattr(bounds, key)
            v = getattr(self, name)
            if not (lo <= v <= hi):
                bad.append(f"{name}={v} outside [{lo}, {hi}]")
        if self.tenon_count not in bounds.tenon_counts:
            bad.append(f"tenon_count={self.tenon_count} not in {bounds.tenon_counts}")
        return bad


@dataclass(frozen=True)
class TubeDesign:
    slits: SlitDesign
    inner_radius: float
    outer_radius: float
    youngs_modulus: float = DEFAULT_YOUNGS_MODULUS

    @property
    def cross_section(self) -> TubeCrossSection:
        return TubeCrossSection(self.inner_radius, self.outer_radius, self.slits.uncut_angle, self.youngs_modulus)


@dataclass(frozen=True)
class SegmentDesign:
    outer: TubeDesign
    inner: TubeDesign

    def rounded(self) -> "SegmentDesign":
        return SegmentDesign(replace(self.outer, slits=self.outer.slits.rounded()),
                             replace(self.inner, slits=self.inner.slits.rounded()))


# ------------------------------------------------------------- evaluators


def _offset_sum(sd: SegmentDesign) -> float:
    return neutral_offset(sd.outer.cross_section) + neutral_offset(sd.inner.cross_section)


def max_bend_angle(sd: SegmentDesign, mode: str = PULLED) -> float:
    """Bend at which the outer tube's slits close (rad)."""
    s = _offset_sum(sd)
    if not s > 0:
        raise DegenerateGeometryError("neutral offsets sum to zero")
    o = sd.outer.slits
    opening = o.slit_count * o.slit_width / s
    if mode == PULLED:
        return opening / math.cos(o.tenon_tilt)
    if mode == PUSHED:
        return opening
    raise ValueError(f"mode must be {PULLED!r} or {PUSHED!r}")


def objectives(sd: SegmentDesign) -> tuple[float, float]:
    """(f1, f2): inverse maximum curvature (mm) and inverse summed second moment (1/mm^4)."""
    o = sd.outer.slits
    s = _offset_sum(sd)
    opening = o.slit_count * o.slit_width
    if not (s > 0 and opening > 0):
        raise DegenerateGeometryError("maximum bend angle is zero or undefined")
    # L / theta_M, written without the division by s so that it stays finite as s -> 0
    f1 = o.steerable_length * s * math.cos(o.tenon_tilt) / opening
    f2 = 1.0 / (second_moment(sd.outer.cross_section) + second_moment(sd.inner.cross_section))
    return f1, f2


def coupling_residuals(s: SlitDesign, cs: TubeCrossSection) -> np.ndarray:
    """Residuals of the tenon-arc and slit-count relations; both zero when feasible."""
    r1 = (2 * s.tenon_length - 2 * s.tenon_height / math.tan(s.tenon_tilt)) * s.tenon_count - (
        TWO_PI - s.uncut_angle
    ) * cs.outer_radius
    r2 = s.slit_count * (s.slit_width + s.slit_gap) - s.steerable_length
    return np.array([r1, r2])


def coupling_scales(s: SlitDesign, cs: TubeCrossSection) -> np.ndarray:
    """Right-hand sides used to make the coupling residuals relative."""
    return np.array([max((TWO_PI - s.uncut_angle) * cs.outer_radius, 1e-12), s.steerable_length])


def inter_tube_residual(sd: SegmentDesign) -> float:
    o, i = sd.outer.slits, sd.inner.slits
    return o.slit_count * o.slit_width / math.cos(o.tenon_tilt) - i.slit_count * i.slit_width


def design_residuals(sd: SegmentDesign) -> dict:
    """All constraint residuals, absolute and relative to their right-hand sides."""
    out = {}
    for name, t in (("outer", sd.outer), ("inner", sd.inner)):
        cs = t.cross_section
        r = coupling_residuals(t.slits, cs)
        sc = coupling_scales(t.slits, cs)
        out[f"{name}_tenon_arc"] = float(r[0])
        out[f"{name}_slit_count"] = float(r[1])
        out[f"{name}_tenon_arc_rel"] = float(r[0] / sc[0])
        out[f"{name}_slit_count_rel"] = float(r[1] / sc[1])
    i = sd.inner.slits
    r = inter_tube_residual(sd)
    out["inter_tube"] = float(r)
    out["inter_tube_rel"] = float(r / max(i.slit_count * i.slit_width, 1e-12))
    return out


def max_relative_residual(sd: SegmentDesign) -> float:
    return max(abs(v) for k, v in design_residuals(sd).items() if k.endswith("_rel"))


# ----------------------------------------------------- epsilon-constraint


@dataclass
class Candidate:
    point: object
    f1: float
    f2: float
    feasible: bool
    design: object = None


@dataclass
class EpsilonStep:
    epsilon: float
    f1: float
    f2: float
    feasible: bool
    candidate: Candidate = field(repr=False, default=None)


@dataclass
class EpsilonResult:
    s1m: Candidate
    s2m: Candidate
    trace: list[EpsilonStep]
    chosen: Candidate | None
    status: str
    stop_reason: str

    @property
    def f1m(self) -> float:
        return self.s1m.f1

    @property
    def f2m(self) -> float:
        return self.s2m.f2

    def frontier(self) -> list[Candidate]:
        pts = [self.s1m, self.s2m] + [st.candidate for st in self.trace if st.feasible]
        return nondominated([p for p in pts if p is not None and p.feasible])


def nondominated(cands: list[Candidate]) -> list[Candidate]:
    keep = []
    for c in cands:
        dominated = any(
            (o.f1 <= c.f1 and o.f2 <= c.f2) and (o.f1 < c.f1 or o.f2 < c.f2) for o in cands
        )
        if not dominated and not any(k.f1 == c.f1 and k.f2 == c.f2 for k in keep):
            keep.append(c)
    return sorted(keep, key=lambda c: (c.f1, c.f2))


def epsilon_constraint(
    solve: Callable[[str, float | None, Candidate | None], Candidate],
    *,
    epsilon0: float = 2.0,
    step: float = 0.01,
    i_max: int = 200,
    tol: float = 1e-6,
    patience: int = 3,
) -> EpsilonResult:
    """Trace a Pareto frontier by tightening ``f2 <= eps * f2m``.

    ``solve(which, f2_bound, warm)`` must return the best :class:`Candidate`
    for ``which`` in ``{"f1", "f2"}``, subject to ``f2 <= f2_bound`` when the
    bound is given. First ``f1`` and ``f2`` are minimised separately; then
    ``f1`` is minimised while ``eps`` falls by ``step`` per accepted
    iteration. Stops when ``f1`` changes by less than ``tol`` (relative) for
    ``patience`` consecutive iterations, when the bound becomes infeasible, or
    after ``i_max`` iterations.
    """
    s1m = solve("f1", None, None)
    s2m = solve("f2", None, None)
    if not (s1m.feasible and s2m.feasible):
        return EpsilonResult(s1m, s2m, [], None, "infeasible", "no feasible point for a single objective")
    f2m = s2m.f2
    trace: list[EpsilonStep] = []
    chosen, prev_f1, stable = None, None, 0
    status, reason = "non_converged", "i_max reached"
    warm = s1m
    for i in range(i_max):
        eps = epsilon0 - len([t for t in trace if t.feasible]) * step
        cand = solve("f1", eps * f2m, warm)
        trace.append(EpsilonStep(eps, cand.f1, cand.f2, cand.feasible, cand))
        if not cand.feasible:
            if chosen is None:
                status, reason = "infeasible", f"f2 <= {eps:.2f} * f2m unreachable"
            else:
                status, reason = "ok", "epsilon bound exhausted"
            break
        chosen, warm = cand, cand
        if prev_f1 is not None and abs(cand.f1 - prev_f1) < tol * abs(cand.f1):
            stable += 1
        else:
            stable = 0
        prev_f1 = cand.f1
        if stable >= patience:
            status, reason = "ok", "f1 converged"
            break
    return EpsilonResult(s1m, s2m, trace, chosen, status, reason)


# -------------------------------------------------------- design search


@dataclass(frozen=True)
class TubeGeometry:
    inner_radius: float
    outer_radius: float
    youngs_modulus: float = DEFAULT_YOUNGS_MODULUS


@dataclass(frozen=True)
class FixedGeometry:
    """Parameters the designer fixes by hand: steerable length and tube radii."""

    steerable_length: float
    outer: TubeGeometry
    inner: TubeGeometry


class _Subproblem:
    """Continuous search space for one pair of tenon counts.

    x = (beta_o, d_g^o, d_s^o, d_h^o, beta_i, d_g^i, d_s^i, d_h^i, theta_s^i)
    """

    def __init__(self, fixed: FixedGeometry, bounds: DesignBounds, n_o: int, n_i: int):
        self.fixed, self.bounds, self.n_o, self.n_i = fixed, bounds, n_o, n_i
        b = bounds
        beta = b.search_uncut_angle
        rows = [beta, b.slit_gap, b.slit_width, b.tenon_height] * 2 + [b.tenon_tilt]
        self.lo = np.array([r[0] for r in rows])
        self.hi = np.array([r[1] for r in rows])
        self.cos_lo, self.cos_hi = math.cos(b.tenon_tilt[1]), math.cos(b.tenon_tilt[0])

    def _tenon_length(self, beta, d_h, tilt, n, R_o):
        return 0.5 * ((TWO_PI - beta) * R_o / n + 2 * d_h / math.tan(tilt))

    def decode(self, x) -> tuple[SegmentDesign, np.ndarray]:
        """Design for ``x`` plus the inequality vector (<= 0 when feasible)."""
        f, b, L = self.fixed, self.bounds, self.fixed.steerable_length
        bo, gow, so, ho, bi, giw, si, hi_, ti = (float(v) for v in x)
        N_o, N_i = L / (so + gow), L / (si + giw)
        ratio = N_o * so / (N_i * si)
        to = math.acos(min(max(ratio, self.cos_lo), self.cos_hi))
        ls_o = self._tenon_length(bo, ho, to, self.n_o, f.outer.outer_radius)
        ls_i = self._tenon_length(bi, hi_, ti, self.n_i, f.inner.outer_radius)
        l_lo, l_hi = b.tenon_length
        N_lo, N_hi = b.slit_count
        g = np.array([
            ratio - self.cos_hi, self.cos_lo - ratio,
            (l_lo - ls_o) / l_hi, (ls_o - l_hi) / l_hi,
            (l_lo - ls_i) / l_hi, (ls_i - l_hi) / l_hi,
            (N_lo - N_o) / N_hi, (N_o - N_hi) / N_hi,
            (N_lo - N_i) / N_hi, (N_i - N_hi) / N_hi,
        ])
        clip = lambda v, r: min(max(v, r[0]), r[1])
        outer = SlitDesign(L, bo, clip(ls_o, b.tenon_length), gow, clip(N_o, b.slit_count), self.n_o, so, ho, to)
        inner = SlitDesign(L, bi, clip(ls_i, b.tenon_length), giw, clip(N_i, b.slit_count), self.n_i, si, hi_, ti)
        sd = SegmentDesign(
            TubeDesign(outer, f.outer.inner_radius, f.outer.outer_radius, f.outer.youngs_modulus),
            TubeDesign(inner, f.inner.inner_radius, f.inner.outer_radius, f.inner.youngs_modulus),
        )
        return sd, g

    def objectives(self, x) -> tuple[float, float]:
        return objectives(self.decode(x)[0])


@dataclass
class ParetoResult:
    frontier: list[Candidate]
    chosen: Candidate | None
    epsilon_trace: list[EpsilonStep]
    s1m: Candidate
    s2m: Candidate
    status: str
    stop_reason: str

    @property
    def design(self) -> SegmentDesign | None:
        return None if self.chosen is None else self.chosen.design

    def trace_rows(self) -> list[tuple[float, float, float, bool]]:
        return [(t.epsilon, t.f1, t.f2, t.feasible) for t in self.epsilon_trace]

    def trace_csv(self, path, fmt: str = "%.9f") -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "epsilon", "f1", "f2", "feasible"])
            for k, (e, f1, f2, ok) in enumerate(self.trace_rows()):
                w.writerow([k, "%.2f" % e, fmt % f1, fmt % f2, int(ok)])


DESIGN_OPTIONS = OptimizerOptions(population=20, elite=10, max_iterations=20)


def optimize_design(
    fixed: FixedGeometry,
    bounds: DesignBounds = TABLE_I,
    opts: OptimizerOptions = DESIGN_OPTIONS,
    *,
    epsilon0: float = 2.0,
    epsilon_step: float = 0.01,
    i_max: int = 200,
) -> ParetoResult:
    """Pareto-optimal slit parameters for one tube pair by the epsilon-constraint method.

    Tenon counts are enumerated over ``bounds.tenon_counts`` for both tubes;
    each continuous subproblem starts from a seeded GA screen and is finished
    by the penalised direct search. The best feasible subproblem wins, ties
    going to the lower enumeration index.
    """
    if fixed.steerable_length <= 0:
        raise InfeasibleBoundsError("steerable_length must be positive")
    combos = list(itertools.product(bounds.tenon_counts, repeat=2))
    subs = [_Subproblem(fixed, bounds, no, ni) for no, ni in combos]
    tol = opts.feasibility_tol
    calls = itertools.count()

    def solve_sub(k, which, f2_bound, warm, call_id):
        sp = subs[k]
        pick = 0 if which == "f1" else 1

        def obj(x):
            return sp.objectives(x)[pick]

        if f2_bound is None:
            ineq = lambda x: sp.decode(x)[1]
        else:
            ineq = lambda x: np.append(sp.decode(x)[1], (sp.objectives(x)[1] - f2_bound) / f2_bound)

        ga_opts = replace(opts, seed=int(np.random.SeedSequence([opts.seed, call_id, k]).generate_state(1)[0]), workers=1)
        scale = max(abs(obj(0.5 * (sp.lo + sp.hi))), 1e-12)
        screen = ga_minimize(
            lambda x: obj(x) / scale, (sp.lo, sp.hi), opts=ga_opts,
            constraints=lambda x: np.maximum(ineq(x), 0.0),
        )
        starts = [screen.best_point]
        if warm is not None and warm.point[0] == k:
            starts.append(warm.point[1])
        best = None
        for x0 in starts:
            r = constrained_minimize(lambda x: obj(x) / scale, None, (sp.lo, sp.hi), x0, opts, inequality=ineq)
            sd, _ = sp.decode(r.best_point)
            feasible = r.feasible and max_relative_residual(sd) <= 10 * tol
            f1, f2 = objectives(sd)
            c = Candidate((k, r.best_point), f1, f2, feasible, sd)
            val = f1 if pick == 0 else f2
            if best is None or (c.feasible, -val) > (best.feasible, -(best.f1 if pick == 0 else best.f2)):
                best = c
        return best

    def solve(which, f2_bound, warm):
        call_id = next(calls)
        work = lambda k: solve_sub(k, which, f2_bound, warm, call_id)
        if opts.workers > 1:
            with ThreadPoolExecutor(opts.workers) as pool:
                results = list(pool.map(work, range(len(subs))))
        else:
            results = [work(k) for k in range(len(subs))]
        pick = (lambda c: c.f1) if which == "f1" else (lambda c: c.f2)
        feasible = [c for c in results if c.feasible]
        pool_ = feasible or results
        return min(pool_, key=pick)  # min keeps the first of equal values

    res = epsilon_constraint(solve, epsilon0=epsilon0, step=epsilon_step, i_max=i_max, tol=opts.convergence_tol)
    if not (res.s1m.feasible or res.s2m.feasible):
        raise InfeasibleBoundsError("no design satisfies the coupling constraints inside the bounds")
    return ParetoResult(res.frontier(), res.chosen, res.trace, res.s1m, res.s2m, res.status, res.stop_reason)


# ------------------------------------------------------- reference data

TABLE_II_GEOMETRY = {
    "proximal": FixedGeometry(30.0, TubeGeometry(1.4, 1.7), TubeGeometry(0.8, 1.1)),
    "distal": FixedGeometry(30.0, TubeGeometry(1.2, 1.5), TubeGeometry(0.6, 0.9)),
}


def _table_iii_segment(geom: FixedGeometry, outer: tuple, inner: tuple) -> SegmentDesign:
    L = geom.steerable_length
    return SegmentDesign(
        TubeDesign(SlitDesign(L, *outer), geom.outer.inner_radius, geom.outer.outer_radius),
        TubeDesign(SlitDesign(L, *inner), geom.inner.inner_radius, geom.inner.outer_radius),
    )


# beta, l_s, d_g, N, n, d_s, d_h, theta_s
TABLE_III = {
    "proximal": _table_iii_segment(
        TABLE_II_GEOMETRY["proximal"],
        (0.5070, 0.6348, 0.4697, 59.8, 5, 0.0317, 0.3, 1.1238),
        (0.5, 0.5815, 0.35, 73.17, 5, 0.06, 0.25, 0.9557),
    ),
    "distal": _table_iii_segment(
        TABLE_II_GEOMETRY["distal"],
        (0.513, 0.6857, 0.4665, 59.94, 3, 0.0339, 0.3, 1.0893),
        (0.4992, 0.5775, 0.35, 73.19, 3, 0.06, 0.25, 0.9161),
    ),
}


# ---------------------------------------------------------------- export

ROW_LABELS = {
    "steerable_length": "L (mm)",
    "uncut_angle": "beta (rad)",
    "tenon_length": "l_s (mm)",
    "slit_gap": "d_g (mm)",
    "slit_count": "N",
    "tenon_count": "n",
    "slit_width": "d_s (mm)",
    "tenon_height": "d_h (mm)",
    "tenon_tilt": "theta_s (rad)",
}


def segment_summary(sd: SegmentDesign) -> dict:
    f1, f2 = objectives(sd)
    rounded = sd.rounded()
    return {
        "f1_mm": f1,
        "f2_per_mm4": f2,
        "max_bend_angle_pulled_deg": math.degrees(max_bend_angle(sd, PULLED)),
        "max_bend_angle_pushed_deg": math.degrees(max_bend_angle(sd, PUSHED)),
        "residuals": design_residuals(sd),
        "residuals_after_rounding": design_residuals(rounded),
        "bound_violations": sd.outer.slits.bound_violations() + sd.inner.slits.bound_violations(),
    }


def design_document(designs: dict[str, SegmentDesign]) -> dict:
    """Rows = slit parameters, columns = segment/tube, as in the published table."""
    cols, tubes = [], []
    for seg, sd in designs.items():
        for which in ("outer", "inner"):
            cols.append(f"{seg}/{which}")
            tubes.append(getattr(sd, which).slits)
    rows = {f: [getattr(t, f) for t in tubes] for f in SlitDesign.FIELDS}
    rows["slit_count_rounded"] = [t.slit_count_rounded for t in tubes]
    return {
        "columns": cols,
        "row_labels": {**ROW_LABELS, "slit_count_rounded": "N (rounded)"},
        "rows": rows,
        "segments": {seg: segment_summary(sd) for seg, sd in designs.items()},
    }
