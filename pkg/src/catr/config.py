"""JSON run configuration.

Lengths in mm, angles in rad, forces in N, modulus in MPa. Any angle may be
given as a string with a ``deg`` suffix (``"170deg"``). Missing keys take the
defaults below, which reproduce the reference robot; unknown keys are an
error so that typos do not pass silently.
"""
from __future__ import annotations

import copy
import json
import math
import re
from pathlib import Path

from .cross_section import DEFAULT_YOUNGS_MODULUS, TubeCrossSection
from .errors import CATRError, ConfigError
from .multiseg import DEFAULT_GRID, DEFAULT_VOXEL, ActuationState, IKSettings, Robot, TaskTarget
from .optim import OptimizerOptions
from .segment_kinematics import SegmentSpec
from .slit_design import DesignBounds, FixedGeometry, SlitDesign, TubeGeometry
from .statics import DEFAULT_GRID as STATICS_GRID
from .statics import LoadCase

_DEG = re.compile(r"^\s*([-+0-9.eE]+)\s*deg\s*$")

DEFAULTS: dict = {
    "seed": 0,
    "youngs_modulus": DEFAULT_YOUNGS_MODULUS,
    "insertion_max": 20.0,
    "extension_max": 10.0,
    "compliant_length": 40.0,
    "segments": {
        "proximal": {
            "steerable_length": 30.0,
            "max_bend_angle": "170deg",
            "pushpull_min": None,
            "pushpull_max": None,
            "outer": {"inner_radius": 1.4, "outer_radius": 1.7, "uncut_angle": 0.507, "slits": None},
            "inner": {"inner_radius": 0.8, "outer_radius": 1.1, "uncut_angle": 0.5, "slits": None},
        },
        "distal": {
            "steerable_length": 30.0,
            "max_bend_angle": "160deg",
            "pushpull_min": None,
            "pushpull_max": None,
            "outer": {"inner_radius": 1.2, "outer_radius": 1.5, "uncut_angle": 0.513, "slits": None},
            "inner": {"inner_radius": 0.6, "outer_radius": 0.9, "uncut_angle": 0.4992, "slits": None},
        },
    },
    "optimizer": {
        "population": 20,
        "elite": 10,
        "max_iterations": 20,
        "feasibility_tol": 1e-6,
        "convergence_tol": 1e-6,
    },
    "design": {
        "segments": ["proximal", "distal"],
        "epsilon0": 2.0,
        "epsilon_step": 0.01,
        "i_max": 200,
        "bounds": {
            "uncut_angle": [0.0, 2 * math.pi],
            "tenon_length": [0.1, 0.7],
            "slit_gap": [0.3, 0.6],
            "slit_count": [1.0, 1000.0],
            "tenon_counts": [1, 3, 5],
            "slit_width": [0.03, 0.06],
            "tenon_height": [0.25, 0.3],
            "tenon_tilt": ["25deg", "60deg"],
        },
    },
    "fk": {"actuation": {f: 0.0 for f in ActuationState.FIELDS}},
    "ik": {
        "targets": [{"position": [9.161, 10.6836, 61.5531], "pointing": [-0.09655, 0.48646, 0.86835]}],
        "prev": None,
        "chain": True,
        "direction_weight": 10.0,
        "pushpull_weight": 0.1,
        "tolerance": 1.0,
        "local_refine": True,
        "refine_evaluations": 600,
        "generation_refine": 30,
        "restarts": 2,
    },
    "workspace": {"grid": list(DEFAULT_GRID), "voxel": DEFAULT_VOXEL, "q_p": 0.0, "jitter": False},
    "statics": {
        "segment": "proximal",
        "grid": STATICS_GRID,
        "load": {"axial_force": 1.0, "tip_radial_force": 0.0, "tip_tangent_force": 0.0, "active_length": None},
    },
    "dexterity": {"point": [0.0, 0.0, 60.0]},
}

# fields whose values are angles (may carry a deg suffix)
_ANGLE_KEYS = {"max_bend_angle", "uncut_angle", "tenon_tilt", "theta_M_p", "theta_M_d"}
# subtrees whose keys are free-form
_OPEN = {"fk.actuation", "ik.targets", "ik.prev", "dexterity.point", "workspace.grid", "design.segments"}


def parse_angle(v, where: str) -> float:
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected an angle, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        m = _DEG.match(v)
        if m:
            try:
                return math.radians(float(m.group(1)))
            except ValueError:
                pass
    raise ConfigError(f"{where}: expected an angle in rad or a string like '30deg', got {v!r}")


def _number(v, where: str, *, positive=False, nonneg=False, integer=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}: expected a finite number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{where}: must be > 0, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(f"{where}: must be >= 0, got {v!r}")
    return int(v) if integer else float(v)


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"{where}: unknown key")
        if isinstance(base[k], dict) and where not in _OPEN:
            if not isinstance(v, dict):
                raise ConfigError(f"{where}: expected an object")
            out[k] = _merge(base[k], v, where + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _normalise_angles(d, path=""):
    """Resolve every angle field to rad so the echoed config is unambiguous."""
    if isinstance(d, dict):
        for k, v in d.items():
            where = f"{path}{k}"
            if k in _ANGLE_KEYS and v is not None and not isinstance(v, (dict, list)):
                d[k] = parse_angle(v, where)
            elif k in _ANGLE_KEYS and isinstance(v, list):
                d[k] = [parse_angle(x, f"{where}[{i}]") for i, x in enumerate(v)]
            else:
                _normalise_angles(v, where + ".")
    elif isinstance(d, list):
        for i, v in enumerate(d):
            _normalise_angles(v, f"{path[:-1]}[{i}].")


class RobotConfig:
    """Validated configuration; ``resolved`` holds the full dict with defaults filled."""

    def __init__(self, data: dict | None = None):
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
        self.resolved = _merge(DEFAULTS, data or {})
        _normalise_angles(self.resolved)
        self._validate()

    @classmethod
    def load(cls, path) -> "RobotConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        return cls(data)

    # ---------------------------------------------------------- builders

    @property
    def seed(self) -> int:
        return self.resolved["seed"]

    def with_seed(self, seed: int) -> "RobotConfig":
        new = copy.copy(self)
        new.resolved = copy.deepcopy(self.resolved)
        new.resolved["seed"] = int(seed)
        new._validate()
        return new

    def tube(self, seg: str, which: str) -> TubeCrossSection:
        t = self.resolved["segments"][seg][which]
        beta = t["slits"]["uncut_angle"] if t["slits"] else t["uncut_angle"]
        return TubeCrossSection(t["inner_radius"], t["outer_radius"], beta, self.resolved["youngs_modulus"])

    def slit_design(self, seg: str, which: str) -> SlitDesign | None:
        s = self.resolved["segments"][seg][which]["slits"]
        if not s:
            return None
        s = dict(s)
        s.setdefault("steerable_length", self.resolved["segments"][seg]["steerable_length"])
        return SlitDesign(**s)

    def segment(self, name: str) -> SegmentSpec:
        s = self.resolved["segments"][name]
        return SegmentSpec(
            outer_cs=self.tube(name, "outer"),
            inner_cs=self.tube(name, "inner"),
            steerable_length=s["steerable_length"],
            max_bend_angle=s["max_bend_angle"],
            pushpull_min=s["pushpull_min"],
            pushpull_max=s["pushpull_max"],
        )

    def robot(self) -> Robot:
        r = self.resolved
        return Robot(
            self.segment("proximal"),
            self.segment("distal"),
            insertion_max=r["insertion_max"],
            extension_max=r["extension_max"],
            compliant_length=r["compliant_length"],
        )

    def optimizer(self, workers: int = 1) -> OptimizerOptions:
        # worker count is an execution setting, kept out of the config so that
        # outputs stay identical across it
        return OptimizerOptions(seed=self.seed, workers=workers, **self.resolved["optimizer"])

    def design_bounds(self) -> DesignBounds:
        b = self.resolved["design"]["bounds"]
        kw = {k: tuple(v) for k, v in b.items()}
        return DesignBounds(**kw)

    def fixed_geometry(self, seg: str) -> FixedGeometry:
        s = self.resolved["segments"][seg]
        E = self.resolved["youngs_modulus"]
        return FixedGeometry(
            s["steerable_length"],
            TubeGeometry(s["outer"]["inner_radius"], s["outer"]["outer_radius"], E),
            TubeGeometry(s["inner"]["inner_radius"], s["inner"]["outer_radius"], E),
        )

    def actuation(self, d: dict | None = None, where: str = "fk.actuation") -> ActuationState:
        d = self.resolved["fk"]["actuation"] if d is None else d
        if not isinstance(d, dict):
            raise ConfigError(f"{where}: expected an object")
        for k in d:
            if k not in ActuationState.FIELDS:
                raise ConfigError(f"{where}.{k}: unknown key")
        vals = {}
        for k in ActuationState.FIELDS:
            v = d.get(k, 0.0)
            vals[k] = parse_angle(v, f"{where}.{k}") if k.startswith("theta") else _number(v, f"{where}.{k}")
        return ActuationState(**vals)

    def ik_settings(self) -> IKSettings:
        i = self.resolved["ik"]
        return IKSettings(
            direction_weight=i["direction_weight"],
            pushpull_weight=i["pushpull_weight"],
            tolerance=i["tolerance"],
            local_refine=bool(i["local_refine"]),
            refine_evaluations=int(i["refine_evaluations"]),
            generation_refine=int(i["generation_refine"]),
            restarts=int(i["restarts"]),
        )

    def ik_targets(self) -> list[TaskTarget]:
        out = []
        for k, t in enumerate(self.resolved["ik"]["targets"]):
            where = f"ik.targets[{k}]"
            if not isinstance(t, dict) or set(t) != {"position", "pointing"}:
                raise ConfigError(f"{where}: expected an object with 'position' and 'pointing'")
            pos = self._vec3(t["position"], where + ".position")
            d = self._vec3(t["pointing"], where + ".pointing")
            n = math.sqrt(sum(c * c for c in d))
            if n == 0:
                raise ConfigError(f"{where}.pointing: must be non-zero")
            out.append(TaskTarget(pos, [c / n for c in d]))
        return out

    def load_case(self) -> LoadCase:
        ld = dict(self.resolved["statics"]["load"])
        if ld["active_length"] is None:
            ld["active_length"] = self.resolved["segments"][self.resolved["statics"]["segment"]]["steerable_length"]
        return LoadCase(**ld)

    @staticmethod
    def _vec3(v, where):
        if not isinstance(v, list) or len(v) != 3:
            raise ConfigError(f"{where}: expected three numbers")
        return [_number(c, f"{where}[{i}]") for i, c in enumerate(v)]

    # -------------------------------------------------------- validation

    def _validate(self) -> None:
        r = self.resolved
        _number(r["seed"], "seed", nonneg=True, integer=True)
        if not r["seed"] < 2**64:
            raise ConfigError("seed: must be < 2**64")
        _number(r["youngs_modulus"], "youngs_modulus", positive=True)
        for k in ("insertion_max", "extension_max", "compliant_length"):
            _number(r[k], k, nonneg=True)
        for seg in ("proximal", "distal"):
            s = r["segments"][seg]
            p = f"segments.{seg}"
            _number(s["steerable_length"], p + ".steerable_length", positive=True)
            m = _number(s["max_bend_angle"], p + ".max_bend_angle", positive=True)
            if m > 2 * math.pi:
                raise ConfigError(f"{p}.max_bend_angle: must be <= 2*pi, got {m}")
            for k in ("pushpull_min", "pushpull_max"):
                if s[k] is not None:
                    _number(s[k], f"{p}.{k}")
            for which in ("outer", "inner"):
                t = s[which]
                q = f"{p}.{which}"
                ri = _number(t["inner_radius"], q + ".inner_radius", nonneg=True)
                ro = _number(t["outer_radius"], q + ".outer_radius", positive=True)
                if not ro > ri:
                    raise ConfigError(f"{q}.outer_radius: must exceed inner_radius ({ri}), got {ro}")
                b = _number(t["uncut_angle"], q + ".uncut_angle")
                if not 0 < b <= 2 * math.pi:
                    raise ConfigError(f"{q}.uncut_angle: must lie in (0, 2*pi], got {b}")
                if t["slits"] is not None:
                    self._check_slits(t["slits"], q + ".slits")
            if not s["inner"]["outer_radius"] <= s["outer"]["inner_radius"]:
                raise ConfigError(f"{p}.inner.outer_radius: must not exceed outer tube inner_radius")
            self._wrap(lambda: self.segment(seg), p)
        o = r["optimizer"]
        for k in ("population", "elite", "max_iterations"):
            _number(o[k], f"optimizer.{k}", positive=k != "elite", nonneg=True, integer=True)
        for k in ("feasibility_tol", "convergence_tol"):
            _number(o[k], f"optimizer.{k}", positive=True)
        self._wrap(self.optimizer, "optimizer")
        d = r["design"]
        if not isinstance(d["segments"], list) or not d["segments"] or any(
            x not in ("proximal", "distal") for x in d["segments"]
        ):
            raise ConfigError("design.segments: expected a non-empty list of 'proximal'/'distal'")
        _number(d["epsilon0"], "design.epsilon0", positive=True)
        _number(d["epsilon_step"], "design.epsilon_step", positive=True)
        _number(d["i_max"], "design.i_max", positive=True, integer=True)
        for k, v in d["bounds"].items():
            if k == "tenon_counts":
                if not isinstance(v, list) or not v:
                    raise ConfigError("design.bounds.tenon_counts: expected a list of odd integers")
                for i, n in enumerate(v):
                    _number(n, f"design.bounds.tenon_counts[{i}]", positive=True, integer=True)
                continue
            if not isinstance(v, list) or len(v) != 2:
                raise ConfigError(f"design.bounds.{k}: expected [min, max]")
            for i, x in enumerate(v):
                _number(x, f"design.bounds.{k}[{i}]")
        self._wrap(self.design_bounds, "design.bounds")
        self.actuation()
        self.ik_targets()
        i = r["ik"]
        if i["prev"] is not None:
            self.actuation(i["prev"], "ik.prev")
        for k in ("direction_weight", "pushpull_weight"):
            _number(i[k], f"ik.{k}", nonneg=True)
        _number(i["tolerance"], "ik.tolerance", positive=True)
        _number(i["refine_evaluations"], "ik.refine_evaluations", nonneg=True, integer=True)
        _number(i["generation_refine"], "ik.generation_refine", nonneg=True, integer=True)
        _number(i["restarts"], "ik.restarts", nonneg=True, integer=True)
        w = r["workspace"]
        if not isinstance(w["grid"], list) or len(w["grid"]) != 5:
            raise ConfigError("workspace.grid: expected five integers")
        for k, n in enumerate(w["grid"]):
            _number(n, f"workspace.grid[{k}]", positive=True, integer=True)
        _number(w["voxel"], "workspace.voxel", positive=True)
        _number(w["q_p"], "workspace.q_p", nonneg=True)
        st = r["statics"]
        if st["segment"] not in ("proximal", "distal"):
            raise ConfigError("statics.segment: expected 'proximal' or 'distal'")
        _number(st["grid"], "statics.grid", positive=True, integer=True)
        for k in ("axial_force", "tip_radial_force", "tip_tangent_force"):
            _number(st["load"][k], f"statics.load.{k}")
        if st["load"]["active_length"] is not None:
            _number(st["load"]["active_length"], "statics.load.active_length", positive=True)
        self._wrap(self.load_case, "statics.load")
        self._vec3(r["dexterity"]["point"], "dexterity.point")

    def _check_slits(self, s, where):
        if not isinstance(s, dict):
            raise ConfigError(f"{where}: expected an object")
        allowed = set(SlitDesign.FIELDS)
        for k in s:
            if k not in allowed:
                raise ConfigError(f"{where}.{k}: unknown key")
        missing = allowed - set(s) - {"steerable_length"}
        if missing:
            raise ConfigError(f"{where}: missing {sorted(missing)}")
        for k, v in s.items():
            _number(v, f"{where}.{k}", positive=k not in ("uncut_angle",), integer=k == "tenon_count")

    @staticmethod
    def _wrap(fn, where):
        try:
            return fn()
        except ConfigError:
            raise
        except (CATRError, ValueError, TypeError) as exc:
            raise ConfigError(f"{where}: {exc}") from None

    def to_dict(self) -> dict:
        return copy.deepcopy(self.resolved)
