"""Kinetostatics, slit design and dual-segment kinematics for coaxial antagonistic tubular robots."""
import types as _types

__version__ = "0.1.0"

from ._accel import backend_name
from .config import RobotConfig
from .cross_section import TubeCrossSection, neutral_offset, second_moment
from .errors import (
    CATRError,
    ConfigError,
    DegenerateGeometryError,
    EmptyVoxelError,
    GridTooSmallError,
    InfeasibleBoundsError,
    InvalidGeometryError,
    OutOfBoundsError,
    OutOfStrokeError,
)
from .multiseg import (
    ActuationState,
    IKSettings,
    Pose,
    Robot,
    TaskTarget,
    dexterity,
    dexterity_from_directions,
    forward_kinematics,
    inverse_kinematics,
    sample_workspace,
)
from .optim import OptimizerOptions, constrained_minimize, ga_minimize
from .segment_kinematics import ArcState, SegmentSpec, arc_transform, tip_position
from .slit_design import (
    TABLE_I,
    TABLE_III,
    DesignBounds,
    SegmentDesign,
    SlitDesign,
    coupling_residuals,
    epsilon_constraint,
    inter_tube_residual,
    max_bend_angle,
    objectives,
    optimize_design,
)
from .statics import LoadCase, recover_interaction_load, solve_deflection

__all__ = [n for n, v in dict(globals()).items() if not n.startswith("_") and not isinstance(v, _types.ModuleType)]
