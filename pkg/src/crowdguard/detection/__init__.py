"""Congestion detection: strategies, grouping, region growing, vacancy and obedience."""

from .grouping import Group, SubGroup, build_groups, same_direction, split_subgroups
from .params import DetectionParams
from .region import (
    CongestedRegion,
    expand_congested,
    find_congested_region,
    overlapping_grids,
    scan_grids,
)
from .strategies import (
    Analysis,
    Cause,
    Convergence,
    FlowCounter,
    FlowVerdict,
    MacroVerdict,
    MicroVerdict,
    NaiveVerdict,
    Strategy,
    TrappedVerdict,
    Verdict,
    analyze,
    capacity,
    count_flow,
    detect_free_flow,
    detect_macro,
    detect_macro_micro,
    detect_micro,
    detect_naive,
    detect_trapped,
    deviates,
    disobedience_fraction,
    find_convergences,
    in_grid,
    is_vacant,
    occupants,
    ray_intersection,
)
from ..spatial import SpatialHash, neighbor_index

__all__ = [name for name in dir() if not name.startswith("_")]
