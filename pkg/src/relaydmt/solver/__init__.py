"""Outage-exponent oracle: exact polyhedral and grid minimization, nested min-max bounds."""

from relaydmt.solver.expr import (
    Comparison,
    Const,
    Expr,
    Max,
    Min,
    OutageRegionSpec,
    Var,
    Variable,
    WSum,
    maximum,
    minimum,
    normal_form,
)
from relaydmt.solver.bounds import (
    GlobalCSIRegion,
    LocalCSIResult,
    StrictnessGap,
    dynamic_schedule,
    solve_global_csi,
    solve_local_csi,
    solve_parallel_dynamic,
    static_schedule,
    strictness_gap_at,
)
from relaydmt.solver.grid import grid_minimize, grid_profile
from relaydmt.solver.outage import DEFAULT_EPSILONS, ExponentSolution, open_minimize, solve_outage_exponent
from relaydmt.solver.regions import (
    ddf_grid_profile,
    exponent_cost,
    full_duplex_region,
    half_duplex_rate,
    single_relay_vars,
    solve_ddf_exponent,
    static_qmf_region,
)

__all__ = [
    "Comparison",
    "Const",
    "DEFAULT_EPSILONS",
    "ExponentSolution",
    "Expr",
    "GlobalCSIRegion",
    "LocalCSIResult",
    "Max",
    "Min",
    "OutageRegionSpec",
    "StrictnessGap",
    "Var",
    "Variable",
    "WSum",
    "ddf_grid_profile",
    "dynamic_schedule",
    "exponent_cost",
    "full_duplex_region",
    "grid_minimize",
    "grid_profile",
    "half_duplex_rate",
    "maximum",
    "minimum",
    "normal_form",
    "open_minimize",
    "single_relay_vars",
    "solve_ddf_exponent",
    "solve_global_csi",
    "solve_local_csi",
    "solve_outage_exponent",
    "solve_parallel_dynamic",
    "static_qmf_region",
    "static_schedule",
    "strictness_gap_at",
]
