"""Economic dispatch with caps on locational prices.

Problems live in one canonical form,
``minimize 1/2 x'Qx + c'x  s.t.  Ax <= b (lam >= 0),  Gx = h (nu free)``,
with bus-balance rows written so that ``nu`` is the locational price.
"""
from .dualize import (
    DualQp,
    LpDual,
    build_dual_qp,
    describe_lp_dual,
    dual_function_value,
    duality_gap,
    lagrangian_bound,
    lp_dual,
    recover_primal,
)
from .errors import *  # noqa: F401,F403
from .errors import __all__ as _error_names
from .model import (
    Bus,
    CanonicalQp,
    CapEntry,
    DispatchCase,
    Generator,
    Line,
    Load,
    RowMap,
    RowRef,
    build_qp,
    case_from_dict,
    case_to_dict,
    compile_dispatch,
    load_case,
    write_case,
)
from .pricecap import CapOutcome, CapReport, CapSpec, apply_caps, interpret, solve_capped
from .solver import KktSummary, Solution, SolverOptions, Status, kkt_summary, polish, solve, solve_dual_qp
from .verify import (
    GridResult,
    KktDiff,
    KktReport,
    SensitivityReport,
    compare_kkt,
    grid_oracle,
    kkt_residuals,
    sensitivity_check,
    vertex_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "Bus", "CanonicalQp", "CapEntry", "CapOutcome", "CapReport", "CapSpec", "DispatchCase",
    "DualQp", "Generator", "GridResult", "KktDiff", "KktReport", "KktSummary", "Line", "Load",
    "LpDual", "RowMap", "RowRef", "SensitivityReport", "Solution", "SolverOptions", "Status",
    "apply_caps", "build_dual_qp", "build_qp", "case_from_dict", "case_to_dict", "compare_kkt",
    "compile_dispatch", "describe_lp_dual", "dual_function_value", "duality_gap", "grid_oracle",
    "interpret", "kkt_residuals", "kkt_summary", "lagrangian_bound", "load_case", "lp_dual",
    "polish", "recover_primal", "sensitivity_check", "solve", "solve_capped", "solve_dual_qp",
    "vertex_oracle", "write_case",
] + list(_error_names)
