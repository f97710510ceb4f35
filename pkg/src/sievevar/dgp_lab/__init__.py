from .dgps import (
    HIGH_DIM_FUNCTIONS,
    KINDS,
    DgpLayout,
    DgpSpec,
    chaos_map,
    generate,
    high_dim_function,
    irregular_iid_fn,
    layout,
    model1_g,
    model2_nonlinear,
)
from .estimators import (
    ESTIMATORS,
    Ann,
    EstimatorOutput,
    KernelPlm,
    LinearModel,
    LocalLinear,
    MeanModel,
    Sann,
    TrueModel,
    make_estimator,
)
from .mc import (
    IdentityError,
    McResult,
    decompose_mse,
    default_split,
    integrate_metrics,
    pointwise_metrics,
    run_mc,
    sieve_sweep,
)
from .presets import PRESETS, Study, fig2, fig3, parse_cell, table2, table3

__all__ = [
    "HIGH_DIM_FUNCTIONS",
    "KINDS",
    "DgpLayout",
    "DgpSpec",
    "chaos_map",
    "generate",
    "high_dim_function",
    "irregular_iid_fn",
    "layout",
    "model1_g",
    "model2_nonlinear",
    "ESTIMATORS",
    "Ann",
    "EstimatorOutput",
    "KernelPlm",
    "LinearModel",
    "LocalLinear",
    "MeanModel",
    "Sann",
    "TrueModel",
    "make_estimator",
    "IdentityError",
    "McResult",
    "decompose_mse",
    "default_split",
    "integrate_metrics",
    "pointwise_metrics",
    "run_mc",
    "sieve_sweep",
    "PRESETS",
    "Study",
    "fig2",
    "fig3",
    "parse_cell",
    "table2",
    "table3",
]
