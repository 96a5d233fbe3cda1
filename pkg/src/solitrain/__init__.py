"""solitrain: soliton trains, interaction estimates, and the backward Duhamel
construction of train errors for nonlinear Schrodinger equations."""

from .grids import Field, Grid
from .nonlinearity import NonlinearityParams, eval_f, eval_wirtinger, gradient_of_f
from .solitons import (
    BoundState,
    SolitonParams,
    certify_decay,
    eval_soliton,
    solve_ground_state,
    soliton_lp_norm,
)
from .train import (
    DimGroup,
    ParamSchedule,
    TheoremPlan,
    TrainSpec,
    compute_A,
    compute_B,
    compute_vstar,
    gen_params,
    plan_construction,
)
from .evolution import (
    PicardConfig,
    free_propagate,
    picard_construct,
    split_step,
)

__all__ = [
    "Field",
    "Grid",
    "NonlinearityParams",
    "eval_f",
    "eval_wirtinger",
    "gradient_of_f",
    "BoundState",
    "SolitonParams",
    "certify_decay",
    "eval_soliton",
    "solve_ground_state",
    "soliton_lp_norm",
    "DimGroup",
    "ParamSchedule",
    "TheoremPlan",
    "TrainSpec",
    "compute_A",
    "compute_B",
    "compute_vstar",
    "gen_params",
    "plan_construction",
    "PicardConfig",
    "free_propagate",
    "picard_construct",
    "split_step",
]

__version__ = "0.1.0"
