"""Target-PCA: latent-factor estimation and imputation for partially
observed panels with an auxiliary panel."""

from ._tpca import (
    FactorFit,
    InfeasibleError,
    InvalidArgument,
    NumericalError,
    anchor_forward_fill,
    fit,
    generate_mask,
    impute,
    load_csv,
    obs_stats,
    select_gamma,
)

__all__ = [
    "FactorFit",
    "InfeasibleError",
    "InvalidArgument",
    "NumericalError",
    "anchor_forward_fill",
    "fit",
    "generate_mask",
    "impute",
    "load_csv",
    "obs_stats",
    "select_gamma",
]
