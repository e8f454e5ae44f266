"""Coordinate-independent sparse sufficient dimension reduction.

Builds method-specific kernel pairs (PCA, PFC, SIR, SAVE, DR), solves the
row-sparse penalized generalized-eigenvalue problem by iterated local
quadratic approximation, selects the penalty scale by information criterion,
and ships a seeded Monte-Carlo lab for the benchmark designs.
"""

from .backend import BACKEND
from .errors import (
    ActiveSetTooSmall,
    AllFitsFailed,
    CiseError,
    InvalidInput,
    MissingColumn,
    NotPSD,
    ParseError,
    RankDeficient,
    RankDeficientBasis,
    SingularMatrix,
    SliceError,
    TooFewRows,
)
from .kernels import (
    Dataset,
    FBasis,
    KernelPair,
    build_kernel,
    center_cov,
    fbasis,
    kernel_dr,
    kernel_pca,
    kernel_pfc,
    kernel_save,
    kernel_sir,
    slice_response,
)
from .linalg import EigenDecomp, inv_sqrt, sqrt_psd, sym_eig
from .metrics import SelectionOutcome, selection_outcome, subspace_distance
from .simlab import (
    SelectionReport,
    StudyConfig,
    ar1_cov,
    bootstrap_screen,
    generate_study,
    run_replications,
)
from .solver import (
    PenaltyWeights,
    SparseEstimate,
    TuningTrace,
    adaptive_weights,
    cise_fit,
    df_grassmann,
    osdre,
    penalty_rho,
    tune,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveSetTooSmall", "AllFitsFailed", "BACKEND", "CiseError", "Dataset",
    "EigenDecomp", "FBasis", "InvalidInput", "KernelPair", "MissingColumn",
    "NotPSD", "ParseError", "PenaltyWeights", "RankDeficient",
    "RankDeficientBasis", "SelectionOutcome", "SelectionReport",
    "SingularMatrix", "SliceError", "SparseEstimate", "StudyConfig",
    "TooFewRows", "TuningTrace", "adaptive_weights", "ar1_cov",
    "bootstrap_screen", "build_kernel", "center_cov", "cise_fit",
    "df_grassmann", "fbasis", "generate_study", "inv_sqrt", "kernel_dr",
    "kernel_pca", "kernel_pfc", "kernel_save", "kernel_sir", "osdre",
    "penalty_rho", "run_replications", "selection_outcome", "slice_response",
    "sqrt_psd", "subspace_distance", "sym_eig", "tune",
]
