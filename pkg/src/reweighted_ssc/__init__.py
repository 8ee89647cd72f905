"""Sparse subspace clustering with two-step reweighted l1 neighbor identification."""

from .data import Dataset, load_dataset_csv, write_dataset_csv
from .duality import (
    boundary_dictionary,
    check_lemma21,
    classify_constraints,
    dual_residual,
    representation_witness,
    verify_witness,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DataFormatError,
    DegenerateGeometryError,
    DegenerateLambdaError,
    EmptyDatasetError,
    InvalidInputError,
    NumericalError,
    SingularDictionaryError,
    SSCError,
    StaleSolutionError,
)
from .metrics import EventSpec, ccr, dcr, discovery_tally, event_indicators, metrics_report, tdr
from .pipeline import PipelineConfig, build_affinity, compute_weights, two_step_regress
from .solvers import SolveConfig, kkt_residual, solve_constrained_l1, solve_lasso, solve_weighted_lasso
from .spectral import SpectralConfig, estimate_num_clusters, spectral_cluster, symmetric_eig
from .synthetic import GenerationConfig, affinity_between, build_equiaffine_subspaces, generate, sample_dataset

__version__ = "0.1.0"
