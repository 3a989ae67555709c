"""Federated representation learning on the coding-rate objective.

A small, fully deterministic simulator: a from-scratch MLP backbone embeds
data on the unit sphere, clients minimize the difference between the
per-class and global coding rates of their embeddings by local SGD, and a
server periodically averages their parameters.  Diagnostics quantify the
geometry the training is supposed to produce (orthogonal class subspaces,
full-rank within-class spectra).
"""

__version__ = "0.1.0"

from .backbone import (
    BackboneParams,
    DegenerateEmbeddingWarning,
    HeadParams,
    backward,
    flatten_params,
    forward,
    head_accuracy,
    head_cross_entropy,
    init_backbone,
    init_head,
    nearest_subspace_classify,
    train_head,
    unflatten_params,
)
from .config import (
    ConfigError,
    RunConfig,
    config_hash,
    parse_config,
    parse_config_text,
    serialize_config,
)
from .datagen import (
    Dataset,
    InfeasiblePartition,
    PartitionPlan,
    dirichlet_partition,
    gen_union_of_subspaces,
    load_csv,
    load_partition,
    save_csv,
    save_partition,
)
from .diagnostics import (
    SimilarityMatrix,
    SpectrumReport,
    ZeroNormColumn,
    class_spectra,
    cosine_matrix,
    orthogonality_score,
)
from .federation import (
    ClientState,
    FederationConfig,
    GradientStats,
    NonFiniteParameters,
    RoundLog,
    ShapeMismatch,
    estimate_gradient_stats,
    fedavg,
    full_gradient,
    local_update,
    run,
)
from .linalg import (
    DimensionMismatch,
    NoConvergence,
    NotPositiveDefinite,
    cholesky,
    derive_seed,
    logdet_spd,
    make_rng,
    solve_spd,
    sym_eig,
)
from .matio import load_matrix, save_matrix, write_matrix_csv
from .mcr2 import (
    CodingRateParams,
    ObjectiveValue,
    RepresentationBatch,
    check_subspace_conditions,
    coding_rate,
    mcr2_gradient,
    mcr2_objective,
    per_class_coding_rate,
    rate_from_spectrum,
)

__all__ = [name for name in dir() if not name.startswith("_")]
