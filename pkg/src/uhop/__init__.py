"""Kernelized modern Hopfield memories with a learned linear feature map.

Stage I fits ``W`` by descending a separation loss over the stored memories;
Stage II runs the energy-decreasing retrieval dynamics in the induced kernel.
"""
from .analysis import (
    ExactRetrievalReport,
    MemoryMargin,
    check_exact_retrieval,
    exact_threshold,
    min_distance_condition,
    verify_fixed_point,
)
from .datasets import load_dataset
from .dynamics import (
    RetrievalConfig,
    RetrievalTrace,
    distance_retrieve,
    energy,
    error_bound,
    retrieval_step,
    retrieve,
)
from .errors import (
    AlphaError,
    BisectionFailure,
    DegenerateSet,
    DimensionError,
    EmptyDataset,
    LineSearchFailure,
    MalformedMagic,
    RankError,
    TruncatedPayload,
    UHopError,
)
from .kernel import (
    FeatureMap,
    ell_phi,
    identity_feature_map,
    init_feature_map,
    kernel_eval,
    kernel_overlap,
    lipschitz_of_phi,
    normalize_rows,
    phi,
)
from .loss import (
    Stage1Config,
    avg_separation_loss,
    dl_separation_loss,
    loss_gradient,
    max_separation_loss,
    separation_loss,
    stage1_optimize,
)
from .patterns import (
    GaussianNoise,
    MaskFraction,
    PatternSet,
    corrupt,
    load_csv,
    load_idx,
    load_patterns,
    save_csv,
    separation_stats,
)
from .pipeline import UHopResult, batch_retrieve, derive_seed, learn_feature_map, uhop_retrieve
from .representation import (
    StochasticMatrix,
    orthogonalize_features,
    realize_attention,
    verify_realization,
)
from .separation import SeparationFn, entmax, lse, psi_star, sep, softmax, sparsemax, tsallis_entropy

__version__ = "0.1.0"
