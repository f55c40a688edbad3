"""Spectral clustering with adaptive-rank landmark (Nystrom) acceleration.

The exact pipeline eigendecomposes the degree-normalized Gaussian kernel;
the landmark pipelines approximate the same embedding from an n-by-m
similarity block, with the adaptive method choosing its rank from the
landmark spectrum. Analysis helpers verify the truncation identity and
the degree-perturbation bound that justify the approximation.
"""

__version__ = "0.1.0"

from .analysis import (
    GammaSweepRow,
    PerturbationReport,
    Theorem1Report,
    perturbation_report,
    sweep_gamma,
    theorem1_reports,
    verify_theorem1,
)
from .bench import (
    AggregateRow,
    ExperimentResult,
    ExperimentSpec,
    TrialRecord,
    run_experiment,
    timing_profile,
)
from .datagen import (
    DataMatrix,
    SyntheticSpec,
    make_blobs,
    make_circles,
    make_dataset,
    make_moons,
    read_csv,
    read_libsvm,
    write_csv,
)
from .embedding import (
    METHODS,
    RankPolicy,
    SpectralEmbedding,
    adaptive_nystrom_sc,
    determine_rank,
    exact_sc,
    fowlkes_nystrom_sc,
    li_nystrom_sc,
    modified_kernel,
)
from .errors import (
    DegenerateDegreeError,
    DegenerateGraphError,
    InvalidArgumentError,
    NotPsdError,
    NumericalError,
    NyscError,
    SizeLimitError,
    UndefinedMetricError,
)
from .kernel import (
    DenseKernel,
    KernelConfig,
    NystromFactors,
    build_dense_kernel,
    build_nystrom_factors,
    gaussian_similarity,
    nystrom_reconstruct,
    sample_landmarks_uniform,
)
from .kmeans import ClusteringResult, KMeansConfig, kmeans, normalize_rows
from .metrics import (
    ContingencyTable,
    build_contingency,
    eigenvector_alignment,
    f_score,
    largest_principal_angle,
    nmi,
)

__all__ = [name for name in dir() if not name.startswith("_")]
