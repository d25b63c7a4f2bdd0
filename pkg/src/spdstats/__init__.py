"""Statistics for samples of symmetric positive definite matrices.

The package stores a sample in up to three linked representations
(connectomes, tangent images, coordinate vectors) and keeps them
consistent while you move the tangent reference point, estimate Fréchet
means, run multi-group tests, or harmonize multi-site data.
"""

from .core import (
    EigenDecomposition,
    SpdMatrix,
    SymMatrix,
    cholesky_lower,
    frobenius_inner,
    frobenius_norm,
    is_spd,
    matrix_exp_sym,
    matrix_invsqrt_spd,
    matrix_log_spd,
    matrix_sqrt_spd,
    solve_lyapunov,
    sym_eig,
    validate_spd,
)
from .errors import (
    DegenerateGroupError,
    DomainError,
    NumericalError,
    ShapeError,
    SingularScatterError,
    SpdStatsError,
    StateError,
    UnsupportedMetric,
    ValidationError,
)
from .harmonize import CombatModel, apply_combat, combat_harmonization, fit_combat, rigid_harmonization
from .metrics import (
    AIRM,
    BURES_WASSERSTEIN,
    EUCLIDEAN,
    LOG_CHOLESKY,
    LOG_EUCLIDEAN,
    MetricDescriptor,
    TangentImage,
    distance,
    get_metric,
    metric_names,
    parallel_transport,
    register_metric,
    sym_to_tri,
    tri_dim,
    tri_to_sym,
)
from .parallel import get_num_threads, map_stack, rng_for, set_num_threads
from .sample import ConnectomeSample, FrechetConfig, frechet_mean_stack, rspdnorm
from .stats import (
    DEFAULT_TEST_CONFIG,
    FrechetAnovaResult,
    RiemAnovaResult,
    frechet_anova,
    log_wilks_lambda,
    pillais_trace,
    riem_anova,
)
from .supersample import SuperSample
from .cluster import calinski_harabasz, davies_bouldin, silhouette_score

__version__ = "0.1.0"

__all__ = [
    "AIRM",
    "BURES_WASSERSTEIN",
    "CombatModel",
    "ConnectomeSample",
    "DEFAULT_TEST_CONFIG",
    "DegenerateGroupError",
    "DomainError",
    "EUCLIDEAN",
    "EigenDecomposition",
    "FrechetAnovaResult",
    "FrechetConfig",
    "LOG_CHOLESKY",
    "LOG_EUCLIDEAN",
    "MetricDescriptor",
    "NumericalError",
    "RiemAnovaResult",
    "ShapeError",
    "SingularScatterError",
    "SpdMatrix",
    "SpdStatsError",
    "StateError",
    "SuperSample",
    "SymMatrix",
    "TangentImage",
    "UnsupportedMetric",
    "ValidationError",
    "apply_combat",
    "calinski_harabasz",
    "cholesky_lower",
    "combat_harmonization",
    "davies_bouldin",
    "distance",
    "fit_combat",
    "frechet_anova",
    "frechet_mean_stack",
    "frobenius_inner",
    "frobenius_norm",
    "get_metric",
    "get_num_threads",
    "is_spd",
    "log_wilks_lambda",
    "map_stack",
    "matrix_exp_sym",
    "matrix_invsqrt_spd",
    "matrix_log_spd",
    "matrix_sqrt_spd",
    "metric_names",
    "parallel_transport",
    "pillais_trace",
    "register_metric",
    "riem_anova",
    "rigid_harmonization",
    "rng_for",
    "rspdnorm",
    "set_num_threads",
    "silhouette_score",
    "solve_lyapunov",
    "sym_eig",
    "sym_to_tri",
    "tri_dim",
    "tri_to_sym",
    "validate_spd",
    "__version__",
]
