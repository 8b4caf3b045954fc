"""surfimpute: Gaussian-process imputation of missing values in 1-D
surface-profile measurements, with stationary spectral-mixture and
non-stationary generalized-spectral-mixture covariance models,
simulators, mask generators, classical baselines, and evaluation.
"""

from .errors import (
    ConfigError,
    CoverageError,
    EmptyDatasetError,
    FitFailureError,
    GridMismatchError,
    InsufficientFeaturesError,
    MustImputeFirstError,
    NoProfileElementsError,
    NothingToImputeError,
    NotPositiveDefiniteError,
    PartialFillError,
    StaleWhiteningError,
    SurfImputeError,
)
from .profile import (
    FILTER_ALPHA,
    Grid1D,
    Profile,
    SurfaceDataset,
    gaussian_filter,
    make_grid,
    profile_from_arrays,
    rq,
    rsm,
    split_dataset,
)
from .kernels import (
    NoiseParams,
    PeriodicParams,
    PointwiseLatents,
    SEParams,
    SMParams,
    build_cov,
    gibbs_cov,
    gsm_cov,
    k_gibbs,
    k_gsm,
    k_noise,
    k_periodic,
    k_se,
    k_sm,
    kernel_grad,
    n_params,
    raw_vector,
    value_on_lags,
    with_raw_vector,
)
from .optimize import OptConfig, OptTrace, fd_gradient, maximize, maximize_restarts
from .gp import (
    GPModel,
    ImputationResult,
    PosteriorGaussian,
    chol_jittered,
    estimate_noise_variance,
    fit_gp,
    fit_se,
    fit_sm,
    impute,
    log_marginal_likelihood,
    mll_gradient,
    posterior,
    predictive_posterior,
    sample_posterior,
    sm_initial_kernel,
)
from .gsm import (
    GsmModel,
    LatentFunctionSpec,
    WhiteningState,
    build_whitening,
    fit_gsm,
    gsm_objective,
    latent_eval,
    load_gsm,
    log_posterior,
    make_gsm_model,
    save_gsm,
    unwhiten,
    whiten,
)
from .baselines import (
    impute_constant,
    impute_idw,
    impute_median_filter,
    impute_nn_mean,
)
from .synthesis import (
    ChirpConfig,
    Dale,
    TurnedSimConfig,
    chirp_wavelength_at,
    chirp_wavelengths,
    mask_gradient,
    mask_smallest_width_dales,
    simulate_chirp,
    simulate_turned,
    watershed_dales,
)
from .evaluate import EvalReport, evaluate
from .io import (
    parse_config,
    read_posterior_csv,
    read_profile_csv,
    write_posterior_csv,
    write_profile_csv,
)
from .plotting import render_svg, svg_masked_spans, write_svg

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
