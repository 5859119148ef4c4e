"""Streaming STFT phase reconstruction from magnitude.

Two-stage pipeline: estimate per-frame phase differences (analytically from
log-magnitude, or with causal convolutional networks), then integrate them
into phase, either by heap-ordered path integration or by a closed-form
weighted least-squares solve over complex coefficients.
"""

from .spectral import (
    CausalityError,
    FrameStream,
    Spectrogram,
    StftConfig,
    gaussian_window,
    hann_window,
    istft,
    stft,
)
from .phasediff import (
    ComplexRatioFrame,
    MAGNITUDE_FLOOR_REL,
    PhaseDifferenceFrame,
    awe,
    bin_phase_advance,
    bpd_to_tpd,
    cosine_loss,
    floor_magnitude,
    log_magnitude,
    oracle_difference_frames,
    oracle_differences,
    to_complex_ratios,
    tpd_to_bpd,
    wrap,
)
from .pghi import (
    CausalDerivativeStream,
    DerivativeEstimates,
    HeapIntegrationParams,
    RtpghiIntegrator,
    average_to_backward_differences,
    estimate_derivatives_causal,
    estimate_derivatives_centered,
    pghi_reconstruct,
    rtpghi_reconstruct,
)
from .wls import (
    DEFAULT_GAMMA0,
    DEFAULT_P,
    ReconstructionState,
    TridiagonalHermitianSystem,
    WlsWeights,
    assemble_system,
    build_weights,
    griffin_lim_refine,
    initialize_first_frame,
    reconstruct_frame,
    reconstruct_time_integration,
    reconstruct_wls,
    solve_tridiagonal,
    time_integration_step,
    wls_objective,
)
from .nn import (
    ConvNetModel,
    DnnDifferenceEstimator,
    LayerSpec,
    ModelHeadError,
    build_feature,
    build_model,
    estimate_differences_dnn,
    forward,
    forward_batch,
    load_model,
    load_model_file,
    save_model,
    save_model_file,
)
from .metrics import (
    AweSummary,
    EvaluationReport,
    awe_summary,
    evaluate_pair,
    lsc,
    magnitude_quantile_mask,
    recompute_differences_from_phase,
)

__version__ = "0.1.0"
