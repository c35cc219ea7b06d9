from .registry import (
    HIGHER_IS_MALICIOUS, LOWER_IS_MALICIOUS, ORIENTATIONS, orientation,
    FITTED_DETECTORS, STATELESS_DETECTORS,
)
from .sprt import (
    ACCEPT_H0, ACCEPT_H1, UNDECIDED_AT_CAP, SprtConfig, SprtResult,
    sprt_decide, log_ratio, calibrate_rate_threshold, with_calibration,
)
from .mutation import (
    MutationEnsemble, MmDetector, build_ensemble, change_matrix, mm_score,
    mm_two_stage, fit_mm_detector, VERDICT_AE, VERDICT_BE, VERDICT_NORMAL,
)
from .activation import AsModel, as_fit, as_loglik, activation_layer_indices
from .density import KdeModel, kde_fit, kde_score, kernel_density, last_hidden_index
from .lid import LidConfig, LidState, lid_fit, lid_score, lid_from_distances, default_lid_layers
from .auxiliary import (
    bu_dropout_score, region_based_predict, region_agreement_batch,
    MedianFilterSqueeze, BitDepthSqueeze, squeeze_score,
)
from .state import save_state, load_state, AuxState

__all__ = [
    "HIGHER_IS_MALICIOUS", "LOWER_IS_MALICIOUS", "ORIENTATIONS", "orientation",
    "FITTED_DETECTORS", "STATELESS_DETECTORS",
    "ACCEPT_H0", "ACCEPT_H1", "UNDECIDED_AT_CAP", "SprtConfig", "SprtResult",
    "sprt_decide", "log_ratio", "calibrate_rate_threshold", "with_calibration",
    "MutationEnsemble", "MmDetector", "build_ensemble", "change_matrix", "mm_score",
    "mm_two_stage", "fit_mm_detector", "VERDICT_AE", "VERDICT_BE", "VERDICT_NORMAL",
    "AsModel", "as_fit", "as_loglik", "activation_layer_indices",
    "KdeModel", "kde_fit", "kde_score", "kernel_density", "last_hidden_index",
    "LidConfig", "LidState", "lid_fit", "lid_score", "lid_from_distances",
    "default_lid_layers",
    "bu_dropout_score", "region_based_predict", "region_agreement_batch",
    "MedianFilterSqueeze", "BitDepthSqueeze", "squeeze_score",
    "save_state", "load_state", "AuxState",
]
