from .model import (
    CrfModel,
    feature_vector,
    label_marginals,
    log_partition,
    nll_and_gradient,
    num_weights,
    sequence_score,
    transition_feature,
    viterbi_decode,
)
from .thresholds import ThresholdBank, fit_thresholds, overlap_coefficient
from .train import CrfTrainResult, train_crf

__all__ = [
    "CrfModel", "CrfTrainResult", "ThresholdBank", "feature_vector", "fit_thresholds",
    "label_marginals", "log_partition", "nll_and_gradient", "num_weights", "overlap_coefficient",
    "sequence_score", "train_crf", "transition_feature", "viterbi_decode",
]
