from .crossval import PROTOCOLS, CrossValResult, Fold, FoldResult, loocv, make_folds
from .metrics import (
    DEFAULT_WINDOW,
    DEFAULT_WINDOWS,
    SWEEP_HEADER,
    EvalReport,
    TransitionCounts,
    evaluate,
    evaluate_many,
    per_behaviour_accuracy,
    pool,
    transition_metrics,
    window_hits,
    window_sweep,
    windowed_accuracy,
    windowed_confusion,
)
from .recipes import (
    FAMILIES,
    Recipe,
    TrainOutput,
    featurize,
    fit_recipe,
    predict_labels,
    smooth_hmm,
    train_model,
)
from .report import (
    report_json,
    write_confusion_csv,
    write_crossval,
    write_evaluation,
    write_json,
    write_sweep_csv,
)

__all__ = [
    "DEFAULT_WINDOW", "DEFAULT_WINDOWS", "FAMILIES", "PROTOCOLS", "SWEEP_HEADER",
    "CrossValResult", "EvalReport", "Fold", "FoldResult", "Recipe", "TransitionCounts",
    "TrainOutput", "evaluate", "evaluate_many", "featurize", "fit_recipe", "loocv", "make_folds",
    "per_behaviour_accuracy",
    "pool", "predict_labels", "report_json", "smooth_hmm", "train_model", "transition_metrics",
    "window_hits", "window_sweep", "windowed_accuracy", "windowed_confusion",
    "write_confusion_csv", "write_crossval", "write_evaluation", "write_json",
    "write_sweep_csv",
]
