"""Model recipes: everything needed to go from labeled raw training runs to
predicted labels on new runs, for each model family."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence, Union

from ..core.types import FeatureSequence, LabelSet, RawSequence
from ..crf import CrfModel, train_crf, viterbi_decode
from ..crf.model import DEFAULT_SIGMA2
from ..crf.thresholds import DEFAULT_OVERLAP_CUTOFF
from ..errors import DataError
from ..features import (
    DEFAULT_BINS,
    MODES,
    Calibration,
    apply_discretizer,
    build_features,
    fit_discretizer,
    fit_load_calibration,
)
from ..hmm import (
    GibbsHyper,
    HmmModel,
    filter_predict,
    fit_em,
    fit_gibbs,
    fit_supervised,
    match_states,
)
from ..hmm.em import DEFAULT_RESTARTS
from ..hmm.supervised import DEFAULT_TAU, PRIORS, TRANSITIONS

FAMILIES = ("hmm-ml", "hmm-em", "hmm-gibbs", "crf")
Model = Union[HmmModel, CrfModel]


@dataclass(frozen=True)
class Recipe:
    family: str = "hmm-ml"
    mode: str = "cop"
    D: int = DEFAULT_BINS
    transitions: str = "persistence"
    tau: float = DEFAULT_TAU
    prior: str = "learned"
    pseudocount: float = 1.0
    num_states: Optional[int] = None  # latent states for hmm-em / hmm-gibbs; None = one per label
    restarts: int = DEFAULT_RESTARTS
    em_iters: int = 200
    em_tol: float = 1e-4
    em_smoothing: float = 1e-6  # uniform mixing weight so held-out data never has zero likelihood
    sweeps: int = 200
    burn_in: int = 100
    gibbs_alpha: float = 1.0
    gibbs_beta: float = 1.0
    gibbs_gamma: float = 1.0
    sigma2: float = DEFAULT_SIGMA2
    crf_iters: int = 100
    overlap_cutoff: float = DEFAULT_OVERLAP_CUTOFF
    ticks_per_meter: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataError(f"unknown model family {self.family!r}; expected one of {FAMILIES}")
        if self.mode not in MODES:
            raise DataError(f"unknown feature mode {self.mode!r}; expected one of {MODES}")
        if self.transitions not in TRANSITIONS:
            raise DataError(f"transitions must be one of {TRANSITIONS}")
        if self.prior not in PRIORS:
            raise DataError(f"prior must be one of {PRIORS}")
        checks = [(self.D >= 2, "D must be at least 2"), (self.tau > 0, "tau must be positive"),
                  (self.pseudocount >= 0, "pseudocount must be non-negative"),
                  (self.num_states is None or self.num_states >= 1, "num_states must be >= 1"),
                  (self.restarts >= 1, "restarts must be >= 1"),
                  (0 <= self.em_smoothing < 1, "em_smoothing must lie in [0, 1)"),
                  (self.sweeps > self.burn_in >= 0, "need sweeps > burn_in >= 0"),
                  (self.sigma2 > 0, "sigma2 must be positive"),
                  (self.crf_iters >= 0, "crf_iters must be non-negative"),
                  (self.ticks_per_meter > 0, "ticks_per_meter must be positive")]
        for ok, msg in checks:
            if not ok:
                raise DataError(msg)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "Recipe":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise DataError(f"unknown recipe fields: {sorted(unknown)}")
        return cls(**obj)


def featurize(raws: Sequence[RawSequence], recipe: Recipe,
              calibration_runs: Optional[dict] = None) -> list[FeatureSequence]:
    """Features for each run. In NL mode the load range of participant p comes
    from ``calibration_runs[p]`` when given, else from p's runs in ``raws``."""
    if recipe.mode == "cop":
        calib = Calibration(ticks_per_meter=recipe.ticks_per_meter)
        return [build_features(r, "cop", calib) for r in raws]
    calibration_runs = calibration_runs or {}
    own: dict = {}
    for r in raws:
        own.setdefault(r.participant_id, []).append(r)
    calibs = {p: fit_load_calibration(calibration_runs.get(p) or runs, recipe.ticks_per_meter)
              for p, runs in own.items()}
    return [build_features(r, "nl", calibs[r.participant_id]) for r in raws]


@dataclass
class TrainOutput:
    model: Model
    trace_kind: Optional[str]  # "em", "gibbs", "crf" or None for closed-form fits
    trace: object


def fit_recipe(recipe: Recipe, train: Sequence[FeatureSequence], label_set: LabelSet,
               seed: int = 0) -> TrainOutput:
    """Fit one model on labeled (or, for hmm-em / hmm-gibbs, possibly unlabeled) features.

    Unsupervised models get their latent states named after the behaviour
    each co-occurs with most on the training labels, when labels exist.
    """
    if not train:
        raise DataError("no training sequences")
    if recipe.family == "crf":
        res = train_crf(train, label_set, recipe.sigma2, recipe.crf_iters,
                        overlap_cutoff=recipe.overlap_cutoff)
        return TrainOutput(res.model, "crf", res.trace)
    disc = fit_discretizer(train, recipe.D)
    binned = [apply_discretizer(disc, s) for s in train]
    if recipe.family == "hmm-ml":
        model = fit_supervised(binned, label_set, recipe.D, recipe.transitions, recipe.tau,
                               recipe.prior, recipe.pseudocount, disc)
        return TrainOutput(model, None, None)
    L = recipe.num_states or label_set.m
    if recipe.family == "hmm-em":
        res = fit_em(binned, L, recipe.D, recipe.restarts, recipe.em_iters, recipe.em_tol,
                     seed, disc)
        model, kind, trace = smooth_hmm(res.model, recipe.em_smoothing), "em", res.traces
    else:
        hyper = GibbsHyper(recipe.gibbs_alpha, recipe.gibbs_beta, recipe.gibbs_gamma)
        res = fit_gibbs(binned, L, recipe.D, hyper, recipe.sweeps, recipe.burn_in, seed, disc)
        model, kind, trace = res.model, "gibbs", res.trace
    if all(s.labels is not None for s in binned):
        latent = [filter_predict(model, s)[0] for s in binned]
        mapping = match_states(latent, [s.labels for s in binned], label_set, L)
        model = model.with_names([mapping[i] for i in range(L)])
    return TrainOutput(model, kind, trace)


def train_model(recipe: Recipe, train: Sequence[FeatureSequence], label_set: LabelSet,
                seed: int = 0) -> Model:
    return fit_recipe(recipe, train, label_set, seed).model


def smooth_hmm(model: HmmModel, eta: float) -> HmmModel:
    """Mix every distribution of the model with the uniform one at weight ``eta``."""
    if eta == 0:
        return model
    def mix(p):
        return (1.0 - eta) * p + eta / p.shape[-1]

    return HmmModel(mix(model.pi), mix(model.theta), mix(model.phi), model.state_names,
                    model.feature_names, model.discretizer)


def predict_labels(model: Model, seq: FeatureSequence) -> tuple:
    """Online MAP filtering for HMMs, Viterbi decoding for CRFs."""
    if isinstance(model, CrfModel):
        if model.bank.feature_names != seq.feature_names:
            raise DataError(f"model expects features {model.bank.feature_names}, "
                            f"got {seq.feature_names}")
        return viterbi_decode(model, seq)
    if model.feature_names is not None and tuple(model.feature_names) != seq.feature_names:
        raise DataError(f"model expects features {model.feature_names}, got {seq.feature_names}")
    return filter_predict(model, seq)[0]
