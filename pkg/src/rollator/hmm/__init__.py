from .em import EMResult, em_step, fit_em
from .gibbs import (
    GibbsHyper,
    GibbsResult,
    GibbsState,
    fit_gibbs,
    gibbs_conditional,
    gibbs_log_marginal,
    gibbs_sweep,
    init_gibbs,
    point_estimate,
    state_from_assignments,
)
from .inference import filter_marginals, filter_predict, log_likelihood, posteriors
from .matching import match_states, relabel
from .model import HmmModel
from .supervised import fit_supervised, persistence_transitions

__all__ = [
    "EMResult", "GibbsHyper", "GibbsResult", "GibbsState", "HmmModel", "em_step",
    "filter_marginals", "filter_predict", "fit_em", "fit_gibbs", "fit_supervised",
    "gibbs_conditional", "gibbs_log_marginal", "gibbs_sweep", "init_gibbs", "log_likelihood",
    "match_states", "persistence_transitions", "point_estimate", "posteriors", "relabel",
    "state_from_assignments",
]
