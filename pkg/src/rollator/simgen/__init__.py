from .course import (
    CANONICAL_NOISE,
    CourseScript,
    default_course,
    load_emission_table,
    simulate_course,
    simulate_participants,
)
from .hmm_sampler import sample_hmm

__all__ = [
    "CANONICAL_NOISE", "CourseScript", "default_course", "load_emission_table",
    "sample_hmm", "simulate_course", "simulate_participants",
]
