"""Poisson genericity statistics of base-b digit streams.

Counting of overlapping word occurrences, Z-profiles against the Poisson
law, the reduction-map constructions, and exact measures of b-adic
interval sets.
"""

__version__ = "0.1.0"

from .constructions import ZSequence, build_schedule, f_bold, f_d2
from .digits import (
    DigitBuffer,
    from_text,
    read_digit_file,
    stream_champernowne,
    stream_constant,
    stream_debruijn,
    stream_extend_debruijn,
    stream_random,
    write_digit_file,
)
from .errors import DigitFormatError, NoAdmissibleDigit, PreconditionError, ResourceCapError
from .measure import AlgorithmConfig, BadSpec, IntervalSet, bad_k, bad_set, e_set, run_algorithm
from .stats import (
    count_distribution,
    discrepancy,
    distinct_fraction,
    normality_deviation,
    tv_distance,
    tv_poisson,
    z_deviation,
    z_profile,
)
from .words import WindowSpec, count_occurrences, count_words, fresh_word_count

__all__ = [
    "AlgorithmConfig",
    "BadSpec",
    "DigitBuffer",
    "DigitFormatError",
    "IntervalSet",
    "NoAdmissibleDigit",
    "PreconditionError",
    "ResourceCapError",
    "WindowSpec",
    "ZSequence",
    "bad_k",
    "bad_set",
    "build_schedule",
    "count_distribution",
    "count_occurrences",
    "count_words",
    "discrepancy",
    "distinct_fraction",
    "e_set",
    "f_bold",
    "f_d2",
    "fresh_word_count",
    "from_text",
    "normality_deviation",
    "read_digit_file",
    "run_algorithm",
    "stream_champernowne",
    "stream_constant",
    "stream_debruijn",
    "stream_extend_debruijn",
    "stream_random",
    "tv_distance",
    "tv_poisson",
    "write_digit_file",
    "z_deviation",
    "z_profile",
]
