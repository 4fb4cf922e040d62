"""Primes in cosine sectors: segmented sieving, phase-shell classification,
compensated reciprocal sums, and closed-form lower-bound checks."""

from .aggregate import (DecadeSnapshot, NeumaierSum, SectorSums, ShellStats,
                        StreamAccumulator, accumulate, encode_token,
                        validate_token)
from .bounds import (BoundConstants, EnvelopeReport, EnvelopeScan,
                     comparison_series_partial_sum, constants_of,
                     count_bound_envelope_form, find_N, find_envelope_M,
                     first_index_exceeding, recip_bound_two_fraction,
                     resolve_constants, shell_count_lower_bound,
                     shell_recip_lower_bound, validity_start_index)
from .errors import (BoundViolation, ConfigurationError, PreconditionError,
                     SectorPrimesError, TokenError)
from .lemma import (RaySpec, TripleCertificate, check_triple, is_prime,
                    rational_exponent_guess, scan_ray)
from .phase import (PhaseResult, SectorParams, ShellInterval, classify,
                    max_shell_ordinal, phase_of, shell_index_of,
                    shell_interval, shell_ordinal_interval)
from .report import RunReport, build_report, shell_verdicts
from .sieve import (DEFAULT_SEGMENT_SIZE, Segment, SieveConfig, prime_count,
                    sieve_stream)

__version__ = "0.1.0"

__all__ = [
    "BoundConstants", "BoundViolation", "ConfigurationError", "DecadeSnapshot",
    "DEFAULT_SEGMENT_SIZE", "EnvelopeReport", "EnvelopeScan", "NeumaierSum",
    "PhaseResult", "PreconditionError", "RaySpec", "RunReport", "SectorParams",
    "SectorPrimesError", "SectorSums", "Segment", "ShellInterval", "ShellStats",
    "SieveConfig", "StreamAccumulator", "TokenError", "TripleCertificate",
    "accumulate", "build_report", "check_triple", "classify",
    "comparison_series_partial_sum", "constants_of", "count_bound_envelope_form",
    "encode_token", "find_N", "find_envelope_M", "first_index_exceeding",
    "is_prime", "max_shell_ordinal", "phase_of", "prime_count",
    "rational_exponent_guess", "recip_bound_two_fraction", "resolve_constants",
    "scan_ray", "shell_count_lower_bound", "shell_index_of", "shell_interval",
    "shell_ordinal_interval", "shell_recip_lower_bound", "shell_verdicts",
    "sieve_stream", "validate_token", "validity_start_index",
]
