"""Forgetting of the initial distribution in hidden Markov filters.

Every function takes a YAML run configuration (the same grammar as the
``hmmstab`` command line tool, see configs/README.md) and optional
``key.path=value`` overrides.
"""

from ._hmmstab import (
    ComplexityGuard,
    CoverageError,
    DegenerateFilter,
    DomainError,
    H2Unverified,
    InvalidInput,
    NotCertifiable,
    PreconditionFailed,
    bound,
    certify_ld_set,
    experiment,
    filter_tv,
    fit_rate,
    simulate,
    upsilon,
    verify,
)

__all__ = [
    "ComplexityGuard",
    "CoverageError",
    "DegenerateFilter",
    "DomainError",
    "H2Unverified",
    "InvalidInput",
    "NotCertifiable",
    "PreconditionFailed",
    "bound",
    "certify_ld_set",
    "experiment",
    "filter_tv",
    "fit_rate",
    "simulate",
    "upsilon",
    "verify",
]
