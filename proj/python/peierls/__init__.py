from ._peierls import (
    GeneratingFunction,
    Params,
    PeierlsError,
    generating_function,
    irrational,
    minimize_periodic,
    orbit,
    profile,
    rational,
    run_study,
    zero_plus,
)

__all__ = [
    "GeneratingFunction",
    "Params",
    "PeierlsError",
    "generating_function",
    "irrational",
    "minimize_periodic",
    "orbit",
    "profile",
    "rational",
    "run_study",
    "zero_plus",
]
