"""Process-level defaults."""

import os

_TOL_ENV = "KYP_DEFAULT_TOL"


def default_tol() -> float:
    """Default numeric tolerance; overridable via the KYP_DEFAULT_TOL env var."""
    return float(os.environ.get(_TOL_ENV, "1e-8"))


def resolve_tol(tol) -> float:
    return default_tol() if tol is None else float(tol)
