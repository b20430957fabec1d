"""Size caps for enumeration and statevector paths.

The default cap bounds anything that materializes 2**N_free objects
(brute-force sums, statevectors, diagonals).  The environment variable
``Z2Q_MAX_FREE_LINKS`` overrides it; the dense-matrix and iterative
eigensolver caps are fixed API preconditions.
"""

from __future__ import annotations

import os

ENV_VAR = "Z2Q_MAX_FREE_LINKS"

DEFAULT_MAX_FREE_LINKS = 24
DENSE_HAMILTONIAN_CAP = 12
EIGENSOLVER_CAP = 20


class EnumerationCapError(RuntimeError):
    """Raised when a computation would enumerate more free links than allowed."""


def max_free_links(default: int = DEFAULT_MAX_FREE_LINKS) -> int:
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return default
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError(f"{ENV_VAR} must be positive, got {cap}")
    return cap


def check_free_links(n_free: int, context: str, cap: int | None = None) -> None:
    if cap is None:
        cap = max_free_links()
    if n_free > cap:
        raise EnumerationCapError(
            f"{context}: N_free={n_free} exceeds cap {cap}"
            f" (override with {ENV_VAR})"
        )
