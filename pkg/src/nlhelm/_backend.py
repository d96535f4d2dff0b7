"""Backend selection for the hot kernels.

The package ships two implementations of every hot kernel: a numba
``@njit(parallel=True)`` version and a pure-numpy version built on chunked
BLAS contractions.  Selection happens once at import via the environment
variable ``NLHELM_BACKEND``:

* ``auto`` (default): numba if importable, numpy otherwise
* ``numba``: require numba, raise if missing
* ``numpy``: force the pure-numpy path even if numba is installed
"""

import os

_env = os.environ.get("NLHELM_BACKEND", "auto").strip().lower()
if _env not in ("auto", "numba", "numpy"):
    raise ValueError(f"NLHELM_BACKEND must be auto|numba|numpy, got {_env!r}")

_numba = None
if _env in ("auto", "numba"):
    try:
        import numba as _numba  # noqa: F401
    except ImportError:
        if _env == "numba":
            raise
        _numba = None

USE_NUMBA = _numba is not None


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def set_num_threads(n: int) -> None:
    """Limit numba's thread pool (no-op on the numpy backend)."""
    if USE_NUMBA:
        _numba.set_num_threads(max(1, n))
