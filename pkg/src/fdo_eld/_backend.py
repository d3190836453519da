"""Kernel backend selection.

Hot numeric kernels are written as plain Python functions over NumPy arrays
and compiled with numba's ``@njit`` when available. Setting the environment
variable ``FDO_ELD_BACKEND=numpy`` (or ``numba``) forces a backend; the
default is numba when importable, numpy otherwise.

Both backends execute the identical source with the identical floating-point
operation order, so results are bit-for-bit equal; the numpy path simply runs
the uncompiled functions.
"""

import os

_VALID = ("numba", "numpy")


def _resolve() -> str:
    choice = os.environ.get("FDO_ELD_BACKEND", "").strip().lower()
    if choice and choice not in _VALID:
        raise ValueError(
            f"FDO_ELD_BACKEND must be one of {_VALID}, got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise ImportError(
                "FDO_ELD_BACKEND=numba requested but numba is not installed"
            ) from None
        return "numpy"
    return "numba"


BACKEND = _resolve()


def jit(func):
    """Compile ``func`` with numba under the numba backend, else return it."""
    if BACKEND == "numba":
        import numba

        return numba.njit(cache=True)(func)
    return func
