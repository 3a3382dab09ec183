"""Backend selection for the hot numeric kernels.

The kernels in ``_kernels`` are compiled with numba's ``@njit`` by default.
Setting the environment variable ``KHESS_NUMBA=0`` (read once, at import
time) disables compilation and runs the identical code as plain Python on
NumPy scalars/arrays.  ``benchmarks/bench_kernels.py`` compares the two.
"""

import os


def _env_flag(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() not in ("0", "false", "no", "off")


USE_NUMBA = _env_flag("KHESS_NUMBA", True)

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if not USE_NUMBA:

    def njit(*args, **kwargs):
        """No-op stand-in for numba.njit: returns the function unchanged."""
        if args and callable(args[0]):
            return args[0]

        def deco(func):
            return func

        return deco


def backend_name() -> str:
    return "numba" if USE_NUMBA else "python"
