"""Optional numba acceleration.

``njit`` falls back to a no-op decorator when numba is unavailable, so every
kernel in this package also runs as plain Python (much slower, same results).
"""

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap
