"""Kernel backend and thread-count selection from the environment.

``WHITTLECP_DISABLE_NUMBA=1`` forces the pure-numpy kernels even when numba
is importable. ``WHITTLECP_THREADS`` sets the default worker count.
"""
import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def _flag(name):
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = HAVE_NUMBA and not _flag("WHITTLECP_DISABLE_NUMBA")


def resolve_backend(backend=None):
    """Return ``"numba"`` or ``"numpy"``; ``None`` means the environment default."""
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def default_threads():
    raw = os.environ.get("WHITTLECP_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
