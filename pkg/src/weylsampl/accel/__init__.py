"""Hot kernels with a compiled (numba) path and a plain-numpy fallback.

The backend is chosen once at import time. Set ``WEYLSAMPL_NO_NUMBA=1`` to
force the numpy path; it is also used when numba is not importable. Both
backends implement the same functions with identical results.
"""

import os

from . import _numpy_kernels


def _truthy(value):
    return value.strip().lower() not in ("", "0", "false", "no", "off")


def _load_numba():
    try:
        from . import _numba_kernels
    except ImportError:
        return None
    return _numba_kernels


NUMBA_DISABLED = _truthy(os.environ.get("WEYLSAMPL_NO_NUMBA", ""))
_numba_backend = None if NUMBA_DISABLED else _load_numba()
HAVE_NUMBA = _numba_backend is not None
BACKEND = "numba" if HAVE_NUMBA else "numpy"

_impl = _numba_backend if HAVE_NUMBA else _numpy_kernels

greedy_pack = _impl.greedy_pack
fps_pack = _impl.fps_pack
nearest_and_count = _impl.nearest_and_count
min_separation = _impl.min_separation
real_sph_harm = _impl.real_sph_harm


def backends():
    """Mapping of available backend names to kernel modules."""
    out = {"numpy": _numpy_kernels}
    mod = _numba_backend or _load_numba()
    if mod is not None:
        out["numba"] = mod
    return out


def set_threads(n):
    """Cap numba's thread pool; no-op on the numpy backend."""
    if not HAVE_NUMBA or n is None:
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
