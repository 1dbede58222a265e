"""Kernel backend selection.

The surface-marching inner loop exists twice: a Cython extension
(``meshwire._march``) and a pure-Python mirror (``meshwire._march_py``).
The compiled build is preferred when importable; set
``MESHWIRE_BACKEND=python`` or ``=compiled`` to force one (benchmarks and
parity tests do).  Both expose the same ``march``/``walk`` signatures and
agree numerically.
"""

import os

from . import _march_py

try:
    from . import _march as _compiled
except ImportError:  # extension not built; the fallback is fully functional
    _compiled = None

_BACKENDS = {"python": _march_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        ) from None


_forced = os.environ.get("MESHWIRE_BACKEND", "").strip().lower()
if _forced:
    _active = get_backend(_forced)
    ACTIVE_BACKEND = _forced
elif _compiled is not None:
    _active = _compiled
    ACTIVE_BACKEND = "compiled"
else:
    _active = _march_py
    ACTIVE_BACKEND = "python"

march = _active.march
walk = _active.walk
