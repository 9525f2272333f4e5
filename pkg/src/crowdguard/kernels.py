"""Hot-loop kernels with backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
module is used. Both produce bit-identical results, so traces do not depend
on which backend is active.
"""

from __future__ import annotations

from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

_active: ModuleType = _ckernels if _ckernels is not None else _pykernels


def backend() -> str:
    return "cython" if _active is _ckernels and _ckernels is not None else "python"


def use_backend(name: str) -> None:
    global _active
    try:
        _active = BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def social_forces(*args, **kwargs):
    """Avoidance, cohesion and coherency accelerations for every pedestrian."""
    return _active.social_forces(*args, **kwargs)


def close_pairs(x, y, radius):
    """Index pairs (i < j) whose Euclidean distance is at most ``radius``."""
    return _active.close_pairs(x, y, radius)
