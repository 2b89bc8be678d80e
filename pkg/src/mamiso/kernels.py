"""Kernel backend selection.

The compiled backend (mamiso._kernels_cy, built from Cython) is preferred
when importable; mamiso._kernels_np is the always-available numpy
fallback.  Set MAMISO_BACKEND=numpy or =cython to force one, or call
use() at runtime (mainly for tests and benchmarks).  Library code must
call kernels through module attributes (kernels.fp_value(...)) so that
use() takes effect.
"""

import importlib
import os

_FUNCTIONS = (
    "channel_gains",
    "fp_value",
    "fp_grad",
    "phase_weighted_grad",
    "fp_line_search",
    "zf_value",
    "zf_line_search",
)

_MODULES = {"numpy": "mamiso._kernels_np", "cython": "mamiso._kernels_cy"}
_active = None


def use(name: str) -> str:
    """Activate the named backend ("numpy" or "cython"); returns the name."""
    global _active
    if name not in _MODULES:
        raise ValueError(f"unknown kernel backend {name!r}")
    impl = importlib.import_module(_MODULES[name])
    for fn in _FUNCTIONS:
        globals()[fn] = getattr(impl, fn)
    _active = name
    return name


def backend() -> str:
    """Name of the currently active backend."""
    return _active


def available_backends():
    names = []
    for name, module in _MODULES.items():
        try:
            importlib.import_module(module)
            names.append(name)
        except ImportError:
            pass
    return names


_requested = os.environ.get("MAMISO_BACKEND")
if _requested:
    use(_requested)
else:
    try:
        use("cython")
    except ImportError:
        use("numpy")
