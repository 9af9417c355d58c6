"""Kernel selection: compiled ``_ckernel`` when importable, else ``_pykernel``.

``SNOOPSIM_BACKEND=python`` or ``=cython`` forces a choice.
"""

import os

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

KERNELS = {"python": _pykernel.Kernel}
if _ckernel is not None:
    KERNELS["cython"] = _ckernel.Kernel


def _default() -> str:
    forced = os.environ.get("SNOOPSIM_BACKEND", "").strip().lower()
    if forced:
        if forced not in KERNELS:
            raise ImportError(f"SNOOPSIM_BACKEND={forced!r} is not available; have {sorted(KERNELS)}")
        return forced
    return "cython" if "cython" in KERNELS else "python"


BACKEND = _default()


def resolve(backend=None) -> str:
    name = backend or BACKEND
    if name not in KERNELS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(KERNELS)}")
    return name


def scanner(backend=None):
    """The compiled record scanner for ``backend``, or None for the regex path."""
    if resolve(backend) == "cython":
        return _ckernel.scan_records
    return None
