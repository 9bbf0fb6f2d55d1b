"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback.  ``QUBITSIM_BACKEND=python`` forces the fallback.
"""

import os
from types import ModuleType

from qubitsim import _fallback

KERNEL_NAMES = (
    "model1_stay_count",
    "model2_counts",
    "bob_reduced_batch",
    "alice_reduced_batch",
    "bob_full_batch",
    "alice_full_batch",
)


def _load_compiled():
    try:
        from qubitsim import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()


def available_backends():
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def get_backend(name=None) -> ModuleType:
    """Return the kernel module for ``name`` ("cython" or "python").

    ``None`` picks the default: compiled when present, unless the
    ``QUBITSIM_BACKEND`` environment variable says otherwise.
    """
    if name is None:
        name = os.environ.get("QUBITSIM_BACKEND", "cython" if _compiled is not None else "python")
    if name == "python":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; reinstall with Cython available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


kernels = get_backend()
BACKEND = "python" if kernels is _fallback else "cython"
