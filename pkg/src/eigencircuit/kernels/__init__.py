"""Kernel engine selection.

The compiled extension is preferred when it imports; otherwise the pure
numpy backend is used.  Set EIGENCIRCUIT_KERNEL=numpy (or =cython) to force
an engine, e.g. for the benchmark or for debugging a suspected kernel
difference.  `ENGINE` names the active implementation and is recorded in
run manifests, since the two engines differ in floating-point rounding.
"""

from __future__ import annotations

import importlib
import os

_requested = os.environ.get("EIGENCIRCUIT_KERNEL", "auto").strip().lower()

if _requested in ("", "auto"):
    try:
        from . import _fdcore as _impl  # type: ignore[attr-defined]

        ENGINE = "cython"
    except ImportError:
        from . import numpy_backend as _impl

        ENGINE = "numpy"
elif _requested in ("numpy", "python"):
    from . import numpy_backend as _impl

    ENGINE = "numpy"
elif _requested == "cython":
    from . import _fdcore as _impl  # type: ignore[attr-defined,no-redef]

    ENGINE = "cython"
else:
    raise ImportError(
        f"EIGENCIRCUIT_KERNEL={_requested!r} not understood "
        "(expected auto, cython or numpy)"
    )

dense_chunk = _impl.dense_chunk
dense_chunk_findhit = _impl.dense_chunk_findhit
struct_chunk = _impl.struct_chunk
struct_chunk_findhit = _impl.struct_chunk_findhit


def get_backend(name: str):
    """Return a specific backend module ('cython' or 'numpy').

    Raises ImportError when the compiled backend was never built.
    """
    if name == "numpy":
        return importlib.import_module("eigencircuit.kernels.numpy_backend")
    if name == "cython":
        return importlib.import_module("eigencircuit.kernels._fdcore")
    raise ValueError(f"unknown backend {name!r}")
