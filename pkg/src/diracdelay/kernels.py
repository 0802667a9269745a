"""Backend selection for the marching kernel.

The compiled extension is used when importable; set
``DIRACDELAY_BACKEND=python`` to force the numpy fallback.
"""

import os

from . import _march_py

BACKEND = "python"
march = _march_py.march

if os.environ.get("DIRACDELAY_BACKEND", "").lower() != "python":
    try:
        from . import _march  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        pass
    else:
        march = _march.march
        BACKEND = "cython"


def get_march(backend: str):
    """Return the kernel for ``backend`` ('python' or 'cython')."""
    if backend == "python":
        return _march_py.march
    if backend == "cython":
        from . import _march  # type: ignore[attr-defined]

        return _march.march
    raise ValueError(f"unknown backend {backend!r}")
