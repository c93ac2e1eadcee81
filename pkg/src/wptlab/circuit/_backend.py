"""Transient-kernel backend selection.

The compiled Cython extension is preferred; the pure-Python twin is used when
it is missing (source checkout without a build) or when the environment
variable ``WPTLAB_FORCE_PY_KERNEL`` is set to a non-empty value. Both
backends implement the identical floating-point recurrence, so results do
not depend on the selection.
"""

import os

if os.environ.get("WPTLAB_FORCE_PY_KERNEL"):
    from . import _kernel_py as _impl
else:
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernel_py as _impl

run_segment = _impl.run_segment
KERNEL_BACKEND = _impl.backend_name()


def get_backend(name):
    """Return a specific backend module by name ('cython' or 'python')."""
    if name == "python":
        from . import _kernel_py

        return _kernel_py
    if name == "cython":
        from . import _kernel  # type: ignore[attr-defined]

        return _kernel
    raise ValueError(f"unknown backend {name!r}")
