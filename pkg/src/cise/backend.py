"""Backend selection for the solver's hot inner step.

The compiled extension ``cise._accel`` is preferred when importable; the
pure numpy module ``cise._pure`` is the fallback. Set ``CISE_BACKEND`` to
``compiled`` or ``pure`` to force a choice (``auto`` is the default).
"""

import os

_choice = os.environ.get("CISE_BACKEND", "auto").lower()

if _choice == "pure":
    from . import _pure as _impl
elif _choice == "compiled":
    from . import _accel as _impl  # ImportError here means the ext is not built
elif _choice == "auto":
    try:
        from . import _accel as _impl
    except ImportError:
        from . import _pure as _impl
else:
    raise RuntimeError(f"CISE_BACKEND must be auto, compiled or pure, got {_choice!r}")

penalized_step = _impl.penalized_step
BACKEND = _impl.NAME


def get_backend(name):
    """Return a named step implementation (for benchmarks and parity tests)."""
    if name == "pure":
        from . import _pure
        return _pure
    if name == "compiled":
        from . import _accel
        return _accel
    raise ValueError(f"unknown backend {name!r}")
