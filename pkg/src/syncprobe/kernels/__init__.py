"""Training-kernel backend selection.

The compiled extension is preferred when importable; the numpy reference
implementation is the fallback.  Set SYNCPROBE_PURE_PYTHON=1 to force the
fallback (used by the benchmark and the equivalence tests).
"""

import os

from . import reference

HEAD_REGRESSION = reference.HEAD_REGRESSION
HEAD_CLASSIFICATION = reference.HEAD_CLASSIFICATION

if os.environ.get("SYNCPROBE_PURE_PYTHON", "") not in ("", "0"):
    _impl = reference
    HAVE_NATIVE = False
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]

        HAVE_NATIVE = True
    except ImportError:
        _impl = reference
        HAVE_NATIVE = False

BACKEND = "native" if HAVE_NATIVE else "reference"

train_epoch = _impl.train_epoch
loss_and_grads = _impl.loss_and_grads


def get_backend(name: str):
    """Explicit backend module lookup ("native" or "reference")."""
    if name == "reference":
        return reference
    if name == "native":
        if not HAVE_NATIVE:
            raise ImportError("compiled kernels are not available")
        from . import _native

        return _native
    raise ValueError(f"unknown backend {name!r}")
