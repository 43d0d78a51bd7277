"""Hot walk kernels with a compiled core and a numpy fallback.

The compiled extension is preferred when importable; set LERWLAB_BACKEND to
"native" or "python" to force one side (the benchmark does).  Both backends
implement the same draw protocol and return bit-identical results.
"""

import os

from . import encoding  # noqa: F401  (re-exported for callers)

_forced = os.environ.get("LERWLAB_BACKEND")
if _forced == "python":
    from . import _pyfallback as _impl
elif _forced == "native":
    from . import _native as _impl  # type: ignore[attr-defined]
elif _forced:
    raise ImportError(f"unknown LERWLAB_BACKEND value {_forced!r}")
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pyfallback as _impl

BACKEND = _impl.BACKEND
CAUSE_HORIZON = _impl.CAUSE_HORIZON
CAUSE_KILLED = _impl.CAUSE_KILLED
lattice_path = _impl.lattice_path
lattice_pair_hits = _impl.lattice_pair_hits
lattice_pair_counts = _impl.lattice_pair_counts
glued_visit_counts = _impl.glued_visit_counts
