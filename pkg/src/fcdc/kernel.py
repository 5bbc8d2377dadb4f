"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python
reference kernel is the fallback.  Set FCDC_PURE_PYTHON=1 to force the
fallback (useful for benchmarking and for debugging the compiled path,
since both produce bit-identical output).
"""

from __future__ import annotations

import os

if os.environ.get("FCDC_PURE_PYTHON", "").strip().lower() in ("1", "true", "yes"):
    from . import _fallback as backend
else:
    try:
        from . import _native as backend  # type: ignore[no-redef]
    except ImportError:
        from . import _fallback as backend  # type: ignore[no-redef]

BACKEND_NAME: str = backend.BACKEND

SHRINK_OFF = backend.SHRINK_OFF
SHRINK_FIXED = backend.SHRINK_FIXED
SHRINK_ANALYTIC = backend.SHRINK_ANALYTIC

VARIANT_OPEN_LOOP = backend.VARIANT_OPEN_LOOP
VARIANT_RANDOM_RATE = backend.VARIANT_RANDOM_RATE
VARIANT_COMPLEMENTARY = backend.VARIANT_COMPLEMENTARY
VARIANT_RECIPROCAL = backend.VARIANT_RECIPROCAL
