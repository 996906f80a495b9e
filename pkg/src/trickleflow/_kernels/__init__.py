"""Hot-kernel dispatch: compiled core when available, pure fallback otherwise.

The compiled lane (`_core`, Cython) and the pure lane (`_pure`) implement
identical arithmetic in identical evaluation order, so results are
bit-equal between them; `tests/test_kernel_parity.py` holds that line.
Set TRICKLEFLOW_PURE=1 to force the pure lane.
"""
import os

if os.environ.get("TRICKLEFLOW_PURE") == "1":
    from . import _pure as impl
    COMPILED = False
else:
    try:
        from . import _core as impl  # type: ignore[attr-defined]
        COMPILED = True
    except ImportError:
        from . import _pure as impl
        COMPILED = False

member_r0 = impl.member_r0
welford_update = impl.welford_update
persistence_pairs = impl.persistence_pairs
resample_field = impl.resample_field

__all__ = [
    "COMPILED",
    "member_r0",
    "welford_update",
    "persistence_pairs",
    "resample_field",
]
