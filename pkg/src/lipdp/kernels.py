"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported.  Set ``LIPDP_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

MWIS, VC, DS, CLAUSES = _fallback.MWIS, _fallback.VC, _fallback.DS, _fallback.CLAUSES

_compiled = None
if os.environ.get("LIPDP_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _fallback
BACKEND = "compiled" if _compiled is not None else "python"

keyed_uniforms = _impl.keyed_uniforms
gibbs_pick = _impl.gibbs_pick
brute_force = _impl.brute_force


def compiled_available() -> bool:
    return _compiled is not None


def backend(name: str):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(name)
