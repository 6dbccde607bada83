"""Backend selection for the ADMM iteration kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is used. Setting ``DYNUNMIX_BACKEND=python`` forces the fallback.
"""

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled


def get_backend(name=None):
    """Kernel module for ``name`` (``"compiled"``, ``"python"`` or ``None`` for the default)."""
    if name is None:
        name = os.environ.get("DYNUNMIX_BACKEND", "compiled" if _compiled is not None else "python")
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; "
                         f"available: {sorted(BACKENDS)}") from None


_default = get_backend()
BACKEND = "compiled" if _default is _compiled and _compiled is not None else "python"
endmember_iteration = _default.endmember_iteration
abundance_iteration = _default.abundance_iteration
