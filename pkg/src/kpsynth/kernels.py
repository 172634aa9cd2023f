"""Backend selection for the hot loops.

The compiled extension is used when importable; set ``KPSYNTH_PURE=1`` to
force the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
chain_product = _pykernels.chain_product

if os.environ.get("KPSYNTH_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        chain_product = _kernels.chain_product


def backends():
    """Available implementations keyed by name."""
    out = {"python": _pykernels.chain_product}
    try:
        from . import _kernels
    except ImportError:
        return out
    out["cython"] = _kernels.chain_product
    return out
