"""Select the compiled kernel module, falling back to pure numpy.

Set ``PREDSCORE_BACKEND=python`` to force the fallback.
"""

import os

from . import _pure

kernels = _pure
if os.environ.get("PREDSCORE_BACKEND", "").lower() not in ("python", "pure"):
    try:
        from . import _core as kernels
    except ImportError:
        kernels = _pure

NAME = kernels.NAME
