"""Backend selection for the hot loops.

The compiled Cython core is used when its extension module built; setting
SSL_KERNEL_PURE=1 (before import) forces the numpy fallback.  Both backends
implement identical arithmetic, so results do not depend on the choice.
"""

import os

from . import _pure

try:
    from . import _core
except ImportError:
    _core = None

HAVE_COMPILED = _core is not None
FORCE_PURE = os.environ.get("SSL_KERNEL_PURE", "") == "1"

active = _pure if (FORCE_PURE or not HAVE_COMPILED) else _core

backend_name = active.NAME
smo_solve = active.smo_solve
convolve_rows = active.convolve_rows
warp_bilinear = active.warp_bilinear
