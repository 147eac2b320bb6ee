"""Select the compiled kernels if available, else the NumPy fallback.

Set ``CHSMC_PURE=1`` in the environment to force the fallback.
"""

import os

from . import _kernels_py as pure
from ._kernels_py import LOGARITHMIC, OBSTACLE, POLYNOMIAL, ZERO  # noqa: F401

compiled = None
if os.environ.get("CHSMC_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

backend = compiled if compiled is not None else pure
BACKEND_NAME = "cython" if compiled is not None else "numpy"

resolvent = backend.resolvent
solve_modes = backend.solve_modes
