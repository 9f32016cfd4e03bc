"""Select the leapfrog kernel at import time.

The compiled extension is used when it was built; setting the environment
variable ``BLOWUPLAB_PURE=1`` forces the numpy implementation.
"""
import os

from . import _pykernel

python_leapfrog = _pykernel.leapfrog

try:
    from ._kernels import leapfrog as compiled_leapfrog
except ImportError:  # extension not built
    compiled_leapfrog = None

if compiled_leapfrog is not None and os.environ.get("BLOWUPLAB_PURE", "") in ("", "0"):
    leapfrog = compiled_leapfrog
    BACKEND = "compiled"
else:
    leapfrog = python_leapfrog
    BACKEND = "python"

STATUS_OK = _pykernel.STATUS_OK
STATUS_THRESHOLD = _pykernel.STATUS_THRESHOLD
STATUS_NAN = _pykernel.STATUS_NAN
STATUS_DOMAIN = _pykernel.STATUS_DOMAIN
