"""Backend selection for the statevector kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Set ``QTRL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("QTRL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

apply_u3 = _impl.apply_u3
apply_cu3 = _impl.apply_cu3
run_ansatz = _impl.run_ansatz
ansatz_gradient = _impl.ansatz_gradient

__all__ = ["BACKEND", "apply_u3", "apply_cu3", "run_ansatz", "ansatz_gradient"]
