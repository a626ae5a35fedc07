"""Select the tree kernel at import: compiled extension, else pure Python.

Set SPARROWFOREST_PURE=1 to force the fallback (used by the benchmark and
the cross-backend tests). Both kernels implement the same contract; see
_kernel_py.py for the reference semantics.
"""

import os

if os.environ.get("SPARROWFOREST_PURE", "") not in ("", "0"):
    from . import _kernel_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernel_py as _impl

        BACKEND = "python"

GAIN_EPS = _impl.GAIN_EPS
GINI = _impl.GINI
ENTROPY = _impl.ENTROPY
grow_tree = _impl.grow_tree
predict_tree = _impl.predict_tree
best_split = _impl.best_split
