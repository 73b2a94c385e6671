"""Backend selection: compiled kernels when available, NumPy otherwise.

Set ``LCG_SIM_PURE_PYTHON=1`` to force the NumPy fallback regardless of
whether the extension was built.
"""

import os

if os.environ.get("LCG_SIM_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

COMPILED = bool(getattr(kernels, "COMPILED", False))

logsumexp_complex = kernels.logsumexp_complex
sumexp_complex = kernels.sumexp_complex
quad_forms = kernels.quad_forms
pair_expand_shared = kernels.pair_expand_shared
wigner_chunk = kernels.wigner_chunk
charfun_chunk = kernels.charfun_chunk
