"""Backend selection for the hot kernels.

Prefers the compiled Cython extension; falls back to the NumPy implementation
when the extension is absent or ``EQUILAB_BACKEND=python`` is set.  Both
backends implement identical semantics and are covered by the same tests;
``benchmarks/bench_kernels.py`` compares their throughput.
"""
import os

from . import _kernels_py

if os.environ.get("EQUILAB_BACKEND", "").lower() == "python":
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"

__all__ = ["kernels", "BACKEND", "_kernels_py"]
