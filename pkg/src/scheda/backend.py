"""Kernel backend selection.

The hot kernels exist twice: a Cython extension (``scheda._kernels``)
and a pure-numpy fallback (``scheda._kernels_py``). The extension is
used when importable; set ``SCHEDA_KERNELS=python`` or ``=cython`` to
force one. RNG and masking kernels are bit-identical across backends;
transcendental kernels agree to a few ulp.
"""

from __future__ import annotations

import os

from scheda import _kernels_py


def load_backend(name: str):
    """Return the kernel module for ``name`` ('python' or 'cython')."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from scheda import _kernels  # may raise ImportError

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    choice = os.environ.get("SCHEDA_KERNELS", "auto").lower()
    if choice == "auto":
        try:
            return load_backend("cython")
        except ImportError:
            return _kernels_py
    return load_backend(choice)


kernels = _select()


def backend_name() -> str:
    return kernels.BACKEND_NAME


def set_backend(name: str) -> None:
    """Switch the active kernel backend (used by benchmarks and tests)."""
    global kernels
    kernels = load_backend(name)
