"""Flood kernel selection: compiled extension if built, pure Python otherwise."""

try:
    from ._flood import flood

    IMPLEMENTATION = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    from .flood_py import flood

    IMPLEMENTATION = "python"

__all__ = ["flood", "IMPLEMENTATION"]
