"""Kernel selection: the compiled extension when importable, else pure Python."""
import importlib
import os

__all__ = ["BACKEND", "anneal_one", "exhaustive_min", "load"]


def load(name: str):
    """Kernel module by name, ``"cython"`` or ``"python"``."""
    if name == "cython":
        return importlib.import_module("mdising._kernels")
    if name == "python":
        return importlib.import_module("mdising._fallback")
    raise ValueError(f"unknown backend {name!r}")


if os.environ.get("MDISING_PURE_PYTHON"):
    _mod, BACKEND = load("python"), "python"
else:
    try:
        _mod, BACKEND = load("cython"), "cython"
    except ImportError:
        _mod, BACKEND = load("python"), "python"

anneal_one = _mod.anneal_one
exhaustive_min = _mod.exhaustive_min
