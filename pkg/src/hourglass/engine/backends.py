"""Kernel backend selection.

Two interchangeable kernels exist: the compiled Cython extension
(``compiled``) and the pure-Python fallback (``python``).  They produce
bit-identical trajectories; only speed differs.  The default prefers the
compiled one when the extension imported successfully, and can be forced
with the ``HOURGLASS_BACKEND`` environment variable or the ``backend=``
argument accepted by ``run``.
"""

from __future__ import annotations

import os

from ..errors import ConfigError
from . import _pykernel

_REGISTRY = {"python": _pykernel}

try:  # the extension is optional; see setup.py
    from . import _ckernel

    _REGISTRY["compiled"] = _ckernel
except ImportError:
    _ckernel = None


def available() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def default_name() -> str:
    forced = os.environ.get("HOURGLASS_BACKEND")
    if forced:
        if forced not in _REGISTRY:
            raise ConfigError(
                f"HOURGLASS_BACKEND={forced!r} is not available; choices: {available()}"
            )
        return forced
    return "compiled" if "compiled" in _REGISTRY else "python"


def get(name: str | None = None):
    if name is None:
        name = default_name()
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown backend {name!r}; choices: {available()}") from None
