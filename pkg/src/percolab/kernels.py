"""Kernel backend selection.

The compiled extension is used when it imports; otherwise (or when
``PERCOLAB_PURE=1``) the pure-Python module with identical semantics is used.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("PERCOLAB_PURE") != "1":
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend

BACKEND = backend.BACKEND
explore_layers = backend.explore_layers
label_components = backend.label_components
dinic = backend.dinic
residual_reach = backend.residual_reach
greedy_grow = backend.greedy_grow
anneal = backend.anneal
