"""Kernel backend selection.

The compiled extension (``_fast``, Cython) is preferred; the pure-numpy
module (``_pure``) is the fallback. Set ``RSMD_PURE_PYTHON=1`` to force
the fallback. ``BACKEND`` names the active implementation and is stamped
into every harness report.
"""

import os

from ._pure import (  # noqa: F401  (constants shared by both backends)
    EXTRA_NONE,
    PEN_ENTROPY,
    PEN_L1,
    PEN_POWER,
    PEN_ZERO,
    SET_BOX,
    SET_L1BALL,
    SET_L2BALL,
    SET_SIMPLEX,
)

if os.environ.get("RSMD_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = None
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = None

if _impl is not None:
    BACKEND = "cython"
    composite_prox_kernel = _impl.composite_prox_kernel
    rsmd_loop_euclid = _impl.rsmd_loop_euclid
    project_simplex = _impl.project_simplex
    project_l2_ball = _impl.project_l2_ball
    project_two_l2_balls = _impl.project_two_l2_balls
else:
    from ._pure import (  # noqa: F401
        composite_prox_kernel,
        project_l2_ball,
        project_simplex,
        project_two_l2_balls,
        rsmd_loop_euclid,
    )

    BACKEND = "python"
