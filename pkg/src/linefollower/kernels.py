"""Backend selection for the per-step kernels.

The compiled extension is used when it imports; set ``LINEFOLLOWER_PURE_PYTHON=1``
to force the pure-Python fallback.
"""
import os

BACKEND = "python"

if os.environ.get("LINEFOLLOWER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._ckernels import SimCore, normalize_angle, project, sense, step_pose  # noqa: F401

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

if BACKEND == "python":
    from ._pykernels import SimCore, normalize_angle, project, sense, step_pose  # noqa: F401

__all__ = ["BACKEND", "SimCore", "normalize_angle", "project", "sense", "step_pose"]
