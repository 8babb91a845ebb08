"""Rigorous Hausdorff dimension bounds for period-doubling attractors of degree 2, 3 and 4."""

__version__ = "0.1.0"

from .interval import Interval, IntervalArray  # noqa: E402
from .ball import FunctionBall, load_ball, save_ball  # noqa: E402

__all__ = ["Interval", "IntervalArray", "FunctionBall", "load_ball", "save_ball", "__version__"]
