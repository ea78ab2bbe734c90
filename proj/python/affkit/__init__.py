"""Per-frame affect annotation parsing, challenge metrics, and a
deterministic multi-task training harness."""

from ._affkit import *  # noqa: F401,F403
from ._affkit import __version__  # noqa: F401
