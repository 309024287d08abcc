"""Finite-scale multipliers of twisted groupoid actions."""

try:
    from ._fslab import *  # noqa: F401,F403
    from ._fslab import __doc__  # noqa: F401
except ImportError:
    # in-tree builds leave the extension next to the build directory
    from _fslab import *  # noqa: F401,F403
    from _fslab import __doc__  # noqa: F401

__version__ = "0.1.0"
