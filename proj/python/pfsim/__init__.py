"""Penrose-Fife phase-field simulator with dynamic boundary conditions."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
