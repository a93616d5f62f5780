"""Pilot-wave dynamics of oscillator states, entropy functionals and
field-measurement models (bindings to the C++ core)."""

from ._core import *  # noqa: F401,F403
from ._core import __version__, Error, InvalidArgument  # noqa: F401
