"""Conditional score-based diffusion for field surrogates, with fluid diagnostics."""

from scoreflow._core import *  # noqa: F401,F403
from scoreflow._core import __version__  # noqa: F401
