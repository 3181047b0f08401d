"""Multitaper spectral density estimation on irregular lattice subsets."""

from ._pmt import *  # noqa: F401,F403
from ._pmt import __doc__  # noqa: F401
