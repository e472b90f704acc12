"""Fast two-ion gates with RF micromotion."""

from ._fastgate import *  # noqa: F401,F403
from ._fastgate import FastgateError, __doc__  # noqa: F401

__version__ = "0.1.0"
