from importlib.metadata import version

from . import empirical, fraction, scenario

__version__ = version("caufrac")
del version

__all__ = ["__version__", "empirical", "fraction", "scenario"]
