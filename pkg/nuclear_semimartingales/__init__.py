"""
Stochastic calculus for semimartingales with values in the dual of the Hermite model
of the Schwartz space.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("nuclear_semimartingales")
except PackageNotFoundError:
    __version__ = "0.0.0"
