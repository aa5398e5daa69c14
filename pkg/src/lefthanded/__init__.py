"""Priority-ordered partial resampling for interval event families."""

__version__ = "0.1.0"
