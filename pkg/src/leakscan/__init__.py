"""Static memory-leak analyzer for Mini-C."""

__version__ = "0.1.0"
