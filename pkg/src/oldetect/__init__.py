"""Opinion-leader detection in (dynamic) social graphs."""

__version__ = "0.1.0"
