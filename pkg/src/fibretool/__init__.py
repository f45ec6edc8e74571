"""Generic fibrations around multiple fibers: surgery algebra, model maps,
fiber tracing, round-handle complexes and BLF diagrams."""

__version__ = "0.1.0"
