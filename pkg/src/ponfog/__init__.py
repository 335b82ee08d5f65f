"""Design and simulation toolkit for PON-based fog computing interconnects."""

__version__ = "0.1.0"
