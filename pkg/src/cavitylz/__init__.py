"""Light transfer between two optical cavities through a moving common mirror."""

__version__ = "0.1.0"
