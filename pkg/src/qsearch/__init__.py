"""State-vector laboratory for Grover search and quantum-walk spatial search."""

__version__ = "0.1.0"
