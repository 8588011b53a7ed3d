"""Near-linear-time approximation of the Held-Karp bound (2-edge-connected LP)."""

__version__ = "0.1.0"
