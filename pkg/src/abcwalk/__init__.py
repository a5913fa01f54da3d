"""Random walks on abelian-by-cyclic groups and dissipative toppling."""

__version__ = "0.1.0"
