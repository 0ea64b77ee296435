"""Chain-level Adams operations on cubes of modules over Q[t1..tm]."""

__version__ = "0.1.0"
