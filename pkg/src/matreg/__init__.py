"""Numerical workbench for matrix-ordered operator spaces inside matrix algebras."""

__version__ = "0.1.0"
