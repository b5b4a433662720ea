"""Exposed faces of decomposable positive maps on 2 x n matrices."""

__version__ = "0.1.0"
