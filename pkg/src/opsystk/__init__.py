"""Operator systems, their duals and quotients, and tensor-product cone oracles."""

__version__ = "0.1.0"
