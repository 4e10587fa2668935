"""Compiler from a small contract language to EVM bytecode."""

__version__ = "0.1.0"
