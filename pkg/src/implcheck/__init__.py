"""Implementability checking for asynchronous multiparty protocols."""

__version__ = "0.1.0"
