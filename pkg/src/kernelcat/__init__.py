"""Exact finiteness checks for finitely generated matrix semigroups."""

__version__ = "0.1.0"
