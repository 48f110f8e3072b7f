"""Concrete syntax, AST and load-time checks."""
