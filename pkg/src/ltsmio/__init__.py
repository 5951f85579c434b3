"""Least trimmed squares via mixed-integer optimization."""
