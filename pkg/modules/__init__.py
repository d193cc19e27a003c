"""Numerical modules of the qgsp toolkit."""
