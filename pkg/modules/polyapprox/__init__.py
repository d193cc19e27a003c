"""Minimax odd polynomial approximation of the sign function."""
