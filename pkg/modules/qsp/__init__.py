"""Quantum signal processing: phase factors and circuit assembly."""
