"""Benchmark Hamiltonians with exact ground truth and Hamiltonian file loading."""
