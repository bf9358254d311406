"""Asymptotic-preserving solver for light/heavy kinetic mixtures."""
