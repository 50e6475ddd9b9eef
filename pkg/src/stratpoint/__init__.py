"""Stationary-point and MFCQ-violation sets of parametric optimization problems."""
