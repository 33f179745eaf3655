"""Maximal-degree variational principles and volume-preserving dynamics."""
