"""Privacy-preserving network embedding through greedy link perturbation."""

__version__ = "0.1.0"
