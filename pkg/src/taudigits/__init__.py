"""Distribution-guided inductive synthesis with Hamming-threshold pruning."""

__version__ = "0.1.0"
