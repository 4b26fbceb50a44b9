"""Tensorized lightweight graph convolution for dynamic-graph edge weights."""

__version__ = "0.1.0"
