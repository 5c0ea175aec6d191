"""Dual-learning misinformation detection over multimodal feature files."""

__version__ = "0.1.0"
