"""Autoregressive 3D human motion prediction from per-frame video features."""

__version__ = "0.1.0"
