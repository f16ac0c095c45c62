"""Searchable warping and fusion networks for image-based virtual try-on,
with a synthetic data generator and one-shot evolutionary search."""

__version__ = "0.1.0"
