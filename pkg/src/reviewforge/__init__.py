"""Toolkit for turning peer-review threads into rebuttal-supervised training data."""

__version__ = "0.1.0"
