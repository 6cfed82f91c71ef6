"""Embedlab - contrastive embedding pre-training and evaluation tools."""

__version__ = "0.1.0"
