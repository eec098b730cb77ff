"""Dependency parsing with a BiLSTM encoder and two pointer-attention scorers."""

__version__ = "0.1.0"
