"""Grounding-data toolkit: corpora, dedup, instruction synthesis, rewards and evaluation."""

__version__ = "0.1.0"
