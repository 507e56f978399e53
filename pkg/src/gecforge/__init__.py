"""Synthetic error generation, spellchecking, post-processing and scoring for grammatical error correction."""

__version__ = "0.1.0"
