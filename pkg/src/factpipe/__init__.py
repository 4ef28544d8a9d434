"""Batch pipeline for building multilingual, multimodal fact-checking datasets."""

__version__ = "0.1.0"
