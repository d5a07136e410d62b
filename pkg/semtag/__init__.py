"""
semtag - Ensemble Cleaning and Semantic Tagging for OCR-Noisy Documents

Runs a roster of completion models over legacy document text, scores every
candidate for content preservation and tag well-formedness, and keeps the
best output per document together with a run ledger and per-model reports.
"""

__version__ = "0.1.0"
