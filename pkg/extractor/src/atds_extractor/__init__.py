"""Thin adapter turning audio corpora into .ate embedding files by
extracting hidden states from a pretrained wav2vec2-style encoder."""

__version__ = "0.1.0"

from atds_extractor.extract import ExtractionJob, extract_corpus

__all__ = ["ExtractionJob", "extract_corpus", "__version__"]
