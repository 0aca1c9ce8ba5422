"""Acoustic token distribution similarity (ATDS) toolkit.

Induces acoustic pseudo-tokens from untranscribed speech embeddings
(k-means quantization -> characters -> dedup -> subword merges) and scores
corpus similarity between a target language and candidate donor languages.
"""

__version__ = "0.1.0"

from atds.errors import (
    AtdsError,
    FingerprintMismatchError,
    FormatError,
    InsufficientDataError,
    ValidationError,
)

__all__ = [
    "AtdsError",
    "FormatError",
    "ValidationError",
    "InsufficientDataError",
    "FingerprintMismatchError",
    "__version__",
]
