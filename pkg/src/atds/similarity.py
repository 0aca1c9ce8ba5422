"""Token frequency distributions and corpus similarity scores.

ATDS is the cosine similarity between the acoustic-token frequency vectors
of two corpora, both tokenized with the target-language-trained models.
Baselines: cosine of corpus-level mean embeddings, and cosine of external
typological feature vectors.
"""

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from atds.errors import FingerprintMismatchError, FormatError, ValidationError
from atds.ioutil import atomic_write_text
from atds.tokenizer import UNK_ID, SubwordVocab, TokenSequence, vocab_to_canonical_json

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def vocab_fingerprint(vocab: SubwordVocab) -> int:
    return fnv1a_64(vocab_to_canonical_json(vocab))


class Metric(enum.Enum):
    ATDS = "ATDS"
    MEAN_EMBEDDING = "MeanEmbedding"
    FEATURE_VECTOR = "FeatureVector"


@dataclass(frozen=True)
class TokenDistribution:
    language: str
    vocab_fingerprint: int
    counts: tuple[int, ...]  # indexed by token id
    total: int = field(init=False)

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValidationError("counts must be non-negative")
        object.__setattr__(self, "total", sum(self.counts))


@dataclass(frozen=True)
class SimilarityScore:
    target: str
    donor: str
    metric: Metric
    value: float
    flags: tuple[str, ...] = ()


def token_distribution(
    sequences: list[TokenSequence], vocab: SubwordVocab, language: str
) -> TokenDistribution:
    counts = [0] * vocab.vocab_size
    for seq in sequences:
        for tid in seq.ids:
            if not 0 <= tid < vocab.vocab_size:
                raise ValidationError(f"token id {tid} out of range")
            counts[tid] += 1
    dist = TokenDistribution(language, vocab_fingerprint(vocab), tuple(counts))
    if dist.total == 0:
        raise ValidationError(f"corpus for {language!r} produced no tokens")
    return dist


def cosine(u, v) -> float:
    """dot(u, v) / (|u| |v|) in double precision, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValidationError(f"vector shapes differ: {u.shape} vs {v.shape}")
    uu = float(np.dot(u, u))
    vv = float(np.dot(v, v))
    if uu == 0.0 or vv == 0.0:
        raise ValidationError("cosine of a zero vector is undefined")
    # sqrt(uu * vv) keeps cosine(v, v) exactly 1.0 (sqrt(x*x) == x in IEEE);
    # the product can under- or overflow for extreme norms, so fall back.
    prod = uu * vv
    denom = math.sqrt(prod) if 0.0 < prod < math.inf else math.sqrt(uu) * math.sqrt(vv)
    return min(1.0, max(-1.0, float(np.dot(u, v)) / denom))


def atds(
    target_dist: TokenDistribution, donor_dist: TokenDistribution
) -> SimilarityScore:
    """Cosine of the two token count vectors. UNK (id 0) is excluded:
    its mass reflects out-of-alphabet pipeline artifacts."""
    if target_dist.vocab_fingerprint != donor_dist.vocab_fingerprint:
        raise FingerprintMismatchError(
            "distributions were tokenized with different vocabularies "
            f"({target_dist.vocab_fingerprint:#x} vs "
            f"{donor_dist.vocab_fingerprint:#x})"
        )
    if target_dist.total == 0 or donor_dist.total == 0:
        raise ValidationError("cannot compare an empty distribution")
    u = np.asarray(target_dist.counts[UNK_ID + 1 :], dtype=np.float64)
    v = np.asarray(donor_dist.counts[UNK_ID + 1 :], dtype=np.float64)
    if not u.any() or not v.any():
        raise ValidationError("distribution has no non-UNK tokens")
    value = float(np.dot(u, v))
    if value != 0.0:
        value = cosine(u, v)
    return SimilarityScore(
        target=target_dist.language,
        donor=donor_dist.language,
        metric=Metric.ATDS,
        value=value,
    )


def mean_embedding_similarity(
    utt_means_a: list[np.ndarray],
    utt_means_b: list[np.ndarray],
    target: str = "",
    donor: str = "",
) -> SimilarityScore:
    """Cosine of corpus-level means of utterance-level embeddings."""
    if not utt_means_a or not utt_means_b:
        raise ValidationError("utterance mean list is empty")
    mean_a = np.mean(np.asarray(utt_means_a, dtype=np.float64), axis=0)
    mean_b = np.mean(np.asarray(utt_means_b, dtype=np.float64), axis=0)
    return SimilarityScore(target, donor, Metric.MEAN_EMBEDDING, cosine(mean_a, mean_b))


def feature_vector_similarity(
    vec_a, vec_b, target: str = "", donor: str = ""
) -> SimilarityScore:
    """Cosine of typological feature vectors. Bitwise-identical inputs are
    flagged suspect-imputation (identical imputed database rows)."""
    a = np.asarray(vec_a, dtype=np.float64)
    b = np.asarray(vec_b, dtype=np.float64)
    flags = ("suspect-imputation",) if a.shape == b.shape and np.array_equal(a, b) else ()
    return SimilarityScore(target, donor, Metric.FEATURE_VECTOR, cosine(a, b), flags)


def save_distribution(dist: TokenDistribution, path: str | Path) -> None:
    doc = {
        "language": dist.language,
        "vocab_fingerprint": f"{dist.vocab_fingerprint:016x}",
        "total": dist.total,
        "counts": {str(i): c for i, c in enumerate(dist.counts) if c > 0},
        "size": len(dist.counts),
        "relative": {
            str(i): c / dist.total for i, c in enumerate(dist.counts) if c > 0
        },
    }
    atomic_write_text(path, json.dumps(doc, sort_keys=True, indent=1) + "\n")


def load_distribution(path: str | Path) -> TokenDistribution:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        counts = [0] * doc["size"]
        for key, c in doc["counts"].items():
            counts[int(key)] = c
        dist = TokenDistribution(
            language=doc["language"],
            vocab_fingerprint=int(doc["vocab_fingerprint"], 16),
            counts=tuple(counts),
        )
    except (OSError, json.JSONDecodeError, KeyError, ValueError, IndexError) as exc:
        raise FormatError(f"cannot load distribution {path}: {exc}")
    if dist.total != doc.get("total"):
        raise FormatError(f"{path}: stored total disagrees with counts")
    return dist


def scores_to_json(scores: list[SimilarityScore]) -> str:
    return (
        json.dumps(
            [
                {
                    "target": s.target,
                    "donor": s.donor,
                    "metric": s.metric.value,
                    "value": s.value,
                    "flags": list(s.flags),
                }
                for s in scores
            ],
            indent=1,
        )
        + "\n"
    )
