"""End-to-end orchestration: sample -> k-means -> chars -> dedup -> subword
-> token distributions -> ATDS, shared by the CLI and the test harness."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from atds import tokenizer
from atds.corpus import CorpusManifest, load_manifest, read_embeddings, sample_subset, save_manifest
from atds.errors import FormatError, ValidationError
from atds.ioutil import atomic_write_text
from atds.quantizer import Codebook, ClusterSequence, assign, save_codebook, train_codebook
from atds.similarity import (
    SimilarityScore,
    TokenDistribution,
    atds,
    save_distribution,
    scores_to_json,
    token_distribution,
)
from atds.tokenizer import SubwordVocab, TokenSequence, save_vocab


@dataclass(frozen=True)
class PipelineConfig:
    target_manifest: Path
    donor_manifests: tuple[Path, ...]
    out_dir: Path
    hours: float = 5.0
    k: int = 500
    vocab_size: int = 10000
    seed: int = 0
    base_codepoint: int = tokenizer.DEFAULT_BASE_CODEPOINT
    max_iters: int = 100
    rel_tol: float = 1e-6
    min_pair_count: int = 2
    standardize: bool = False
    layer_note: str = ""

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.vocab_size < self.k + 1:
            raise ValidationError("vocab_size must be >= k + 1")


def load_corpus_frames(
    manifest: CorpusManifest, root: Path
) -> tuple[list[np.ndarray], float]:
    """Per-utterance frame matrices in manifest order plus the frame rate."""
    matrices = []
    frame_rate = None
    dim = None
    for rec in manifest.records:
        emb = read_embeddings(root / rec.path)
        if dim is None:
            dim, frame_rate = emb.dim, emb.frame_rate_hz
        elif emb.dim != dim:
            raise FormatError(
                f"{rec.utt_id}: dim {emb.dim} differs from corpus dim {dim}"
            )
        matrices.append(emb.data)
    return matrices, frame_rate if frame_rate is not None else 49.0


def quantize_corpus(
    codebook: Codebook, manifest: CorpusManifest, root: Path
) -> list[ClusterSequence]:
    sequences = []
    for rec in manifest.records:
        emb = read_embeddings(root / rec.path)
        sequences.append(assign(codebook, emb.data, utt_id=rec.utt_id))
    return sequences


def tokenize_clusters(
    vocab: SubwordVocab, clusters: list[ClusterSequence]
) -> list[TokenSequence]:
    out = []
    for seq in clusters:
        chars = tokenizer.clusters_to_chars(seq, vocab.base_codepoint, vocab.k)
        out.append(tokenizer.encode(vocab, tokenizer.dedup(chars)))
    return out


def save_sequences(sequences, path: Path) -> None:
    """TSV dump: utt_id, space-separated integer ids."""
    lines = []
    for seq in sequences:
        ids = seq.indices if isinstance(seq, ClusterSequence) else seq.ids
        lines.append(f"{seq.utt_id}\t{' '.join(str(int(i)) for i in ids)}\n")
    atomic_write_text(path, "".join(lines))


def load_sequences(path: Path, kind: str = "cluster"):
    sequences = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), 1):
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise FormatError(f"{path}:{lineno}: expected 2 columns")
        utt_id, ids_str = cols
        try:
            ids = [int(t) for t in ids_str.split()] if ids_str.strip() else []
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}")
        if kind == "cluster":
            sequences.append(ClusterSequence(utt_id, np.asarray(ids, dtype=np.int64)))
        else:
            sequences.append(TokenSequence(utt_id, tuple(ids)))
    return sequences


@dataclass(frozen=True)
class PipelineResult:
    codebook: Codebook
    vocab: SubwordVocab
    target_distribution: TokenDistribution
    donor_distributions: tuple[TokenDistribution, ...]
    scores: tuple[SimilarityScore, ...]
    artifacts: dict[str, Path] = field(default_factory=dict)


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Train target-side models on a sampled subset, tokenize target and all
    donor corpora with them, and score every donor by ATDS."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, Path] = {}

    target_manifest = load_manifest(config.target_manifest)
    target_root = Path(config.target_manifest).parent
    subset = sample_subset(target_manifest, config.hours, config.seed)
    artifacts["subset_manifest"] = out / "target_subset.tsv"
    save_manifest(subset, artifacts["subset_manifest"])

    subset_frames, frame_rate = load_corpus_frames(subset, target_root)
    training = np.concatenate(subset_frames, axis=0)
    codebook = train_codebook(
        training,
        k=config.k,
        seed=config.seed,
        max_iters=config.max_iters,
        rel_tol=config.rel_tol,
        standardize=config.standardize,
    )
    artifacts["codebook"] = out / "codebook.atcb"
    save_codebook(codebook, artifacts["codebook"])

    subset_clusters = [
        assign(codebook, frames, utt_id=rec.utt_id)
        for rec, frames in zip(subset.records, subset_frames)
    ]
    subset_chars = [
        tokenizer.dedup(
            tokenizer.clusters_to_chars(seq, config.base_codepoint, config.k)
        )
        for seq in subset_clusters
    ]
    vocab = tokenizer.train_subword(
        subset_chars,
        vocab_size=config.vocab_size,
        k=config.k,
        base_codepoint=config.base_codepoint,
        min_pair_count=config.min_pair_count,
    )
    artifacts["vocab"] = out / "vocab.json"
    save_vocab(vocab, artifacts["vocab"])

    target_language = target_manifest.records[0].language
    target_clusters = quantize_corpus(codebook, target_manifest, target_root)
    target_tokens = tokenize_clusters(vocab, target_clusters)
    target_dist = token_distribution(target_tokens, vocab, target_language)
    artifacts["target_distribution"] = out / f"dist_{target_language}.json"
    save_distribution(target_dist, artifacts["target_distribution"])

    donor_dists = []
    scores = []
    for donor_path in config.donor_manifests:
        donor_manifest = load_manifest(donor_path)
        donor_language = donor_manifest.records[0].language
        donor_clusters = quantize_corpus(codebook, donor_manifest, Path(donor_path).parent)
        donor_tokens = tokenize_clusters(vocab, donor_clusters)
        donor_dist = token_distribution(donor_tokens, vocab, donor_language)
        donor_dists.append(donor_dist)
        scores.append(atds(target_dist, donor_dist))
        artifacts[f"donor_distribution_{donor_language}"] = (
            out / f"dist_{donor_language}.json"
        )
        save_distribution(donor_dist, artifacts[f"donor_distribution_{donor_language}"])

    artifacts["scores"] = out / "atds_scores.json"
    atomic_write_text(artifacts["scores"], scores_to_json(scores))
    meta = {
        "frame_rate_hz": frame_rate,
        "hours": config.hours,
        "k": config.k,
        "vocab_size": config.vocab_size,
        "seed": config.seed,
        "layer_note": config.layer_note,
    }
    artifacts["metadata"] = out / "pipeline.json"
    atomic_write_text(artifacts["metadata"], json.dumps(meta, indent=1) + "\n")

    return PipelineResult(
        codebook=codebook,
        vocab=vocab,
        target_distribution=target_dist,
        donor_distributions=tuple(donor_dists),
        scores=tuple(scores),
        artifacts=artifacts,
    )
