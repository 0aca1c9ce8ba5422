"""Command-line front end: one subcommand per pipeline stage plus a
one-shot `pipeline` command.

Exit codes: 0 success, 1 runtime error, 2 usage/validation error.
Reports go to stdout or --out; logs go to stderr (level via ATDS_LOG).
"""

import functools
import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from atds import analysis, pipeline, similarity, tokenizer
from atds.corpus import load_manifest, read_embeddings, sample_subset, save_manifest
from atds.errors import AtdsError, ValidationError
from atds.ioutil import atomic_write_text
from atds.quantizer import KERNEL_BACKEND, load_codebook, save_codebook, train_codebook

log = logging.getLogger("atds")


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("ATDS_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            log.debug("validation: %s", exc)
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except (AtdsError, OSError) as exc:
            log.debug("runtime: %s", exc)
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.version_option()
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Upper bound on internal worker parallelism.")
def main(jobs):
    _setup_logging()
    log.debug("kernel backend: %s, jobs: %d", KERNEL_BACKEND, jobs)


@main.command("sample")
@click.option("--manifest", required=True, type=click.Path())
@click.option("--hours", type=float, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def cmd_sample(manifest, hours, seed, out):
    """Seeded random duration-bounded subset of a corpus manifest."""
    subset = sample_subset(load_manifest(manifest), hours, seed)
    lines = [
        f"{r.utt_id}\t{r.path}\t{r.duration_s!r}\t{r.language}" for r in subset.records
    ]
    _emit("\n".join(lines) + ("\n" if lines else ""), out)


def _load_frames_for_training(manifest_path: str):
    manifest = load_manifest(manifest_path)
    root = Path(manifest_path).parent
    matrices, _ = pipeline.load_corpus_frames(manifest, root)
    return np.concatenate(matrices, axis=0)


@main.command("train-quantizer")
@click.option("--manifest", required=True, type=click.Path())
@click.option("--k", type=int, default=500, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-iters", type=int, default=100, show_default=True)
@click.option("--rel-tol", type=float, default=1e-6, show_default=True)
@click.option("--standardize", is_flag=True, default=False)
@click.option("--out", required=True, type=click.Path())
@handle_errors
def cmd_train_quantizer(manifest, k, seed, max_iters, rel_tol, standardize, out):
    """Train the k-means codebook on all frames of a (sampled) manifest."""
    if k < 1:
        raise ValidationError("--k must be >= 1")
    frames = _load_frames_for_training(manifest)
    codebook = train_codebook(frames, k, seed, max_iters, rel_tol, standardize)
    save_codebook(codebook, out)
    click.echo(f"trained k={k} codebook, inertia {codebook.inertia:.6g}", err=True)


@main.command("quantize")
@click.option("--codebook", "codebook_path", required=True, type=click.Path())
@click.option("--manifest", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@handle_errors
def cmd_quantize(codebook_path, manifest, out):
    """Assign every frame of a corpus to its nearest centroid."""
    codebook = load_codebook(codebook_path)
    m = load_manifest(manifest)
    sequences = pipeline.quantize_corpus(codebook, m, Path(manifest).parent)
    pipeline.save_sequences(sequences, Path(out))


@main.command("train-subword")
@click.option("--clusters", required=True, type=click.Path())
@click.option("--k", type=int, default=500, show_default=True)
@click.option("--base-codepoint", type=int, default=tokenizer.DEFAULT_BASE_CODEPOINT)
@click.option("--vocab-size", type=int, default=10000, show_default=True)
@click.option("--min-pair-count", type=int, default=2, show_default=True)
@click.option("--out", required=True, type=click.Path())
@handle_errors
def cmd_train_subword(clusters, k, base_codepoint, vocab_size, min_pair_count, out):
    """Train the subword merge vocabulary on cluster sequences."""
    seqs = pipeline.load_sequences(Path(clusters), kind="cluster")
    corpus = [
        tokenizer.dedup(tokenizer.clusters_to_chars(s, base_codepoint, k))
        for s in seqs
    ]
    vocab = tokenizer.train_subword(corpus, vocab_size, k, base_codepoint, min_pair_count)
    tokenizer.save_vocab(vocab, out)


@main.command("tokenize")
@click.option("--clusters", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@handle_errors
def cmd_tokenize(clusters, vocab_path, out):
    """Encode cluster sequences into acoustic tokens."""
    vocab = tokenizer.load_vocab(vocab_path)
    seqs = pipeline.load_sequences(Path(clusters), kind="cluster")
    tokens = pipeline.tokenize_clusters(vocab, seqs)
    pipeline.save_sequences(tokens, Path(out))


@main.command("distribution")
@click.option("--tokens", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", required=True, type=click.Path())
@click.option("--language", required=True)
@click.option("--out", required=True, type=click.Path())
@handle_errors
def cmd_distribution(tokens, vocab_path, language, out):
    """Token frequency vector of a tokenized corpus."""
    vocab = tokenizer.load_vocab(vocab_path)
    seqs = pipeline.load_sequences(Path(tokens), kind="token")
    dist = similarity.token_distribution(seqs, vocab, language)
    similarity.save_distribution(dist, out)


@main.command("atds")
@click.option("--target", "target_path", required=True, type=click.Path())
@click.option("--donor", "donor_paths", required=True, multiple=True, type=click.Path())
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def cmd_atds(target_path, donor_paths, out):
    """ATDS between a target distribution and one or more donors."""
    target = similarity.load_distribution(target_path)
    scores = [
        similarity.atds(target, similarity.load_distribution(p)) for p in donor_paths
    ]
    _emit(similarity.scores_to_json(scores), out)


def _corpus_utt_means(manifest_path: str) -> list[np.ndarray]:
    manifest = load_manifest(manifest_path)
    root = Path(manifest_path).parent
    return [
        read_embeddings(root / rec.path).data.mean(axis=0, dtype=np.float64)
        for rec in manifest.records
    ]


@main.command("sim-embed")
@click.option("--manifest-a", required=True, type=click.Path())
@click.option("--manifest-b", required=True, type=click.Path())
@click.option("--target", default="")
@click.option("--donor", default="")
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def cmd_sim_embed(manifest_a, manifest_b, target, donor, out):
    """Mean-embedding baseline: cosine of corpus-level embedding means."""
    score = similarity.mean_embedding_similarity(
        _corpus_utt_means(manifest_a), _corpus_utt_means(manifest_b), target, donor
    )
    _emit(similarity.scores_to_json([score]), out)


def _load_vector(path: str) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8").strip()
    if text.startswith("["):
        return np.asarray(json.loads(text), dtype=np.float64)
    return np.asarray([float(t) for t in text.split()], dtype=np.float64)


@main.command("sim-featvec")
@click.option("--vec-a", required=True, type=click.Path())
@click.option("--vec-b", required=True, type=click.Path())
@click.option("--target", default="")
@click.option("--donor", default="")
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def cmd_sim_featvec(vec_a, vec_b, target, donor, out):
    """External feature-vector baseline (flags identical imputed vectors)."""
    score = similarity.feature_vector_similarity(
        _load_vector(vec_a), _load_vector(vec_b), target, donor
    )
    _emit(similarity.scores_to_json([score]), out)


@main.command("wer")
@click.option("--ref", required=True, type=click.Path())
@click.option("--hyp", required=True, type=click.Path())
@click.option("--lowercase", is_flag=True, default=False)
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def cmd_wer(ref, hyp, lowercase, out):
    """Corpus WER from two utt_id/text TSV transcript files."""
    refs = analysis.load_transcripts(ref)
    hyps = analysis.load_transcripts(hyp)
    missing = sorted(set(refs) - set(hyps))
    if missing:
        raise ValidationError(f"hypotheses missing for: {', '.join(missing[:5])}")
    subs = ins = dels = ref_words = 0
    per_utt = {}
    for utt_id in refs:
        r, h = refs[utt_id], hyps[utt_id]
        if lowercase:
            r, h = r.lower(), h.lower()
        result = analysis.wer(r.split(), h.split())
        per_utt[utt_id] = result.wer
        subs += result.substitutions
        ins += result.insertions
        dels += result.deletions
        ref_words += result.ref_words
    doc = {
        "wer": (subs + ins + dels) / ref_words,
        "substitutions": subs,
        "insertions": ins,
        "deletions": dels,
        "ref_words": ref_words,
        "per_utterance": per_utt,
    }
    _emit(json.dumps(doc, indent=1) + "\n", out)


@main.command("werr")
@click.option("--baseline", type=float, required=True)
@click.option("--wer", "observed", type=float, required=True)
@handle_errors
def cmd_werr(baseline, observed):
    """Relative WER reduction versus a baseline, in percent."""
    click.echo(f"{analysis.werr(baseline, observed):.1f}%")


@main.command("correlate")
@click.option("--pairs", required=True, type=click.Path(),
              help="Two-column TSV of (x, y) points.")
@handle_errors
def cmd_correlate(pairs):
    """Pearson correlation of a two-column TSV."""
    xs, ys = [], []
    for line in Path(pairs).read_text(encoding="utf-8").split("\n"):
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ValidationError(f"expected 2 columns, got {len(cols)}")
        xs.append(float(cols[0]))
        ys.append(float(cols[1]))
    click.echo(f"{analysis.pearson(xs, ys)!r}")


@main.command("rank")
@click.option("--scores", required=True, type=click.Path(),
              help="JSON: donor -> score, or donor -> {score, wer}.")
@click.option("--baseline", type=float, default=None)
@click.option("--format", "fmt", type=click.Choice(["tsv", "json"]), default="tsv")
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def cmd_rank(scores, baseline, fmt, out):
    """Rank donor languages by similarity score."""
    doc = json.loads(Path(scores).read_text(encoding="utf-8"))
    entries = []
    for donor, value in doc.items():
        if isinstance(value, dict):
            entries.append(
                analysis.DonorEntry(donor, float(value["score"]), value.get("wer"))
            )
        else:
            entries.append(analysis.DonorEntry(donor, float(value)))
    report = analysis.rank_donors(entries, baseline)
    text = (
        analysis.report_to_tsv(report)
        if fmt == "tsv"
        else analysis.report_to_json(report)
    )
    _emit(text, out)


@main.command("phone-map")
@click.option("--clusters", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", required=True, type=click.Path())
@click.option("--phones", required=True, type=click.Path())
@click.option("--frame-rate", type=float, default=49.0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def cmd_phone_map(clusters, vocab_path, phones, frame_rate, out):
    """P(phone | token) from token spans and phone intervals."""
    vocab = tokenizer.load_vocab(vocab_path)
    cluster_seqs = pipeline.load_sequences(Path(clusters), kind="cluster")
    intervals = analysis.load_phone_intervals(phones)
    utterances = []
    for seq in cluster_seqs:
        if seq.utt_id not in intervals:
            continue
        deduped = tokenizer.dedup(
            tokenizer.clusters_to_chars(seq, vocab.base_codepoint, vocab.k)
        )
        token_seq = tokenizer.encode(vocab, deduped)
        spans = tokenizer.token_spans(token_seq, deduped.run_lengths, vocab, frame_rate)
        utterances.append((spans, intervals[seq.utt_id]))
    table = analysis.phone_token_correspondence(utterances, frame_rate)
    _emit(analysis.correspondence_to_json(table), out)


def _read_config(path: str) -> dict:
    """TOML-style key = value lines; '#' comments allowed."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip().strip("\"'")
    return values


@main.command("pipeline")
@click.option("--target", "target_manifest", type=click.Path(), default=None)
@click.option("--donor", "donor_manifests", multiple=True, type=click.Path())
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--hours", type=float, default=5.0, show_default=True)
@click.option("--k", type=int, default=500, show_default=True)
@click.option("--vocab-size", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--base-codepoint", type=int, default=tokenizer.DEFAULT_BASE_CODEPOINT)
@click.option("--min-pair-count", type=int, default=2, show_default=True)
@click.option("--standardize", is_flag=True, default=False)
@click.option("--layer-note", default="")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="key = value file; explicit flags override it.")
@click.pass_context
@handle_errors
def cmd_pipeline(ctx, target_manifest, donor_manifests, out_dir, hours, k,
                 vocab_size, seed, base_codepoint, min_pair_count, standardize,
                 layer_note, config_path):
    """One-shot target-vs-donors run producing all artifacts."""
    values = {
        "target_manifest": target_manifest,
        "donor_manifests": list(donor_manifests),
        "out_dir": out_dir,
        "hours": hours,
        "k": k,
        "vocab_size": vocab_size,
        "seed": seed,
        "base_codepoint": base_codepoint,
        "min_pair_count": min_pair_count,
        "standardize": standardize,
        "layer_note": layer_note,
    }
    if config_path:
        file_values = _read_config(config_path)
        casts = {
            "hours": float, "k": int, "vocab_size": int, "seed": int,
            "base_codepoint": int, "min_pair_count": int,
            "standardize": lambda v: v.lower() in ("1", "true", "yes"),
        }
        for key, raw in file_values.items():
            param = {"target": "target_manifest", "donor": "donor_manifests",
                     }.get(key, key)
            if param not in values:
                raise ValidationError(f"unknown config key {key!r}")
            source = ctx.get_parameter_source(
                {"target_manifest": "target_manifest",
                 "donor_manifests": "donor_manifests"}.get(param, param)
            )
            if source is not None and source.name != "DEFAULT":
                continue  # explicit flag wins
            if param == "donor_manifests":
                values[param] = [p for p in raw.split(",") if p]
            else:
                values[param] = casts.get(param, str)(raw)
    if not values["target_manifest"]:
        raise ValidationError("--target (or config target) is required")
    if not values["donor_manifests"]:
        raise ValidationError("at least one --donor is required")
    if not values["out_dir"]:
        raise ValidationError("--out-dir (or config out_dir) is required")
    config = pipeline.PipelineConfig(
        target_manifest=Path(values["target_manifest"]),
        donor_manifests=tuple(Path(p) for p in values["donor_manifests"]),
        out_dir=Path(values["out_dir"]),
        hours=values["hours"],
        k=values["k"],
        vocab_size=values["vocab_size"],
        seed=values["seed"],
        base_codepoint=values["base_codepoint"],
        min_pair_count=values["min_pair_count"],
        standardize=values["standardize"],
        layer_note=values["layer_note"],
    )
    result = pipeline.run_pipeline(config)
    for score in result.scores:
        click.echo(f"{score.target}\t{score.donor}\tATDS\t{score.value!r}")


if __name__ == "__main__":
    main()
