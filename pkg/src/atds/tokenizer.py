"""Acoustic pseudo-token induction from cluster index sequences.

Cluster indices become characters via a fixed codepoint offset, runs of
equal characters are collapsed (keeping run lengths for time alignment),
and a deterministic byte-pair-style subword model turns the character
strings into a token inventory of bounded size.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from atds.errors import FormatError, ValidationError
from atds.ioutil import atomic_write_bytes
from atds.quantizer import ClusterSequence

DEFAULT_BASE_CODEPOINT = 0x4E00  # contiguous, printable, non-surrogate block
UNK_TOKEN = "<unk>"
UNK_ID = 0

_SURROGATE_LO = 0xD800
_SURROGATE_HI = 0xDFFF


@dataclass(frozen=True)
class CharString:
    utt_id: str
    chars: str


@dataclass(frozen=True)
class DedupedString:
    utt_id: str
    chars: str
    run_lengths: tuple[int, ...]  # frames per surviving character


@dataclass(frozen=True)
class TokenSequence:
    utt_id: str
    ids: tuple[int, ...]


@dataclass(frozen=True)
class TokenSpan:
    token_id: int
    start_s: float
    end_s: float


@dataclass(frozen=True)
class SubwordVocab:
    k: int
    base_codepoint: int
    merges: tuple[tuple[str, str], ...]
    tokens: tuple[str, ...]
    # id-level merge rules (left_id, right_id, new_id), derived from merges
    merge_rules: tuple[tuple[int, int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.tokens) < self.k + 1:
            raise ValidationError("tokens must hold UNK plus the full alphabet")
        if self.tokens[UNK_ID] != UNK_TOKEN:
            raise ValidationError("tokens[0] must be the UNK sentinel")
        for i in range(self.k):
            expected = chr(self.base_codepoint + i)
            if self.tokens[1 + i] != expected:
                raise ValidationError(
                    f"tokens[{1 + i}] must be the alphabet char {expected!r}"
                )
        rules = []
        for m, (left, right) in enumerate(self.merges):
            new_id = self.k + 1 + m
            if self.tokens[new_id] != left + right:
                raise ValidationError(
                    f"merge {m} produces {left + right!r} but tokens[{new_id}] "
                    f"is {self.tokens[new_id]!r}"
                )
            known = self.tokens[:new_id]
            try:
                rules.append((known.index(left), known.index(right), new_id))
            except ValueError:
                raise ValidationError(f"merge {m} references unknown token")
        object.__setattr__(self, "merge_rules", tuple(rules))

    @property
    def vocab_size(self) -> int:
        return len(self.tokens)

    def char_id(self, ch: str) -> int:
        cp = ord(ch)
        if self.base_codepoint <= cp < self.base_codepoint + self.k:
            return 1 + cp - self.base_codepoint
        return UNK_ID


def _check_codepoint_range(base_codepoint: int, k: int) -> None:
    if base_codepoint < 0 or base_codepoint + k - 1 > 0x10FFFF:
        raise ValidationError("codepoint range exceeds Unicode")
    if base_codepoint <= _SURROGATE_HI and base_codepoint + k > _SURROGATE_LO:
        raise ValidationError("codepoint range overlaps surrogates")


def clusters_to_chars(
    seq: ClusterSequence,
    base_codepoint: int = DEFAULT_BASE_CODEPOINT,
    k: int | None = None,
) -> CharString:
    """Map each cluster index i to the character base_codepoint + i."""
    indices = list(seq.indices)
    if k is None:
        k = max(indices) + 1 if indices else 1
    _check_codepoint_range(base_codepoint, k)
    for i in indices:
        if not 0 <= i < k:
            raise ValidationError(f"cluster index {i} out of range [0, {k})")
    return CharString(seq.utt_id, "".join(chr(base_codepoint + i) for i in indices))


def dedup(s: CharString) -> DedupedString:
    """Collapse maximal runs of equal characters, keeping run lengths."""
    chars = []
    runs = []
    for ch in s.chars:
        if chars and chars[-1] == ch:
            runs[-1] += 1
        else:
            chars.append(ch)
            runs.append(1)
    return DedupedString(s.utt_id, "".join(chars), tuple(runs))


def _pair_counts(symbols: list[int]) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for pair in zip(symbols, symbols[1:]):
        counts[pair] = counts.get(pair, 0) + 1
    return counts


def _apply_merge(symbols: list[int], left: int, right: int, new_id: int) -> list[int]:
    out = []
    i = 0
    n = len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == left and symbols[i + 1] == right:
            out.append(new_id)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def train_subword(
    corpus: list[CharString] | list[DedupedString],
    vocab_size: int,
    k: int,
    base_codepoint: int = DEFAULT_BASE_CODEPOINT,
    min_pair_count: int = 2,
) -> SubwordVocab:
    """Deterministic pair-merge training.

    Starts from UNK plus the full k-character alphabet (all k seeded even if
    unobserved), then repeatedly merges the most frequent adjacent pair.
    Ties break to the lexicographically smallest (left, right) string pair.
    Stops at vocab_size tokens or when no pair reaches min_pair_count.
    Merges never cross utterance boundaries.
    """
    if vocab_size < k + 1:
        raise ValidationError(f"vocab_size must be >= k + 1 = {k + 1}")
    if not corpus:
        raise ValidationError("training corpus is empty")
    if min_pair_count < 1:
        raise ValidationError("min_pair_count must be >= 1")
    _check_codepoint_range(base_codepoint, k)

    tokens: list[str] = [UNK_TOKEN] + [chr(base_codepoint + i) for i in range(k)]
    merges: list[tuple[str, str]] = []

    def to_ids(chars: str) -> list[int]:
        ids = []
        for ch in chars:
            cp = ord(ch)
            if not base_codepoint <= cp < base_codepoint + k:
                raise ValidationError(
                    f"training character U+{cp:04X} outside the alphabet"
                )
            ids.append(1 + cp - base_codepoint)
        return ids

    sequences = [to_ids(s.chars) for s in corpus]

    # Global pair counts plus, per pair, the sequences containing it.
    counts: dict[tuple[int, int], int] = {}
    holders: dict[tuple[int, int], set[int]] = {}
    for si, seq in enumerate(sequences):
        for pair, c in _pair_counts(seq).items():
            counts[pair] = counts.get(pair, 0) + c
            holders.setdefault(pair, set()).add(si)

    while len(tokens) < vocab_size and counts:
        best_count = max(counts.values())
        if best_count < min_pair_count:
            break
        best_pair = min(
            (p for p, c in counts.items() if c == best_count),
            key=lambda p: (tokens[p[0]], tokens[p[1]]),
        )
        left, right = best_pair
        new_id = len(tokens)
        tokens.append(tokens[left] + tokens[right])
        merges.append((tokens[left], tokens[right]))

        for si in sorted(holders.get(best_pair, ())):
            old = sequences[si]
            new = _apply_merge(old, left, right, new_id)
            old_counts = _pair_counts(old)
            new_counts = _pair_counts(new)
            for pair in set(old_counts) | set(new_counts):
                delta = new_counts.get(pair, 0) - old_counts.get(pair, 0)
                if delta == 0:
                    continue
                total = counts.get(pair, 0) + delta
                if total > 0:
                    counts[pair] = total
                else:
                    counts.pop(pair, None)
                if new_counts.get(pair, 0) > 0:
                    holders.setdefault(pair, set()).add(si)
                elif pair in holders:
                    holders[pair].discard(si)
            sequences[si] = new
        counts.pop(best_pair, None)
        holders.pop(best_pair, None)

    return SubwordVocab(
        k=k,
        base_codepoint=base_codepoint,
        merges=tuple(merges),
        tokens=tuple(tokens),
    )


def encode(vocab: SubwordVocab, s: CharString | DedupedString) -> TokenSequence:
    """Replay the trained merges in order over the character sequence.

    Characters outside the alphabet encode to UNK (id 0), which never
    participates in merges. Concatenating the non-UNK token strings of the
    result reproduces the in-alphabet input exactly.
    """
    symbols = [vocab.char_id(ch) for ch in s.chars]
    if len(symbols) >= 2:
        for left, right, new_id in vocab.merge_rules:
            present = any(
                a == left and b == right for a, b in zip(symbols, symbols[1:])
            )
            if present:
                symbols = _apply_merge(symbols, left, right, new_id)
    return TokenSequence(s.utt_id, tuple(symbols))


def token_spans(
    seq: TokenSequence,
    run_lengths: tuple[int, ...],
    vocab: SubwordVocab,
    frame_rate_hz: float = 49.0,
) -> list[TokenSpan]:
    """Time spans of each token from the frame counts of its characters.

    Boundaries sit at frame_index / frame_rate_hz; spans tile the utterance.
    UNK covers exactly one deduplicated character.
    """
    if not frame_rate_hz > 0:
        raise ValidationError("frame_rate_hz must be > 0")
    if any(r <= 0 for r in run_lengths):
        raise ValidationError("run lengths must be positive")
    char_counts = [
        1 if tid == UNK_ID else len(vocab.tokens[tid]) for tid in seq.ids
    ]
    if sum(char_counts) != len(run_lengths):
        raise ValidationError(
            f"tokens cover {sum(char_counts)} characters but "
            f"{len(run_lengths)} run lengths were given"
        )
    spans = []
    frame = 0
    pos = 0
    for tid, n_chars in zip(seq.ids, char_counts):
        n_frames = sum(run_lengths[pos : pos + n_chars])
        spans.append(
            TokenSpan(tid, frame / frame_rate_hz, (frame + n_frames) / frame_rate_hz)
        )
        frame += n_frames
        pos += n_chars
    return spans


def vocab_to_canonical_json(vocab: SubwordVocab) -> bytes:
    doc = {
        "version": 1,
        "k": vocab.k,
        "base_codepoint": vocab.base_codepoint,
        "merges": [list(m) for m in vocab.merges],
        "tokens": list(vocab.tokens),
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=True).encode("ascii")


def save_vocab(vocab: SubwordVocab, path: str | Path) -> None:
    atomic_write_bytes(path, vocab_to_canonical_json(vocab))


def load_vocab(path: str | Path) -> SubwordVocab:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot load vocab {path}: {exc}")
    try:
        return SubwordVocab(
            k=doc["k"],
            base_codepoint=doc["base_codepoint"],
            merges=tuple((m[0], m[1]) for m in doc["merges"]),
            tokens=tuple(doc["tokens"]),
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise FormatError(f"malformed vocab {path}: {exc}")
