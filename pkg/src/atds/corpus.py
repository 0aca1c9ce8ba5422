"""Corpus manifests, the .ate embedding file format, and subset sampling.

Manifest: UTF-8 TSV with LF line endings and four columns
(utt_id, path, duration_s, language); lines starting with '#' are ignored.

.ate file (little-endian): magic b"ATDS", u32 version = 1, u32 dim,
u64 frames, f32 frame_rate_hz, then frames*dim float32 values row-major.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from atds.errors import FormatError, InsufficientDataError, ValidationError
from atds.ioutil import atomic_write_bytes, atomic_write_text
from atds.rng import SplitMix64

ATE_MAGIC = b"ATDS"
ATE_VERSION = 1
DEFAULT_FRAME_RATE_HZ = 49.0

_HEADER = struct.Struct("<4sIIQf")


@dataclass(frozen=True)
class UtteranceRecord:
    utt_id: str
    path: str
    duration_s: float
    language: str

    def __post_init__(self):
        if not self.utt_id:
            raise ValidationError("utt_id must be non-empty")
        if not self.path:
            raise ValidationError(f"{self.utt_id}: path must be non-empty")
        if not self.duration_s > 0:
            raise ValidationError(
                f"{self.utt_id}: duration_s must be > 0, got {self.duration_s}"
            )


@dataclass(frozen=True)
class CorpusManifest:
    records: tuple[UtteranceRecord, ...]
    total_duration_s: float = field(init=False)

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.utt_id in seen:
                raise ValidationError(f"duplicate utt_id: {rec.utt_id}")
            seen.add(rec.utt_id)
        object.__setattr__(
            self, "total_duration_s", sum(r.duration_s for r in self.records)
        )

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class EmbeddingMatrix:
    data: np.ndarray  # frames x dim, float32
    frame_rate_hz: float = DEFAULT_FRAME_RATE_HZ

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValidationError(f"embedding data must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("embedding data contains non-finite values")
        if not self.frame_rate_hz > 0:
            raise ValidationError("frame_rate_hz must be > 0")
        object.__setattr__(self, "data", arr)

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def load_manifest(path: str | Path) -> CorpusManifest:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"manifest not found: {path}")
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").split("\n"), 1):
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise FormatError(f"{path}:{lineno}: expected 4 columns, got {len(cols)}")
        utt_id, rel_path, dur_str, language = cols
        try:
            duration_s = float(dur_str)
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric duration {dur_str!r}")
        try:
            records.append(UtteranceRecord(utt_id, rel_path, duration_s, language))
        except ValidationError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}")
    if not records:
        raise FormatError(f"manifest is empty: {path}")
    try:
        return CorpusManifest(tuple(records))
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}")


def save_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    lines = [
        f"{r.utt_id}\t{r.path}\t{r.duration_s!r}\t{r.language}\n"
        for r in manifest.records
    ]
    atomic_write_text(path, "".join(lines))


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read embedding file {path}: {exc}")
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, dim, frames, frame_rate = _HEADER.unpack_from(raw)
    if magic != ATE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != ATE_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    expected = frames * dim * 4
    payload = raw[_HEADER.size :]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(frames, dim)
    if not np.all(np.isfinite(data)):
        raise FormatError(f"{path}: payload contains non-finite values")
    return EmbeddingMatrix(data=data.copy(), frame_rate_hz=frame_rate)


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    header = _HEADER.pack(
        ATE_MAGIC,
        ATE_VERSION,
        matrix.dim,
        matrix.frames,
        matrix.frame_rate_hz,
    )
    payload = np.ascontiguousarray(matrix.data, dtype="<f4").tobytes()
    try:
        atomic_write_bytes(path, header + payload)
    except OSError as exc:
        raise FormatError(f"cannot write embedding file {path}: {exc}")


def sample_subset(
    manifest: CorpusManifest, target_hours: float, seed: int
) -> CorpusManifest:
    """Seeded shuffle, then shortest prefix reaching target_hours.

    The prefix includes the utterance that crosses the boundary, so the
    subset duration D satisfies target <= D < target + max utterance length.
    """
    if target_hours < 0:
        raise ValidationError("target_hours must be >= 0")
    if target_hours == 0:
        return CorpusManifest(())
    target_s = target_hours * 3600.0
    if manifest.total_duration_s < target_s:
        raise InsufficientDataError(
            f"requested {target_hours} h but manifest holds "
            f"{manifest.total_duration_s / 3600.0:.3f} h"
        )
    records = list(manifest.records)
    SplitMix64(seed).shuffle(records)
    taken = []
    acc = 0.0
    for rec in records:
        taken.append(rec)
        acc += rec.duration_s
        if acc >= target_s:
            break
    return CorpusManifest(tuple(taken))


def verify_embeddings(
    manifest: CorpusManifest, root: str | Path, tol_s: float = 0.1
) -> list[str]:
    """Cross-check manifest durations against embedding frame counts.

    Returns a list of human-readable problems; empty means consistent.
    """
    problems = []
    root = Path(root)
    for rec in manifest.records:
        try:
            emb = read_embeddings(root / rec.path)
        except FormatError as exc:
            problems.append(str(exc))
            continue
        implied = emb.frames / emb.frame_rate_hz
        if abs(implied - rec.duration_s) > tol_s:
            problems.append(
                f"{rec.utt_id}: manifest says {rec.duration_s:.3f} s but "
                f"{emb.frames} frames at {emb.frame_rate_hz} Hz imply {implied:.3f} s"
            )
    return problems
