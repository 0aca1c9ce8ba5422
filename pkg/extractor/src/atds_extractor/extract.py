"""Corpus extraction: audio manifest -> one .ate file per utterance plus a
manifest consumable by the similarity toolkit.

The .ate format (little-endian) is the toolkit's public contract:
magic b"ATDS", u32 version = 1, u32 dim, u64 frames, f32 frame_rate_hz,
payload frames*dim float32 row-major.
"""

import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from atds_extractor.audio import AudioError, load_wav_16k_mono

NOMINAL_FRAME_RATE_HZ = 49.0
_ATE_HEADER = struct.Struct("<4sIIQf")


class ExtractionError(Exception):
    pass


@dataclass(frozen=True)
class ExtractionJob:
    audio_manifest: Path
    model_ref: str
    out_dir: Path
    layer: int = 12
    device: str = "cpu"
    batch_size: int = 1


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_ate(path: Path, matrix: np.ndarray, frame_rate_hz: float) -> None:
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    header = _ATE_HEADER.pack(
        b"ATDS", 1, matrix.shape[1], matrix.shape[0], frame_rate_hz
    )
    _atomic_write(path, header + matrix.tobytes())


def read_audio_manifest(path: Path) -> list[tuple[str, str, str]]:
    """TSV columns: utt_id, audio path, language."""
    rows = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").split("\n"), 1):
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ExtractionError(f"{path}:{lineno}: expected 3 columns")
        rows.append((cols[0], cols[1], cols[2]))
    return rows


def _load_model(model_ref: str, device: str):
    import torch
    from transformers import Wav2Vec2Model

    try:
        model = Wav2Vec2Model.from_pretrained(model_ref)
    except Exception as exc:
        raise ExtractionError(f"cannot load encoder {model_ref!r}: {exc}")
    model.eval()
    model.to(torch.device(device))
    return model


def extract_corpus(job: ExtractionJob) -> Path:
    """Run the encoder over every utterance, write .ate files, and return
    the path of the emitted corpus manifest."""
    import torch

    rows = read_audio_manifest(Path(job.audio_manifest))
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest_lines = []
    if rows:
        model = _load_model(job.model_ref, job.device)
        depth = model.config.num_hidden_layers
        if not 1 <= job.layer <= depth:
            raise ExtractionError(
                f"layer {job.layer} out of range for a {depth}-layer encoder"
            )
        audio_root = Path(job.audio_manifest).parent
        for utt_id, audio_path, language in rows:
            try:
                samples = load_wav_16k_mono(audio_root / audio_path)
            except AudioError as exc:
                raise ExtractionError(str(exc))
            duration_s = len(samples) / 16_000.0
            # per-utterance zero-mean unit-variance, as the encoders expect
            samples = (samples - samples.mean()) / (samples.std() + 1e-7)
            with torch.no_grad():
                wave = torch.from_numpy(samples)[None, :].to(job.device)
                out = model(wave, output_hidden_states=True)
            hidden = out.hidden_states[job.layer][0].cpu().numpy()
            write_ate(out_dir / f"{utt_id}.ate", hidden, NOMINAL_FRAME_RATE_HZ)
            manifest_lines.append(
                f"{utt_id}\t{utt_id}.ate\t{duration_s!r}\t{language}\n"
            )

    manifest_path = out_dir / "manifest.tsv"
    _atomic_write(manifest_path, "".join(manifest_lines).encode("utf-8"))
    sidecar = {
        "model_ref": job.model_ref,
        "layer": job.layer,
        "layer_output": "standard encoder layer output (post layer, pre any "
                        "final norm)",
        "frame_rate_hz": NOMINAL_FRAME_RATE_HZ,
        "device": job.device,
    }
    _atomic_write(
        out_dir / "extraction.json", (json.dumps(sidecar, indent=1) + "\n").encode()
    )
    return manifest_path
