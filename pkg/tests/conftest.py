import numpy as np
import pytest

from atds.corpus import EmbeddingMatrix, write_embeddings


@pytest.fixture
def make_corpus(tmp_path):
    """Write a manifest plus .ate files from (utt_id, array, language) triples."""

    def _make(name, utterances, frame_rate_hz=49.0):
        root = tmp_path / name
        root.mkdir(exist_ok=True)
        lines = []
        for utt_id, data, language in utterances:
            data = np.asarray(data, dtype=np.float32)
            write_embeddings(
                EmbeddingMatrix(data, frame_rate_hz), root / f"{utt_id}.ate"
            )
            duration = data.shape[0] / frame_rate_hz
            lines.append(f"{utt_id}\t{utt_id}.ate\t{duration!r}\t{language}\n")
        manifest = root / "manifest.tsv"
        manifest.write_text("".join(lines), encoding="utf-8")
        return manifest

    return _make
