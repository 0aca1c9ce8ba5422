"""CLI: atds-extract --manifest M --model-ref R --layer 12 --out DIR"""

import sys
from pathlib import Path

import click

from atds_extractor.extract import ExtractionError, ExtractionJob, extract_corpus


@click.command()
@click.option("--manifest", required=True, type=click.Path(exists=True),
              help="Audio manifest TSV: utt_id, audio path, language.")
@click.option("--model-ref", required=True,
              help="Pretrained encoder: local directory or hub identifier.")
@click.option("--layer", type=int, default=12, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--device", default="cpu", show_default=True)
@click.option("--batch-size", type=int, default=1, show_default=True)
def main(manifest, model_ref, layer, out_dir, device, batch_size):
    """Extract mid-layer encoder hidden states to .ate embedding files."""
    job = ExtractionJob(
        audio_manifest=Path(manifest),
        model_ref=model_ref,
        out_dir=Path(out_dir),
        layer=layer,
        device=device,
        batch_size=batch_size,
    )
    try:
        manifest_path = extract_corpus(job)
    except ExtractionError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(str(manifest_path))


if __name__ == "__main__":
    main()
