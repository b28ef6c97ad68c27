"""Command-line entry point for exporting embeddings and fine-tuning."""
from __future__ import annotations

import json
import sys

import click

from .export import ExportJob, export_embeddings
from .finetune import PRESETS, FinetuneJob, finetune


@click.group()
def main() -> None:
    """Bridge real transformer checkpoints to the EMBS embedding-store format."""


@main.command()
@click.option("--checkpoint", required=True, help="Model checkpoint path or hub name.")
@click.option("--dataset-dir", required=True, type=click.Path(), help="Directory with train/valid/test CSVs.")
@click.option("--out", required=True, type=click.Path(), help="Output store file.")
@click.option("--positions", default=60, show_default=True, help="Tokens per document (padding/truncation length).")
@click.option("--precision", default="f32", type=click.Choice(["f32", "f16"]), show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--device", default="cpu", show_default=True)
@click.option("--model-tag", default="", help="Tag recorded in the store header (defaults to the checkpoint name).")
def export(checkpoint, dataset_dir, out, positions, precision, batch_size, device, model_tag) -> None:
    """Encode a dataset with a checkpoint and write per-token embeddings."""
    try:
        summary = export_embeddings(
            ExportJob(
                checkpoint=checkpoint,
                dataset_dir=dataset_dir,
                out_path=out,
                positions=positions,
                precision=precision,
                batch_size=batch_size,
                device=device,
                model_tag=model_tag,
            )
        )
    except Exception as exc:
        click.echo(f"export failed: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(summary, sort_keys=True))


@main.command("finetune")
@click.option("--checkpoint", required=True)
@click.option("--dataset-dir", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Directory for the fine-tuned checkpoint.")
@click.option("--preset", default="grid", type=click.Choice(sorted(PRESETS)), show_default=True)
@click.option("--positions", default=60, show_default=True)
@click.option("--batch-size", default=16, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--device", default="cpu", show_default=True)
@click.option("--limit-train", default=None, type=int, help="Cap on training documents (smoke runs).")
@click.option("--limit-valid", default=None, type=int, help="Cap on validation documents (smoke runs).")
def finetune_cmd(checkpoint, dataset_dir, out, preset, positions, batch_size, seed, device, limit_train, limit_valid) -> None:
    """Fine-tune a classification head+encoder; select by validation log-loss."""
    try:
        summary = finetune(
            FinetuneJob(
                checkpoint=checkpoint,
                dataset_dir=dataset_dir,
                out_dir=out,
                preset=preset,
                positions=positions,
                batch_size=batch_size,
                seed=seed,
                device=device,
                limit_train=limit_train,
                limit_valid=limit_valid,
            )
        )
    except Exception as exc:
        click.echo(f"finetune failed: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(summary, sort_keys=True))


if __name__ == "__main__":
    main()
