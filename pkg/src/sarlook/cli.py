"""Command-line driver: thin wrappers over the library and the data store.

Every subcommand exits 0 on success; failures print one machine-parsable
JSON line to stderr (``{"error": ..., "message": ...}``) and exit 1.
"""
from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import evaluate as eval_mod
from .encoder import EncoderConfig, baseline_descriptor, save_checkpoint
from .encoder.stacks import ENCODER_TAGS, REPRESENTATION_TAGS
from .encoder.training import embed_stack, embed_stacks, train_autoencoder

from .retrieval import build_index, load_index, query as run_query
from .service.store import DataStore
from .synth import SynthParams, synth_vignette
from .vignette import CLASS_ABBREV, read_vignette

DATA_DIR_OPTION = click.option(
    "--data-dir", envvar="SARLOOK_DATA", required=True,
    type=click.Path(path_type=Path),
    help="Store root directory (env: SARLOOK_DATA).",
)


def fail_cleanly(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001 - CLI boundary
            sys.stderr.write(json.dumps(
                {"error": type(exc).__name__, "message": str(exc)}) + "\n")
            sys.exit(1)
    return wrapper


@click.group()
def main():
    """Ocean SAR vignette processing and retrieval toolkit."""


@main.command()
@DATA_DIR_OPTION
@click.option("--per-class", default=5, show_default=True, type=click.IntRange(min=1))
@click.option("--classes", default="0,1,2,3,4,5,6,7,8,9", show_default=True,
              help="Comma-separated class ids.")
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--rows", default=640, show_default=True, type=int)
@click.option("--cols", default=640, show_default=True, type=int)
@click.option("--prf", default=1600.0, show_default=True, type=float)
@click.option("--spacing", default=5.0, show_default=True, type=float)
@click.option("--looks", default=1, show_default=True, type=int)
@fail_cleanly
def synth(data_dir, per_class, classes, seed, rows, cols, prf, spacing, looks):
    """Generate a synthetic vignette dataset into the store."""
    store = DataStore(data_dir, create=True)
    class_ids = [int(c) for c in classes.split(",") if c.strip() != ""]
    count = 0
    for class_id in class_ids:
        for i in range(per_class):
            vid_seed = int(np.random.SeedSequence([seed, class_id, i]).generate_state(1)[0])
            vid = f"{CLASS_ABBREV[class_id].lower()}-{seed}-{i:04d}"
            v = synth_vignette(
                SynthParams(class_id=class_id, seed=vid_seed, rows=rows, cols=cols,
                            speckle_looks=looks),
                prf=prf, azimuth_spacing=spacing, range_spacing=spacing,
                vignette_id=vid,
            )
            store.add_vignette(v)
            count += 1
    click.echo(json.dumps({"generated": count, "data_dir": str(data_dir)}))


def _iter_store_vignettes(store, ids):
    wanted = set(ids) if ids else None
    for vid, _meta in store.list_vignettes():
        if wanted is None or vid in wanted:
            yield store.load_vignette(vid)


@main.command()
@DATA_DIR_OPTION
@click.option("--id", "ids", multiple=True, help="Limit to specific vignette ids.")
@click.option("--n-sub", default=4, show_default=True, type=int)
@click.option("--k", default=10, show_default=True, type=int, help="Decimation factor.")
@fail_cleanly
def preprocess(data_dir, ids, n_sub, k):
    """Subaperture decomposition: store decimated VIG and SUBAP magnitudes."""
    from .preprocess import subaperture_decompose, vignette_magnitude_decimated
    from .encoder.stacks import crop_to_multiple

    store = DataStore(data_dir, create=True)
    done = 0
    for v in _iter_store_vignettes(store, ids):
        ss = subaperture_decompose(v, n_sub=n_sub, k=k)
        vig = crop_to_multiple(vignette_magnitude_decimated(v, k=k))
        subap = np.stack([crop_to_multiple(m) for m in ss.sub_mag_decimated])
        store.save_stack_grids(v.id, "VIG", vig[None], pixel_spacing_m=v.azimuth_spacing * k)
        store.save_stack_grids(v.id, "SUBAP", subap, pixel_spacing_m=v.azimuth_spacing * k)
        done += 1
    click.echo(json.dumps({"preprocessed": done}))


@main.command()
@DATA_DIR_OPTION
@click.option("--id", "ids", multiple=True)
@click.option("--n-sub", default=4, show_default=True, type=int)
@click.option("--k", default=10, show_default=True, type=int)
@click.option("--d1", default=32, show_default=True, type=int)
@click.option("--d2", default=32, show_default=True, type=int)
@fail_cleanly
def doppler(data_dir, ids, n_sub, k, d1, d2):
    """Doppler centroid estimation: store decimated DOP_VIG / DOP_SUBAP fields."""
    from .doppler import doppler_on_subapertures, estimate_doppler
    from .encoder.stacks import crop_to_multiple
    from .preprocess import boxfilter_decimate, subaperture_decompose

    store = DataStore(data_dir, create=True)
    done = 0
    for v in _iter_store_vignettes(store, ids):
        ss = subaperture_decompose(v, n_sub=n_sub, k=k)
        full = estimate_doppler(v.data, v.prf, d1, d2, source_id=v.id)
        dop_vig = crop_to_multiple(boxfilter_decimate(full.data, k))
        fields = doppler_on_subapertures(ss, d1, d2, k)
        dop_subap = np.stack([crop_to_multiple(f.data) for f in fields])
        store.save_stack_grids(v.id, "DOP_VIG", dop_vig[None],
                               pixel_spacing_m=v.azimuth_spacing * k, prf=v.prf)
        store.save_stack_grids(v.id, "DOP_SUBAP", dop_subap,
                               pixel_spacing_m=v.azimuth_spacing * k, prf=v.prf)
        done += 1
    click.echo(json.dumps({"doppler_processed": done}))


@main.command()
@DATA_DIR_OPTION
@click.option("--rep", type=click.Choice(REPRESENTATION_TAGS), required=True)
@click.option("--epochs", default=10, show_default=True, type=int)
@click.option("--batch", default=16, show_default=True, type=int)
@click.option("--lr", default=1e-3, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--widths", default="8,8,16,32", show_default=True)
@fail_cleanly
def train(data_dir, rep, epochs, batch, lr, seed, widths):
    """Train the auto-encoder on all stored stacks of one representation."""
    store = DataStore(data_dir)
    stacks = [store.load_stack(vid, rep) for vid, _ in store.list_vignettes()
              if store.has_stack(vid, rep)]
    if not stacks:
        raise click.ClickException(f"no {rep} stacks in the store; run preprocess/doppler first")
    c, h, w = stacks[0].shape
    cfg = EncoderConfig(input_channels=c, input_height=h, input_width=w,
                        widths=tuple(int(x) for x in widths.split(",")), seed=seed)
    metrics_path = store.root / "checkpoints" / f"{rep}_metrics.jsonl"
    metrics_path.parent.mkdir(parents=True, exist_ok=True)
    model, history = train_autoencoder(stacks, cfg, epochs=epochs, batch_size=batch,
                                       lr=lr, metrics_path=metrics_path)
    save_checkpoint(model, store.checkpoint_path(rep))
    click.echo(json.dumps({
        "rep": rep,
        "trained_on": len(stacks),
        "final_val_loss": history[-1]["val_loss"] if history else None,
        "checkpoint": str(store.checkpoint_path(rep)),
    }))


@main.command()
@DATA_DIR_OPTION
@click.option("--rep", type=click.Choice(REPRESENTATION_TAGS), required=True)
@click.option("--enc", type=click.Choice(ENCODER_TAGS), required=True)
@fail_cleanly
def embed(data_dir, rep, enc):
    """Compute embeddings for every stored stack of one representation."""
    store = DataStore(data_dir)
    stacks = [store.load_stack(vid, rep) for vid, _ in store.list_vignettes()
              if store.has_stack(vid, rep)]
    if not stacks:
        raise click.ClickException(f"no {rep} stacks in the store")
    if enc == "BASELINE":
        embs = [baseline_descriptor(s) for s in stacks]
    else:
        if not store.has_checkpoint(rep):
            raise click.ClickException(f"no trained checkpoint for {rep}; run train first")
        embs = embed_stacks(store.load_model(rep), stacks)
    path = store.save_embeddings(embs)
    click.echo(json.dumps({"embedded": len(embs), "file": str(path)}))


@main.group()
def index():
    """Build or inspect retrieval indexes."""


@index.command("build")
@DATA_DIR_OPTION
@click.option("--rep", type=click.Choice(REPRESENTATION_TAGS), required=True)
@click.option("--enc", type=click.Choice(ENCODER_TAGS), required=True)
@fail_cleanly
def index_build(data_dir, rep, enc):
    store = DataStore(data_dir)
    embs = store.load_embeddings(rep, enc)
    metas = dict(store.list_vignettes())
    idx = build_index([(e, metas.get(e.id)) for e in embs])
    path = store.save_index(idx)
    click.echo(json.dumps({"entries": len(idx), "dimension": idx.dimension,
                           "file": str(path)}))


@index.command("inspect")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@fail_cleanly
def index_inspect(path):
    idx = load_index(path)
    click.echo(json.dumps({
        "entries": len(idx),
        "dimension": idx.dimension,
        "rep": idx.representation_tag,
        "enc": idx.encoder_tag,
        "first_ids": idx.ids[:5],
    }))


@main.command(name="query")
@DATA_DIR_OPTION
@click.option("--id", "query_id", default=None, help="Query by an indexed vignette id.")
@click.option("--file", "query_file", default=None,
              type=click.Path(exists=True, path_type=Path),
              help="Query by a SARV file (runs the full pipeline).")
@click.option("--k", default=5, show_default=True, type=click.IntRange(min=1))
@click.option("--rep", type=click.Choice(REPRESENTATION_TAGS), default="SUBAP",
              show_default=True)
@click.option("--enc", type=click.Choice(ENCODER_TAGS), default="BASELINE",
              show_default=True)
@fail_cleanly
def query_cmd(data_dir, query_id, query_file, k, rep, enc):
    """Top-k similar vignettes, one JSON line per result."""
    if (query_id is None) == (query_file is None):
        raise click.ClickException("exactly one of --id and --file is required")
    store = DataStore(data_dir)
    idx = load_index(store.index_path(rep, enc))
    exclude = None
    if query_id is not None:
        q_vec = idx.vector_for(query_id)
        exclude = query_id
    else:
        from .encoder.stacks import build_representation_stacks
        v = read_vignette(query_file)
        stack = build_representation_stacks(v)[rep]
        if enc == "BASELINE":
            q_vec = baseline_descriptor(stack).vector
        else:
            q_vec = embed_stack(store.load_model(rep), stack).vector
    for r in run_query(idx, q_vec, k, exclude_id=exclude):
        click.echo(json.dumps({"id": r.id, "similarity": round(r.similarity, 6),
                               "rank": r.rank, "class_label": r.meta.class_label}))


@main.group(name="eval")
def eval_group():
    """Evaluation harness."""


@eval_group.command("run")
@click.option("--config", "config_name", default="default", show_default=True,
              help="'default', 'smoke', or a path to an ExperimentConfig JSON file.")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", default=None, type=int, help="Override the master seed.")
@click.option("--quiet", is_flag=True, default=False)
@fail_cleanly
def eval_run(config_name, out_dir, seed, quiet):
    """Run the full representation-comparison experiment."""
    if config_name == "default":
        cfg = eval_mod.ExperimentConfig()
    elif config_name == "smoke":
        cfg = eval_mod.SMOKE_CONFIG
    else:
        cfg = eval_mod.ExperimentConfig.from_dict(json.loads(Path(config_name).read_text()))
    if seed is not None:
        cfg = eval_mod.ExperimentConfig.from_dict({**cfg.to_dict(), "master_seed": seed})
    report = eval_mod.run_experiment(cfg, out_dir, log=None if quiet else click.echo)
    click.echo(json.dumps({
        "report": str(Path(out_dir) / "report.json"),
        "overall_p_at_5": {m: report.results[m]["p_at_5"]["overall"]
                           for m in sorted(report.results)},
    }))


@main.command()
@DATA_DIR_OPTION
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8008, show_default=True, type=int)
@fail_cleanly
def serve(data_dir, host, port):
    """Serve the HTTP API (and the web UI when frontend/dist exists)."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
