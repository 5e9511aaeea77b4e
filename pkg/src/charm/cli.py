"""Command-line interface.

Configuration comes from the JSON file named by --config or the
CHARM_CONFIG environment variable; every flag overrides the config value.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import click

from .attention import AttentionAdjustment
from .catalog import load_corpus, mine, save_catalog
from .diffusion import GeneratedImage
from .engine import CharmEngine, load_engine_config
from .errors import CharmError
from .inpaint import InpaintRequest, Mask, inpaint, rasterize_strokes, strokes_from_json
from .metrics import ssim
from .text import TextEncoder, load_stopwords


def _engine(ctx) -> CharmEngine:
    return CharmEngine(ctx.obj)


def _adjustment(spec: str | None) -> AttentionAdjustment:
    if not spec:
        return AttentionAdjustment()
    try:
        return AttentionAdjustment.from_json(json.loads(spec))
    except (ValueError, TypeError, AttributeError) as exc:
        raise click.BadParameter(
            f'expected {{"entries": {{"<index>": <gamma>}}}}, got {spec!r} ({exc})'
        )


@click.group()
@click.option(
    "--config",
    "config_path",
    envvar="CHARM_CONFIG",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON engine config (defaults from CHARM_CONFIG).",
)
@click.pass_context
def main(ctx, config_path):
    """Interactive text-to-image refinement engine."""
    try:
        ctx.obj = load_engine_config(config_path)
    except CharmError as exc:
        raise click.ClickException(str(exc))


def run(command):
    """Translate engine errors into clean CLI failures."""

    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except CharmError as exc:
            raise click.ClickException(f"{exc.name}: {exc}")

    wrapper.__name__ = command.__name__
    wrapper.__doc__ = command.__doc__
    return wrapper


@main.command("mine")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--min-freq", default=2, show_default=True)
@click.option("--top-k", default=500, show_default=True)
@click.option("--stopwords", "stopwords_path", default=None, type=click.Path(exists=True))
@click.pass_context
@run
def mine_cmd(ctx, corpus_path, out_path, min_freq, top_k, stopwords_path):
    """Mine popular modifiers from a prompt corpus into a catalog."""
    encoder = TextEncoder(seed=ctx.obj.encoder_seed)
    stopwords = load_stopwords(stopwords_path or ctx.obj.stopwords_path)
    catalog = mine(
        load_corpus(corpus_path),
        encoder,
        stopwords=stopwords,
        min_freq=min_freq,
        top_k=top_k,
        corpus_ref=str(corpus_path),
    )
    save_catalog(catalog, out_path)
    click.echo(f"mined {len(catalog)} modifiers -> {out_path}")


@main.command("generate")
@click.option("--prompt", required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--adjust", default=None, help='JSON adjustment, e.g. {"entries":{"2":0.5}}')
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--trace/--no-trace", default=False, show_default=True)
@click.option("--heatmaps-out", default=None, type=click.Path())
@click.pass_context
@run
def generate_cmd(ctx, prompt, seed, adjust, out_path, trace, heatmaps_out):
    """Generate an image for a prompt."""
    engine = _engine(ctx)
    image, explanation = engine.render(prompt, seed, _adjustment(adjust), trace=trace)
    Path(out_path).write_bytes(image.to_png())
    click.echo(f"wrote {out_path}")
    if heatmaps_out and explanation:
        Path(heatmaps_out).write_bytes(explanation.heatmaps_chex())
        click.echo(f"wrote {heatmaps_out}")


@main.command("explain")
@click.option("--prompt", required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--adjust", default=None)
@click.option("--heatmaps-out", default=None, type=click.Path())
@click.pass_context
@run
def explain_cmd(ctx, prompt, seed, adjust, heatmaps_out):
    """Print per-token saliencies and similarity sets for a generation."""
    engine = _engine(ctx)
    _, explanation = engine.render(prompt, seed, _adjustment(adjust), trace=True)
    if heatmaps_out:
        Path(heatmaps_out).write_bytes(explanation.heatmaps_chex())
    click.echo(json.dumps(explanation.to_json(), indent=2))


@main.command("inpaint")
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--strokes", "strokes_path", default=None, type=click.Path(exists=True))
@click.option("--mask", "mask_path", default=None, type=click.Path(exists=True))
@click.option("--prompt", default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
@run
def inpaint_cmd(ctx, image_path, strokes_path, mask_path, prompt, seed, out_path):
    """Regenerate the masked region of an image."""
    if (strokes_path is None) == (mask_path is None):
        raise click.UsageError("provide exactly one of --strokes or --mask")
    engine = _engine(ctx)
    image = GeneratedImage.from_png(Path(image_path).read_bytes(), seed=seed)
    if mask_path:
        mask = Mask.from_png(Path(mask_path).read_bytes())
    else:
        strokes = strokes_from_json(Path(strokes_path).read_text("utf-8"))
        mask = rasterize_strokes(strokes, image.height, image.width)
    request = InpaintRequest(
        image=image,
        mask=mask,
        inpaint_prompt=prompt,
        seed=seed,
        strength=ctx.obj.inpaint_strength,
    )
    result = inpaint(engine.model, engine.encoder, request)
    Path(out_path).write_bytes(result.to_png())
    click.echo(f"wrote {out_path}")


@main.command("refine")
@click.option("--prompt", required=True)
@click.option("--catalog", "catalog_path", default=None, type=click.Path(exists=True))
@click.option("-k", "--k-append", default=None, type=int)
@click.pass_context
@run
def refine_cmd(ctx, prompt, catalog_path, k_append):
    """Suggest a refined prompt with appended style modifiers."""
    config = ctx.obj
    if catalog_path:
        config = replace(config, catalog_path=catalog_path)
    if k_append is not None:
        config = replace(config, refiner=replace(config.refiner, k_append=k_append))
    engine = CharmEngine(config)
    suggestion = engine.refine_prompt(prompt)
    click.echo(
        json.dumps(
            {
                "refined": suggestion.refined,
                "appended": list(suggestion.appended),
                "source": suggestion.source,
            },
            indent=2,
        )
    )


@main.command("ssim")
@click.argument("image_a", type=click.Path(exists=True))
@click.argument("image_b", type=click.Path(exists=True))
@run
def ssim_cmd(image_a, image_b):
    """Print the structural similarity of two PNGs with 4 decimals."""
    a = GeneratedImage.from_png(Path(image_a).read_bytes())
    b = GeneratedImage.from_png(Path(image_b).read_bytes())
    click.echo(f"{ssim(a, b):.4f}")


@main.command("serve")
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.option("--session-dir", default=None, type=click.Path())
@click.option("--catalog", "catalog_path", default=None, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", default=None, type=click.Path(exists=True))
@click.pass_context
@run
def serve_cmd(ctx, host, port, session_dir, catalog_path, corpus_path):
    """Run the HTTP service."""
    from .service import serve

    config = ctx.obj
    overrides = {
        "host": host,
        "port": port,
        "session_dir": session_dir,
        "catalog_path": catalog_path,
        "corpus_path": corpus_path,
    }
    config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    click.echo(f"serving on http://{config.host}:{config.port}")
    serve(config)


if __name__ == "__main__":
    main()
