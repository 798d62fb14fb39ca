"""Command-line front end.

Every pipeline mode is exposed as a subcommand with bit-exact, scriptable
behaviour: the same inputs, flags and --seed always produce byte-identical
output trees and manifests. Geometry flags use WIDTHxHEIGHT order.
"""

from __future__ import annotations

import json
import re
import sys
from pathlib import Path

import click

from reidaug import __version__
from reidaug.codecs import ImageDecodeError, decode_image, encode_image
from reidaug.defense import DefenseConfig
from reidaug.imagecore import gray_to_rgb, to_grayscale
from reidaug.pipeline import compute_stats, process_batch
from reidaug.transforms import AugmentConfig, SketchParams, sketch as sketch_image

PROBABILITY = click.FloatRange(0.0, 1.0)
SEED = click.IntRange(0, 2**64 - 1)


class GeometryType(click.ParamType):
    """Accepts WIDTHxHEIGHT, e.g. 110x50."""

    name = "WxH"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        match = re.fullmatch(r"(\d+)[xX](\d+)", str(value).strip())
        if match is None:
            self.fail(f"{value!r} is not WIDTHxHEIGHT geometry (e.g. 110x50)", param, ctx)
        width, height = int(match.group(1)), int(match.group(2))
        if width < 1 or height < 1:
            self.fail(f"geometry sides must be at least 1, got {value!r}", param, ctx)
        return width, height


GEOMETRY = GeometryType()


def _batch_options(fn):
    options = [
        click.option("--input", "input_dir", required=True,
                     type=click.Path(exists=True, file_okay=False, path_type=Path),
                     help="Input directory tree of PNG/JPEG images."),
        click.option("--output", "output_dir", required=True,
                     type=click.Path(file_okay=False, path_type=Path),
                     help="Output directory; mirrors the input tree as PNG."),
        click.option("--seed", type=SEED, default=0, show_default=True,
                     help="Master seed; per-image streams derive from (seed, ordinal)."),
        click.option("--workers", type=click.IntRange(1), default=1, show_default=True,
                     help="Parallel workers; results are identical for any count."),
        click.option("--manifest", "manifest_path",
                     type=click.Path(dir_okay=False, path_type=Path), default=None,
                     help="Manifest path [default: OUTPUT/manifest.ndjson]."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _progress_callback():
    if not sys.stderr.isatty():
        return None

    def cb(done: int, total: int) -> None:
        end = "\n" if done == total else ""
        print(f"\r{done}/{total}", end=end, file=sys.stderr, flush=True)

    return cb


def _run_batch(input_dir, output_dir, mode, augment, defense, seed, workers, manifest_path):
    result = process_batch(
        input_dir,
        output_dir,
        mode,
        augment=augment,
        defense=defense,
        master_seed=seed,
        workers=workers,
        manifest_path=manifest_path,
        progress=_progress_callback(),
    )
    click.echo(
        f"{mode}: wrote {result.written} image(s), skipped {result.skipped}; "
        f"manifest: {result.manifest_path}"
    )


@click.group()
@click.version_option(__version__, prog_name="reidaug")
def main():
    """Deterministic grayscale-patch augmentation and multi-modal defense preprocessing."""


@main.command()
@click.option("--mode", type=click.Choice(["ggpr", "lgpr", "both"]), default="both",
              show_default=True, help="Global gate, local patch, or both combined.")
@click.option("--p-g", type=PROBABILITY, default=0.05, show_default=True,
              help="Probability of converting a whole image to grayscale.")
@click.option("--p-l", type=PROBABILITY, default=0.4, show_default=True,
              help="Probability of replacing a random patch with its grayscale.")
@click.option("--area-min", type=float, default=0.02, show_default=True,
              help="Minimum patch area as a fraction of the image.")
@click.option("--area-max", type=float, default=0.4, show_default=True,
              help="Maximum patch area as a fraction of the image.")
@click.option("--aspect-min", type=float, default=0.3, show_default=True,
              help="Minimum patch height/width ratio.")
@click.option("--aspect-max", type=float, default=3.33, show_default=True,
              help="Maximum patch height/width ratio.")
@click.option("--max-attempts", type=click.IntRange(1), default=100, show_default=True,
              help="Rectangle sampling attempts before giving up on an image.")
@_batch_options
def augment(mode, p_g, p_l, area_min, area_max, aspect_min, aspect_max, max_attempts,
            input_dir, output_dir, seed, workers, manifest_path):
    """Grayscale-patch training augmentation over a directory tree."""
    try:
        cfg = AugmentConfig(
            lgpr_prob=p_l,
            ggpr_prob=p_g,
            area_min=area_min,
            area_max=area_max,
            aspect_min=aspect_min,
            aspect_max=aspect_max,
            max_attempts=max_attempts,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    pipeline_mode = "combined" if mode == "both" else mode
    _run_batch(input_dir, output_dir, pipeline_mode, cfg, None, seed, workers, manifest_path)


@main.command()
@click.option("--p-gray", type=PROBABILITY, default=0.1, show_default=True,
              help="Share of images converted to pure grayscale.")
@click.option("--p-gray-fuse", type=PROBABILITY, default=0.05, show_default=True,
              help="Share of images with grayscale fused into 1-2 channels.")
@click.option("--p-sketch-fuse", type=PROBABILITY, default=0.05, show_default=True,
              help="Share of images with a sketch fused into 1-2 channels.")
@click.option("--two-channel-prob", type=PROBABILITY, default=0.5, show_default=True,
              help="Probability a fusion overwrites 2 channels instead of 1.")
@click.option("--sketch-op", type=click.Choice(["dodge", "sobel"]), default="dodge",
              show_default=True, help="Sketch operator used for sketch fusion.")
@click.option("--sketch-sigma", type=float, default=3.0, show_default=True,
              help="Blur width of the dodge sketch operator.")
@_batch_options
def defend(p_gray, p_gray_fuse, p_sketch_fuse, two_channel_prob, sketch_op, sketch_sigma,
           input_dir, output_dir, seed, workers, manifest_path):
    """Multi-modal training defense: grayscale / fusion / sketch partition."""
    try:
        cfg = DefenseConfig(
            gray_prob=p_gray,
            gray_fuse_prob=p_gray_fuse,
            sketch_fuse_prob=p_sketch_fuse,
            two_channel_prob=two_channel_prob,
            sketch=SketchParams(operator=sketch_op, sigma=sketch_sigma),
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _run_batch(input_dir, output_dir, "mmd", None, cfg, seed, workers, manifest_path)


@main.command("resize-defense")
@click.option("--down", type=GEOMETRY, default=(110, 50), show_default="110x50",
              help="Intermediate WIDTHxHEIGHT the image is squeezed through.")
@click.option("--up", type=GEOMETRY, default=(384, 128), show_default="384x128",
              help="Final WIDTHxHEIGHT fed to the model.")
@_batch_options
def resize_defense_cmd(down, up, input_dir, output_dir, seed, workers, manifest_path):
    """Inference-time defense: downscale then upscale every image."""
    try:
        cfg = DefenseConfig(down_w=down[0], down_h=down[1], up_w=up[0], up_h=up[1])
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _run_batch(input_dir, output_dir, "resize_defense", None, cfg, seed, workers, manifest_path)


@main.command()
@click.option("--op", type=click.Choice(["gray", "sketch"]), required=True,
              help="Conversion to apply.")
@click.option("--input", "input_file", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Source image (PNG or JPEG).")
@click.option("--output", "output_file", required=True,
              type=click.Path(dir_okay=False, path_type=Path),
              help="Destination PNG.")
@click.option("--sketch-op", type=click.Choice(["dodge", "sobel"]), default="dodge",
              show_default=True, help="Sketch operator (op=sketch only).")
@click.option("--sketch-sigma", type=float, default=3.0, show_default=True,
              help="Dodge blur width (op=sketch only).")
def convert(op, input_file, output_file, sketch_op, sketch_sigma):
    """Convert a single image to grayscale or sketch."""
    try:
        params = SketchParams(operator=sketch_op, sigma=sketch_sigma)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        img = decode_image(input_file.read_bytes())
    except (ImageDecodeError, OSError) as exc:
        raise click.ClickException(f"cannot read {input_file}: {exc}")
    if img.channels == 1:
        img = gray_to_rgb(img)
    result = to_grayscale(img) if op == "gray" else sketch_image(img, params)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    output_file.write_bytes(encode_image(result))
    click.echo(f"wrote {output_file}")


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Manifest produced by a batch run.")
def stats(manifest_path):
    """Recompute and print run statistics from a manifest, as JSON."""
    try:
        run_stats = compute_stats(manifest_path)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(run_stats.to_dict(), indent=2))


if __name__ == "__main__":
    main()
