"""Command line interface.

Subcommands: ``scene-gen`` (write scene descriptions), ``render`` (bundle
renderer), ``oracle`` (per-ray reference renderer), ``bench`` (benchmark
sweeps) and ``compare`` (two-image metrics).  Render flags mirror the
RenderConfig keys; a JSON config file can supply any of them, with explicit
flags taking precedence.  All validation failures exit non-zero.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .bench import run_benchmark
from .camera import load_rig
from .errors import SceneFormatError
from .fileio import read_png, write_pfm, write_png
from .metrics import psnr, ssim
from .renderer import RenderConfig, make_source_views, render_oracle, render_view
from .rigs import make_default_rig
from .scene import PRESETS, gen_scene, render_source_views


@click.group()
def main():
    """Depth-guided bundle sampling renderer."""


def _fail(message: str):
    raise click.ClickException(message)


def _load_scene(spec: str):
    try:
        if spec in PRESETS:
            return gen_scene(spec)
        return gen_scene(Path(spec))
    except (SceneFormatError, OSError) as exc:
        _fail(f"cannot load scene {spec!r}: {exc}")


def _build_rig(rig_path, width, height, n_sources, baseline, target_index):
    if rig_path is not None:
        try:
            cams = load_rig(rig_path)
        except (SceneFormatError, OSError) as exc:
            _fail(f"cannot load rig {rig_path!r}: {exc}")
        if not (0 <= target_index < len(cams)):
            _fail(f"target index {target_index} out of range for {len(cams)} cameras")
        sources = [c for i, c in enumerate(cams) if i != target_index]
        if not sources:
            _fail("rig needs at least one source camera besides the target")
        return cams[target_index], sources
    cams = make_default_rig(width, height, n_sources, baseline)
    return cams[0], cams[1:]


_CONFIG_FLAGS = [
    click.option("--bundle-size", "-K", type=int, default=None, help="Bundle size K."),
    click.option("--max-samples", type=int, default=None, help="Per-bundle sample cap."),
    click.option("--spacing-fraction", type=float, default=None,
                 help="Min sample spacing as a fraction of the depth extent."),
    click.option("--coarse-weight", type=float, default=None, help="Coarse map weight."),
    click.option("--fine-weight", type=float, default=None, help="Fine map weight."),
    click.option("--provider", type=str, default=None, help="Field provider name."),
    click.option("--sigma-peak", type=float, default=None, help="Provider peak density."),
    click.option("--direction-weight", type=float, default=None,
                 help="View-direction agreement weight."),
    click.option("--width-floor", type=float, default=None, help="Surface width floor."),
    click.option("--force-level-zero/--no-force-level-zero", default=None,
                 help="Force pyramid lookups to level 0."),
    click.option("--fixed-samples", type=int, default=None,
                 help="Force a uniform per-bundle sample count."),
    click.option("--workers", type=int, default=None, help="Worker thread budget."),
]


def _with_config_flags(fn):
    for flag in reversed(_CONFIG_FLAGS):
        fn = flag(fn)
    return fn


def _merge_config(config_path, **flags) -> RenderConfig:
    base = {}
    if config_path is not None:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            _fail(f"cannot load config {config_path!r}: {exc}")
    overrides = {k: v for k, v in flags.items() if v is not None}
    base.update(overrides)
    try:
        return RenderConfig.from_dict(base)
    except ValueError as exc:
        _fail(f"invalid render configuration: {exc}")


@main.command("scene-gen")
@click.option("--preset", "-p", type=str, default=None, help="Built-in preset name.")
@click.option("--seed", type=int, default=None, help="Override the texture seed.")
@click.option("--out", "-o", type=click.Path(dir_okay=False), default=None,
              help="Output scene JSON path.")
@click.option("--list-presets", is_flag=True, help="List built-in presets and exit.")
def scene_gen(preset, seed, out, list_presets):
    """Write a scene description file from a built-in preset."""
    if list_presets:
        for name in sorted(PRESETS):
            click.echo(name)
        return
    if preset is None or out is None:
        _fail("--preset and --out are required (or use --list-presets)")
    if preset not in PRESETS:
        _fail(f"unknown preset {preset!r}; available: {sorted(PRESETS)}")
    spec = json.loads(json.dumps(PRESETS[preset]))
    if seed is not None:
        spec["seed"] = seed
    gen_scene(spec)  # validate before writing
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(spec, fh, indent=2)
        fh.write("\n")
    click.echo(f"wrote {out}")


@main.command()
@click.option("--scene", "-s", required=True, help="Scene JSON path or preset name.")
@click.option("--rig", "rig_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Camera rig JSON; default: built-in parallel rig.")
@click.option("--target-index", type=int, default=0, show_default=True,
              help="Index of the target camera in the rig file.")
@click.option("--width", type=int, default=256, show_default=True)
@click.option("--height", type=int, default=256, show_default=True)
@click.option("--sources", "n_sources", type=int, default=3, show_default=True,
              help="Source count for the built-in rig.")
@click.option("--baseline", type=float, default=0.6, show_default=True,
              help="Source offset for the built-in rig.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file with RenderConfig keys.")
@_with_config_flags
@click.option("--out", "-o", type=click.Path(dir_okay=False), required=True,
              help="Output image PNG.")
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Output report JSON.")
@click.option("--coarse-out", type=click.Path(dir_okay=False), default=None)
@click.option("--fine-out", type=click.Path(dir_okay=False), default=None)
@click.option("--dump-sources", type=click.Path(file_okay=False), default=None,
              help="Directory for source images (PNG) and depth maps (PFM).")
def render(scene, rig_path, target_index, width, height, n_sources, baseline,
           config_path, out, report, coarse_out, fine_out, dump_sources, **flags):
    """Render the target view with depth-guided bundle sampling."""
    cfg = _merge_config(config_path, **flags)
    scn = _load_scene(scene)
    target, source_cams = _build_rig(rig_path, width, height, n_sources, baseline, target_index)
    views = make_source_views(scn, source_cams)
    if dump_sources is not None:
        dump_dir = Path(dump_sources)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for i, view in enumerate(views):
            write_png(dump_dir / f"source_{i}.png", view.image)
            write_pfm(dump_dir / f"source_{i}_depth.pfm", view.depth)
    result = render_view(scn, views, target, cfg)
    truth = render_source_views(scn, [target])[0][0]
    result.psnr = psnr(result.image, truth)
    write_png(out, result.image)
    if coarse_out is not None:
        write_png(coarse_out, result.coarse.clip(0.0, 1.0))
    if fine_out is not None:
        write_png(fine_out, result.fine.clip(0.0, 1.0))
    if report is not None:
        with open(report, "w", encoding="utf-8") as fh:
            json.dump(result.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    click.echo(
        f"rendered {out}: psnr={result.psnr:.2f} dB, "
        f"avg_samples_per_ray={result.avg_samples_per_ray:.4f}"
    )


@main.command()
@click.option("--scene", "-s", required=True, help="Scene JSON path or preset name.")
@click.option("--rig", "rig_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--target-index", type=int, default=0, show_default=True)
@click.option("--width", type=int, default=256, show_default=True)
@click.option("--height", type=int, default=256, show_default=True)
@click.option("--sources", "n_sources", type=int, default=3, show_default=True)
@click.option("--baseline", type=float, default=0.6, show_default=True)
@click.option("--samples", "-N", type=int, default=6, show_default=True,
              help="Samples per pixel.")
@click.option("--out", "-o", type=click.Path(dir_okay=False), required=True)
def oracle(scene, rig_path, target_index, width, height, n_sources, baseline, samples, out):
    """Render with the per-ray reference sampler."""
    scn = _load_scene(scene)
    target, source_cams = _build_rig(rig_path, width, height, n_sources, baseline, target_index)
    views = make_source_views(scn, source_cams)
    try:
        image = render_oracle(scn, views, target, samples)
    except ValueError as exc:
        _fail(str(exc))
    truth = render_source_views(scn, [target])[0][0]
    write_png(out, image)
    click.echo(f"rendered {out}: psnr={psnr(image, truth):.2f} dB")


@main.command()
@click.option("--config", "-c", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Benchmark config JSON.")
@click.option("--out-dir", "-o", type=click.Path(file_okay=False), required=True)
def bench(config, out_dir):
    """Run a benchmark sweep and write report.json / report.csv / PNGs."""
    try:
        report = run_benchmark(config, out_dir)
    except (ValueError, OSError) as exc:
        _fail(str(exc))
    click.echo(f"wrote {Path(out_dir) / 'report.json'} ({len(report['runs'])} runs)")


@main.command()
@click.argument("image_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("image_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Optional JSON output.")
def compare(image_a, image_b, report):
    """PSNR/SSIM between two PNG images."""
    a = read_png(image_a)
    b = read_png(image_b)
    try:
        result = {"psnr": psnr(a, b), "ssim": ssim(a, b)}
    except ValueError as exc:
        _fail(str(exc))
    if report is not None:
        with open(report, "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
            fh.write("\n")
    click.echo(f"psnr={result['psnr']:.4f} dB  ssim={result['ssim']:.6f}")


if __name__ == "__main__":
    sys.exit(main())
