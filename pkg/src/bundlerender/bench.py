"""Benchmark orchestration: render sweeps with JSON/CSV reports.

A benchmark config lists scenes, bundle sizes, sample caps and repetitions;
each run renders one target view, scores it against the exact ray trace and
records sampling statistics plus median-of-repetitions timings.  Runs
execute serially for stable timings; every non-timing output is
deterministic, so two identical invocations produce byte-identical images
and identical metric fields.
"""

from __future__ import annotations

import csv
import json
import statistics
import time
from pathlib import Path

from .fileio import write_png
from .metrics import psnr, ssim
from .renderer import RenderConfig, make_source_views, render_view
from .rigs import make_default_rig
from .scene import PRESETS, gen_scene, render_source_views
from .validation import check_positive_int

_TIMING_KEYS = ("per_stage_ms", "median_ms", "timings_ms")

DEFAULT_BENCH_CONFIG = {
    "scenes": ["two-planes", "flat-card", "textured-planes"],
    "resolution": [128, 128],
    "bundle_sizes": [1, 2, 4],
    "max_samples": [6],
    "repetitions": 3,
    "n_sources": 3,
    "baseline": 0.6,
    "coarse_weight": 0.0,
    "fine_weight": 1.0,
    "width_floor": "auto",
    "uniform_baseline": False,
    "workers": 1,
}


def evaluation_width_floor(scene, max_samples: int, spacing_fraction: float) -> float:
    """Surface width floor used by benchmark runs.

    Half the widest inter-sample spacing a clamped bundle can see
    ((extent + spacing) / max_samples / 2), so a surface anywhere inside a
    clamped depth range lies within one width of a sample.  The renderer's
    own default (half the minimum spacing) is much tighter and leaves
    wide-range bundles under-resolved.
    """
    spacing = spacing_fraction * scene.depth_extent
    return (scene.depth_extent + spacing) / (2.0 * max_samples)


def load_benchmark_config(source) -> dict:
    """Normalize and fully validate a benchmark config before any run."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            source = json.load(fh)
    if not isinstance(source, dict):
        raise ValueError("benchmark config must be a JSON object")
    cfg = dict(DEFAULT_BENCH_CONFIG)
    unknown = set(source) - set(cfg)
    if unknown:
        raise ValueError(f"unknown benchmark config keys: {sorted(unknown)}")
    cfg.update(source)
    if not cfg["scenes"]:
        raise ValueError("benchmark config lists no scenes")
    for name in cfg["scenes"]:
        if name not in PRESETS:
            raise ValueError(f"unknown scene preset {name!r}; available: {sorted(PRESETS)}")
    width, height = cfg["resolution"]
    check_positive_int(width, "resolution width")
    check_positive_int(height, "resolution height")
    for k in cfg["bundle_sizes"]:
        check_positive_int(k, "bundle size")
    for n in cfg["max_samples"]:
        check_positive_int(n, "max_samples")
    check_positive_int(cfg["repetitions"], "repetitions")
    wf = cfg["width_floor"]
    if wf is not None and wf != "auto" and not (isinstance(wf, (int, float)) and wf > 0):
        raise ValueError(f"width_floor must be null, 'auto' or a positive number, got {wf!r}")
    return cfg


def _run_once(scene, views, target, render_cfg):
    start = time.perf_counter()
    report = render_view(scene, views, target, render_cfg)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    return report, elapsed_ms


def run_benchmark(config, out_dir) -> dict:
    """Execute a benchmark config; write report.json, report.csv and PNGs.

    Returns the report dict.  Timing fields (``timings_ms``, ``median_ms``,
    ``per_stage_ms``) vary between invocations; everything else is
    deterministic.
    """
    cfg = load_benchmark_config(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width, height = cfg["resolution"]

    runs = []
    for scene_name in cfg["scenes"]:
        scene = gen_scene(scene_name)
        rig = make_default_rig(width, height, cfg["n_sources"], cfg["baseline"])
        target, source_cams = rig[0], rig[1:]
        views = make_source_views(scene, source_cams)
        truth = render_source_views(scene, [target])[0][0]
        write_png(out_dir / f"{scene_name}_truth.png", truth)

        for max_samples in cfg["max_samples"]:
            if cfg["width_floor"] == "auto":
                width_floor = evaluation_width_floor(scene, max_samples, 1.0 / 64.0)
            else:
                width_floor = cfg["width_floor"]
            modes = [("adaptive", None)]
            if cfg["uniform_baseline"]:
                modes.append(("uniform", max_samples))
            for bundle_size in cfg["bundle_sizes"]:
                for mode, fixed in modes:
                    render_cfg = RenderConfig(
                        bundle_size=bundle_size,
                        max_samples=max_samples,
                        coarse_weight=cfg["coarse_weight"],
                        fine_weight=cfg["fine_weight"],
                        width_floor=width_floor,
                        fixed_samples=fixed,
                        workers=cfg["workers"],
                    )
                    timings = []
                    report = None
                    for _ in range(cfg["repetitions"]):
                        report, elapsed = _run_once(scene, views, target, render_cfg)
                        timings.append(elapsed)
                    stem = f"{scene_name}_K{bundle_size}_N{max_samples}_{mode}"
                    write_png(out_dir / f"{stem}.png", report.image)
                    runs.append(
                        {
                            "scene": scene_name,
                            "K": bundle_size,
                            "N_max": max_samples,
                            "mode": mode,
                            "psnr": psnr(report.image, truth),
                            "ssim": ssim(report.image, truth),
                            "avg_samples_per_ray": report.avg_samples_per_ray,
                            "total_samples": report.total_samples,
                            "nc_histogram": [int(n) for n in report.sample_histogram],
                            "per_stage_ms": {k: float(v) for k, v in report.stage_ms.items()},
                            "median_ms": statistics.median(timings),
                            "timings_ms": timings,
                        }
                    )

    report = {"config": cfg, "runs": runs}
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_csv(out_dir / "report.csv", runs)
    return report


def _write_csv(path, runs) -> None:
    columns = [
        "scene", "K", "N_max", "mode", "psnr", "ssim",
        "avg_samples_per_ray", "total_samples", "median_ms",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for run in runs:
            writer.writerow([run[c] for c in columns])


def strip_timings(report: dict) -> dict:
    """Copy of a benchmark report without its timing fields (for determinism
    comparisons)."""
    out = {"config": report["config"], "runs": []}
    for run in report["runs"]:
        out["runs"].append({k: v for k, v in run.items() if k not in _TIMING_KEYS})
    return out
