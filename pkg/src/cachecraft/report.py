"""Bundled rate-memory studies: CSV plus rendered figure per study.

Each study fixes a catalog and a set of methods, sweeps the memory factor,
writes the points as CSV, and renders the curves to PNG next to it.  The CLI
`report` subcommand is the entry point; `curve` stays data-only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .evaluator import sweep_curve
from .model import CacheClasses, SystemConfig, graded_catalog_config, uniform_config, zipf_popularities

DEFAULT_GRID = tuple(float(m) for m in range(7))


def _zipf_uniform_length(num_users: int = 4, num_files: int = 6) -> SystemConfig:
    return SystemConfig(
        num_users=num_users,
        num_files=num_files,
        file_lengths=(1.0,) * num_files,
        popularities=zipf_popularities(num_files, 0.56),
        cache_sizes=(1.0,) * num_users,
    )


def _graded_uniform_pop(num_users: int = 4) -> SystemConfig:
    cfg = graded_catalog_config(num_users=num_users, cache_size=1.0)
    return SystemConfig(
        num_users=cfg.num_users,
        num_files=cfg.num_files,
        file_lengths=cfg.file_lengths,
        popularities=(1.0 / cfg.num_files,) * cfg.num_files,
        cache_sizes=cfg.cache_sizes,
    )


def _two_tier_uniform(num_users: int = 4, num_small: int = 2) -> SystemConfig:
    classes = CacheClasses(num_small, 0.8, 1.2)
    cfg = uniform_config(num_users, 6, 0.0)
    return SystemConfig(
        num_users=num_users,
        num_files=cfg.num_files,
        file_lengths=cfg.file_lengths,
        popularities=cfg.popularities,
        cache_sizes=(0.8,) * num_small + (1.2,) * (num_users - num_small),
        classes=classes,
    )


def _graded_two_tier(num_users: int = 4, num_small: int = 2) -> SystemConfig:
    classes = CacheClasses(num_small, 0.8, 1.2)
    return graded_catalog_config(num_users=num_users, classes=classes)


@dataclass(frozen=True)
class Study:
    name: str
    title: str
    template: SystemConfig
    methods: tuple
    percent_of: str | None = None  # plot percent increase over this method


STUDIES = {
    "popularity-only": Study(
        name="popularity-only",
        title="Zipf(0.56) popularity, uniform lengths and caches",
        template=_zipf_uniform_length(),
        methods=("general", "pop-first", "baseline-popularity"),
    ),
    "length-only": Study(
        name="length-only",
        title="Graded lengths, uniform popularity and caches",
        template=_graded_uniform_pop(),
        methods=("general", "length-first", "baseline-length"),
    ),
    "length-popularity": Study(
        name="length-popularity",
        title="Graded lengths with Zipf(0.56) popularity, uniform caches",
        template=graded_catalog_config(),
        methods=("general", "length-first", "baseline-length"),
    ),
    "two-tier": Study(
        name="two-tier",
        title="Uniform files, cache classes 0.8M / 1.2M",
        template=_two_tier_uniform(),
        methods=("general", "two-tier", "baseline-classes"),
    ),
    "full-heterogeneity": Study(
        name="full-heterogeneity",
        title="Graded catalog with cache classes 0.8M / 1.2M",
        template=_graded_two_tier(),
        methods=("general", "full-het", "baseline-classes"),
    ),
    "baseline-percent": Study(
        name="baseline-percent",
        title="Random caching rate increase over optimized schemes (%)",
        template=_graded_two_tier(),
        methods=("general", "full-het", "baseline-classes"),
        percent_of="baseline-classes",
    ),
}


def write_points_csv(points, path, percent_base: dict | None = None) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        if percent_base is None:
            writer.writerow(["M", "method", "expected_rate"])
            for pt in points:
                writer.writerow([f"{pt.memory:.6f}", pt.method, f"{pt.expected_rate:.6f}"])
        else:
            writer.writerow(["M", "method", "expected_rate", "pct_increase_of_baseline"])
            for pt in points:
                base = percent_base[pt.memory]
                pct = "" if pt.expected_rate == 0 else f"{100.0 * (base - pt.expected_rate) / pt.expected_rate:.6f}"
                writer.writerow([f"{pt.memory:.6f}", pt.method, f"{pt.expected_rate:.6f}", pct])


def run_study(name: str, out_dir, grid=DEFAULT_GRID, solver=None) -> dict:
    """Run one bundled study; returns the paths written."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    study = STUDIES[name]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = sweep_curve(study.template, grid, study.methods, solver=solver)
    by_method: dict = {}
    for pt in points:
        by_method.setdefault(pt.method, []).append(pt)

    csv_path = out_dir / f"{name}.csv"
    png_path = out_dir / f"{name}.png"

    fig, ax = plt.subplots(figsize=(7.2, 4.8))
    if study.percent_of is None:
        write_points_csv(points, csv_path)
        for method, pts in by_method.items():
            ax.plot(
                [p.memory for p in pts],
                [p.expected_rate for p in pts],
                marker="o",
                label=method,
            )
        ax.set_ylabel("expected delivery rate (file-length units)")
    else:
        base = {p.memory: p.expected_rate for p in by_method[study.percent_of]}
        write_points_csv(
            [p for p in points if p.method != study.percent_of], csv_path, percent_base=base
        )
        for method, pts in by_method.items():
            if method == study.percent_of:
                continue
            xs = [p.memory for p in pts if p.expected_rate > 0]
            ys = [
                100.0 * (base[p.memory] - p.expected_rate) / p.expected_rate
                for p in pts
                if p.expected_rate > 0
            ]
            ax.plot(xs, ys, marker="o", label=f"baseline vs {method}")
        ax.set_ylabel("rate increase of random caching (%)")
    ax.set_xlabel("memory factor M")
    ax.set_title(study.title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return {"csv": str(csv_path), "png": str(png_path)}
