"""Batch benchmark: every method on every image, four metrics plus timings."""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import image, metrics
from .pipeline import EnhanceConfig, enhance_detailed

log = logging.getLogger(__name__)

CSV_COLUMNS = ("method", "image", "de", "eme", "pd", "pcqi", "total_ms", "smooth_ms")
MEAN_ID = "__mean__"


@dataclass(frozen=True)
class BenchRow:
    method: str
    image: str
    de: float = float("nan")
    eme: float = float("nan")
    pd: float = float("nan")
    pcqi: float = float("nan")
    total_ms: float = float("nan")
    smooth_ms: float = float("nan")
    error: str | None = None


@dataclass
class BenchReport:
    rows: list[BenchRow]
    methods: list[str]

    def aggregates(self) -> list[BenchRow]:
        """Per-method arithmetic means over the rows without errors."""
        out = []
        for method in self.methods:
            good = [r for r in self.rows if r.method == method and r.error is None]
            if not good:
                continue
            means = {
                key: float(np.mean([getattr(r, key) for r in good]))
                for key in ("de", "eme", "pd", "pcqi", "total_ms", "smooth_ms")
            }
            out.append(BenchRow(method=method, image=MEAN_ID, **means))
        return out

    def mean(self, method: str) -> BenchRow:
        for row in self.aggregates():
            if row.method == method:
                return row
        raise KeyError(method)

    def to_csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows + self.aggregates():
            writer.writerow(_csv_fields(row, timing))
        return buf.getvalue()

    def render_table(self, timing: bool = True) -> str:
        """Aligned text table of per-method means."""
        head = ["Method", "DE", "EME", "PD", "PCQI"] + (["ms", "smooth ms"] if timing else [])
        body = []
        for row in self.aggregates():
            cells = [row.method, f"{row.de:.2f}", f"{row.eme:.1f}", f"{row.pd:.1f}", f"{row.pcqi:.2f}"]
            if timing:
                cells += [f"{row.total_ms:.0f}", f"{row.smooth_ms:.0f}"]
            body.append(cells)
        widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
        fmt = lambda cells: "  ".join(  # noqa: E731
            c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths))
        )
        rule = "-" * len(fmt(head))
        lines = [fmt(head), rule] + [fmt(c) for c in body]
        skipped = sorted({r.image for r in self.rows if r.error})
        if skipped:
            lines.append(f"skipped (unreadable): {', '.join(skipped)}")
        return "\n".join(lines) + "\n"


def _csv_fields(row: BenchRow, timing: bool) -> list[str]:
    if row.error is not None:
        return [row.method, row.image] + [""] * 6
    vals = [f"{row.de:.6f}", f"{row.eme:.6f}", f"{row.pd:.6f}", f"{row.pcqi:.6f}"]
    vals += [f"{row.total_ms:.3f}", f"{row.smooth_ms:.3f}"] if timing else ["", ""]
    return [row.method, row.image] + vals


def list_images(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    return sorted((p for p in directory.iterdir() if p.is_file() and image.is_image_file(p)), key=lambda p: p.name)


def _bench_one(path: Path, methods: list[str], cfg: EnhanceConfig) -> list[BenchRow]:
    name = path.name
    try:
        c_in = image.load_image(path)
    except (OSError, ValueError) as exc:
        log.warning("skipping %s: %s", name, exc)
        return [BenchRow(method=m, image=name, error=str(exc)) for m in methods]
    a_in = image.lightness_of(c_in)
    rows = []
    for method in methods:
        res = enhance_detailed(c_in, replace(cfg, method=method))
        s = metrics.quality_scores(a_in, image.lightness_of(res.image))
        rows.append(
            BenchRow(
                method=method, image=name, de=s.de, eme=s.eme, pd=s.pd, pcqi=s.pcqi,
                total_ms=res.total_seconds * 1e3, smooth_ms=res.smooth_seconds * 1e3,
            )
        )
    return rows


def _warm_up() -> None:
    # load the compiled solver kernels so the first timed image doesn't pay for it
    enhance_detailed(np.full((12, 12, 3), 0.5) * np.linspace(0.2, 1.0, 12)[:, None, None])


def bench_dataset(directory, methods, cfg: EnhanceConfig | None = None, jobs: int = 1) -> BenchReport:
    """Run ``methods`` over every PNG/PPM in ``directory``.

    Rows are ordered by file name, then by ``methods`` order, regardless
    of ``jobs``.
    """
    cfg = cfg or EnhanceConfig()
    methods = list(methods)
    for m in methods:
        EnhanceConfig(method=m)  # validates the name
    paths = list_images(directory)
    if not paths:
        raise FileNotFoundError(f"no PNG/PPM images in {directory}")
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_warm_up) as pool:
            per_image = list(pool.map(_bench_one, paths, [methods] * len(paths), [cfg] * len(paths)))
    else:
        _warm_up()
        per_image = [_bench_one(p, methods, cfg) for p in paths]
    rows = [row for chunk in per_image for row in chunk]
    if all(r.error for r in rows):
        raise FileNotFoundError(f"no readable images in {directory}")
    return BenchReport(rows=rows, methods=methods)
