"""Regenerate the bundled 12-seed build fixture under tests/fixtures/build_mini/.

Deterministic: every byte comes from fixed seeds, so reruns reproduce the
committed tree. Run with --goldens after verifying a build to refresh the
golden manifest and drop log from a fresh cmd_build run.
"""

from __future__ import annotations

import argparse
import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

FIXTURE_DIR = Path(__file__).parent / "build_mini"

sys.path.insert(0, str(Path(__file__).parents[1]))

from conftest import make_textured_rgb  # noqa: E402

from triview import geodesy as gd  # noqa: E402
from triview import pipeline as pl  # noqa: E402
from triview import raster as rs  # noqa: E402
from triview.geodesy import GeoPoint  # noqa: E402
from triview.raster import RgbImage  # noqa: E402

LAT0, LON0 = 48.852, 2.35
M_PER_PX = 0.5
WIDTH, HEIGHT = 480, 360
COS0 = math.cos(math.radians(LAT0))

# Panorama spots in meters east/south of the NW corner. The last one sits
# outside the raster's 240x180 m coverage and must never be harvested.
PANOS_M = [(120, 90), (60, 45), (196, 60), (66, 132), (151, 103)]
OUTSIDE_M = (250, 130)
NO_SATELLITE_M = (66, 132)  # forces one fetch drop


def transform() -> gd.AffineGeoTransform:
    return gd.AffineGeoTransform(
        LON0, M_PER_PX / (gd.METERS_PER_DEGREE * COS0), 0.0, LAT0, 0.0, -M_PER_PX / gd.METERS_PER_DEGREE
    )


def meters_to_geo(x_m: float, y_m: float) -> GeoPoint:
    return GeoPoint(
        LAT0 - y_m / gd.METERS_PER_DEGREE, LON0 + x_m / (gd.METERS_PER_DEGREE * COS0)
    )


def quantized(p: GeoPoint) -> GeoPoint:
    lat_s, lon_s = pl.coord_key(p).split("_")
    return GeoPoint(float(lat_s), float(lon_s))


def tiny_png(seed: int, size: int) -> bytes:
    rng = np.random.default_rng(seed)
    return rs.encode_png(RgbImage(rng.integers(0, 256, size=(size, size, 3)).astype(np.uint8)))


def build_fixture() -> None:
    if FIXTURE_DIR.exists():
        shutil.rmtree(FIXTURE_DIR)
    provider = FIXTURE_DIR / "provider"
    (provider / "street").mkdir(parents=True)
    (provider / "satellite").mkdir()
    (provider / "description").mkdir()

    raster_img = make_textured_rgb(WIDTH, HEIGHT, seed=11)
    (FIXTURE_DIR / "raster.png").write_bytes(rs.encode_png(raster_img))

    t = transform()
    (FIXTURE_DIR / "raster.json").write_text(
        json.dumps(
            {
                "raster_id": "mini",
                "transform": [
                    t.origin_x,
                    t.pixel_width,
                    t.row_rotation,
                    t.origin_y,
                    t.col_rotation,
                    t.pixel_height,
                ],
                "country": "FR",
                "split": "train",
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    thresholds = pl.gates.GateThresholds()
    (FIXTURE_DIR / "thresholds.txt").write_text(
        "".join(f"{key}={value:g}\n" for key, value in thresholds.to_dict().items()),
        encoding="utf-8",
    )

    spots = PANOS_M + [OUTSIDE_M]
    for i, (x, y) in enumerate(spots):
        key = pl.coord_key(meters_to_geo(x, y))
        (provider / "street" / f"{key}.png").write_bytes(tiny_png(seed=300 + i, size=48))
        if (x, y) != NO_SATELLITE_M and (x, y) != OUTSIDE_M:
            (provider / "satellite" / f"{key}.png").write_bytes(tiny_png(seed=400 + i, size=64))

    descriptions = {
        (151, 103): "tree-lined blocks around a small plaza",
        (60, 45): "low terraces along a straight canal",
    }
    for (x, y), text in descriptions.items():
        key = pl.coord_key(meters_to_geo(x, y))
        (provider / "description" / f"{key}.txt").write_text(text + "\n", encoding="utf-8")

    seeds = pl.generate_seeds("mini", t, WIDTH, HEIGHT, window=80, stride=120)
    assert len(seeds) == 12, len(seeds)
    pl.write_seeds(FIXTURE_DIR / "seeds.jsonl", seeds)
    print(f"fixture written to {FIXTURE_DIR} ({len(seeds)} seeds)")


def refresh_goldens() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "out"
        cmd = [
            sys.executable,
            "-m",
            "triview.cli",
            "build",
            "--seeds",
            str(FIXTURE_DIR / "seeds.jsonl"),
            "--input",
            str(FIXTURE_DIR / "raster.png"),
            "--transform",
            str(FIXTURE_DIR / "raster.json"),
            "--provider-root",
            str(FIXTURE_DIR / "provider"),
            "--thresholds",
            str(FIXTURE_DIR / "thresholds.txt"),
            "--out",
            str(out),
        ]
        subprocess.run(cmd, check=True)
        shutil.copy(out / "manifest.jsonl", FIXTURE_DIR / "golden_manifest.jsonl")
        shutil.copy(out / "drops.jsonl", FIXTURE_DIR / "golden_drops.jsonl")
    print("goldens refreshed")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--goldens", action="store_true", help="also refresh the golden outputs")
    args = parser.parse_args()
    build_fixture()
    if args.goldens:
        refresh_goldens()
