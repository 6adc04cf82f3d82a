"""Four-stage dataset construction: seeding, harvesting with inverse crops, cleanup, alignment.

The pipeline walks a georeferenced source raster with a sliding window,
finds the nearest panorama to each window center through a provider, crops
the raster around each accepted panorama at several metric scales, screens
and gates the crops, removes coverage duplicates, and finally assembles one
tri-view instance (drone crop, street image, satellite tile plus text) per
retained candidate.

Everything is deterministic given the inputs: candidates are processed in
instance-id order, parallel stages preserve order, and the manifest and drop
log serialize with fixed key order so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

from . import gates, raster
from .errors import OutOfCoverage, ProviderError
from .gates import GateThresholds
from .geodesy import (
    AffineGeoTransform,
    GeoPoint,
    GroundFootprint,
    bbox_to_footprint,
    contains,
    footprint_bbox,
    geo_to_pixel,
    haversine_distance,
    overlap_ratio,
    pixel_to_geo,
)
from .raster import GrayImage, RgbImage

COVERAGE_SCALES_M = (80, 100, 120, 150, 180)

# Street-view fetch parameters, passed to the provider verbatim:
# camera facing north, level pitch, wide field of view.
STREET_HEADING_DEG = 0.0
STREET_PITCH_DEG = 0.0
STREET_FOV_DEG = 120.0

VALIDITY_SATURATION_MAX = 0.01  # strict: reject only above 1%
DEDUP_OVERLAP_MAX = 0.5  # strict: duplicate only above 50%
DEDUP_COORD_EPS_DEG = 1e-9

MANIFEST_FORMAT = "triview-manifest"
MANIFEST_VERSION = 1


def quantize_coord(value: float) -> str:
    """Fixed-point coordinate string with 1e-7 degree resolution."""
    return f"{round(float(value), 7) + 0.0:.7f}"


def coord_key(p: GeoPoint) -> str:
    """Filesystem key for a coordinate: '<lat7>_<lon7>'."""
    return f"{quantize_coord(p.lat)}_{quantize_coord(p.lon)}"


@dataclass(frozen=True)
class SeedRecord:
    """Sliding-window center in both pixel and geographic coordinates."""

    source_image_id: str
    pixel_col: float
    pixel_row: float
    geo_center: GeoPoint


@dataclass(frozen=True)
class PanoLocation:
    """A provider panorama: opaque id plus its coordinate."""

    pano_id: str
    location: GeoPoint


@dataclass
class TriViewInstance:
    """One location's aligned drone, street and satellite assets plus text."""

    instance_id: str
    location: GeoPoint
    country: str
    scale_m: int
    drone_asset: str
    street_asset: str
    satellite_asset: str
    description: str
    split: str

    def __post_init__(self) -> None:
        if self.scale_m not in COVERAGE_SCALES_M:
            raise ValueError(f"scale_m {self.scale_m} not in {COVERAGE_SCALES_M}")
        if self.split not in ("train", "eval"):
            raise ValueError(f"split must be train or eval, got {self.split!r}")
        for name in ("drone_asset", "street_asset", "satellite_asset"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be present")

    def to_record(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "lat": self.location.lat,
            "lon": self.location.lon,
            "country": self.country,
            "scale_m": self.scale_m,
            "drone_asset": self.drone_asset,
            "street_asset": self.street_asset,
            "satellite_asset": self.satellite_asset,
            "description": self.description,
            "split": self.split,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "TriViewInstance":
        return cls(
            instance_id=rec["instance_id"],
            location=GeoPoint(rec["lat"], rec["lon"]),
            country=rec["country"],
            scale_m=int(rec["scale_m"]),
            drone_asset=rec["drone_asset"],
            street_asset=rec["street_asset"],
            satellite_asset=rec["satellite_asset"],
            description=rec["description"],
            split=rec["split"],
        )


@dataclass
class Manifest:
    """Ordered instance list with a provenance header."""

    header: dict
    instances: list[TriViewInstance]

    def __post_init__(self) -> None:
        ids = [inst.instance_id for inst in self.instances]
        if ids != sorted(ids):
            raise ValueError("manifest instances must be sorted by instance_id")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate instance_id in manifest")


@dataclass(frozen=True)
class DropRecord:
    stage: str
    id: str
    reason: str

    def to_record(self) -> dict:
        return {"stage": self.stage, "id": self.id, "reason": self.reason}


class Provider(Protocol):
    """Source of panoramas, street images, satellite tiles and descriptions."""

    def identity(self) -> str: ...

    def nearest_panorama(self, point: GeoPoint) -> PanoLocation | None: ...

    def fetch_street(
        self, pano: PanoLocation, heading_deg: float, pitch_deg: float, fov_deg: float
    ) -> bytes | None: ...

    def fetch_satellite(self, bounds: tuple[float, float, float, float]) -> bytes | None: ...

    def fetch_description(self, point: GeoPoint) -> str | None: ...


class FixtureProvider:
    """Filesystem-backed provider used by every test.

    Layout under the root, all keyed by coordinates quantized to 1e-7 degrees:

        street/<lat7>_<lon7>.png       one per panorama location
        satellite/<lat7>_<lon7>.png    keyed by the requested bounds' center
        description/<lat7>_<lon7>.txt  optional text descriptions

    The panorama inventory is exactly the street/ directory listing.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        if not self.root.is_dir():
            raise ProviderError(f"fixture root is not a directory: {self.root}")
        self._panos: list[PanoLocation] = []
        street = self.root / "street"
        if street.is_dir():
            for path in sorted(street.glob("*.png")):
                key = path.stem
                try:
                    lat_s, lon_s = key.split("_", 1)
                    point = GeoPoint(float(lat_s), float(lon_s))
                except (ValueError, IndexError) as exc:
                    raise ProviderError(f"bad fixture asset name {path.name!r}") from exc
                self._panos.append(PanoLocation(pano_id=key, location=point))

    def identity(self) -> str:
        return "fixture"

    def nearest_panorama(self, point: GeoPoint) -> PanoLocation | None:
        if not self._panos:
            return None
        return min(
            self._panos,
            key=lambda pano: (haversine_distance(point, pano.location), pano.pano_id),
        )

    def _read(self, path: Path) -> bytes | None:
        if not path.is_file():
            return None
        try:
            return path.read_bytes()
        except OSError as exc:
            raise ProviderError(f"cannot read fixture asset {path}: {exc}") from exc

    def fetch_street(
        self, pano: PanoLocation, heading_deg: float, pitch_deg: float, fov_deg: float
    ) -> bytes | None:
        if not all(math.isfinite(v) for v in (heading_deg, pitch_deg, fov_deg)):
            raise ProviderError("street fetch parameters must be finite")
        return self._read(self.root / "street" / f"{pano.pano_id}.png")

    def fetch_satellite(self, bounds: tuple[float, float, float, float]) -> bytes | None:
        lat_min, lat_max, lon_min, lon_max = bounds
        center = GeoPoint((lat_min + lat_max) / 2.0, (lon_min + lon_max) / 2.0)
        return self._read(self.root / "satellite" / f"{coord_key(center)}.png")

    def fetch_description(self, point: GeoPoint) -> str | None:
        path = self.root / "description" / f"{coord_key(point)}.txt"
        if not path.is_file():
            return None
        try:
            return path.read_text(encoding="utf-8").strip()
        except OSError as exc:
            raise ProviderError(f"cannot read fixture asset {path}: {exc}") from exc


class StreetViewHttpProvider:
    """HTTP backend mirroring the street-view static API request shape.

    Not exercised by the test suite (no network there); provided so real runs
    can swap it in for the fixture. Satellite tiles and descriptions are not
    served by this backend.
    """

    METADATA_URL = "https://maps.googleapis.com/maps/api/streetview/metadata"
    IMAGE_URL = "https://maps.googleapis.com/maps/api/streetview"

    def __init__(self, api_key: str, image_size: str = "640x640", timeout_s: float = 10.0):
        self.api_key = api_key
        self.image_size = image_size
        self.timeout_s = timeout_s

    def identity(self) -> str:
        return "streetview-http"

    def _session(self):
        import requests

        return requests

    def nearest_panorama(self, point: GeoPoint) -> PanoLocation | None:
        try:
            resp = self._session().get(
                self.METADATA_URL,
                params={"location": f"{point.lat},{point.lon}", "key": self.api_key},
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
            meta = resp.json()
        except Exception as exc:
            raise ProviderError(f"street-view metadata request failed: {exc}") from exc
        if meta.get("status") != "OK":
            return None
        loc = meta["location"]
        return PanoLocation(pano_id=meta["pano_id"], location=GeoPoint(loc["lat"], loc["lng"]))

    def fetch_street(
        self, pano: PanoLocation, heading_deg: float, pitch_deg: float, fov_deg: float
    ) -> bytes | None:
        try:
            resp = self._session().get(
                self.IMAGE_URL,
                params={
                    "pano": pano.pano_id,
                    "size": self.image_size,
                    "heading": heading_deg,
                    "pitch": pitch_deg,
                    "fov": fov_deg,
                    "key": self.api_key,
                },
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
        except Exception as exc:
            raise ProviderError(f"street-view image request failed: {exc}") from exc
        return resp.content

    def fetch_satellite(self, bounds: tuple[float, float, float, float]) -> bytes | None:
        raise ProviderError("satellite tiles are not available over this backend")

    def fetch_description(self, point: GeoPoint) -> str | None:
        return None


class AssetStore:
    """Content-addressed asset files under <root>/assets.

    References are sha256 hex digests. Generated crops hash their canonical
    pixel content (dimensions plus raw RGB bytes) so the reference does not
    depend on the PNG encoder; pass-through provider bytes hash as-is.
    """

    def __init__(self, root: str | Path):
        self.dir = Path(root) / "assets"
        self.dir.mkdir(parents=True, exist_ok=True)

    def put_image(self, img: RgbImage) -> str:
        h = hashlib.sha256()
        h.update(img.width.to_bytes(4, "little"))
        h.update(img.height.to_bytes(4, "little"))
        h.update(img.data.tobytes())
        ref = h.hexdigest()
        path = self.dir / f"{ref}.png"
        if not path.exists():
            path.write_bytes(raster.encode_png(img))
        return ref

    def put_bytes(self, data: bytes) -> str:
        ref = hashlib.sha256(data).hexdigest()
        path = self.dir / f"{ref}.png"
        if not path.exists():
            path.write_bytes(data)
        return ref


def generate_seeds(
    source_image_id: str,
    transform: AffineGeoTransform,
    width: int,
    height: int,
    window: int,
    stride: int,
) -> list[SeedRecord]:
    """One seed per sliding window, located at the window's pixel center."""
    seeds = []
    for w in raster.sliding_windows(width, height, window, stride):
        col = w.col0 + window / 2.0
        row = w.row0 + window / 2.0
        seeds.append(
            SeedRecord(
                source_image_id=source_image_id,
                pixel_col=col,
                pixel_row=row,
                geo_center=pixel_to_geo(transform, col, row),
            )
        )
    return seeds


def raster_footprint(transform: AffineGeoTransform, width: int, height: int) -> GroundFootprint:
    """Ground coverage of a full raster, as a footprint spanning its corner bbox."""
    corners = [(0.0, 0.0), (float(width), 0.0), (0.0, float(height)), (float(width), float(height))]
    points = [pixel_to_geo(transform, c, r) for c, r in corners]
    lats = [p.lat for p in points]
    lons = [p.lon for p in points]
    return bbox_to_footprint(min(lats), max(lats), min(lons), max(lons))


def harvest_panorama(
    provider: Provider, seed: SeedRecord, coverage: GroundFootprint
) -> PanoLocation | None:
    """Nearest panorama to the seed, kept only when it lies inside the coverage.

    Provider faults propagate as ProviderError; a clean miss returns None.
    """
    pano = provider.nearest_panorama(seed.geo_center)
    if pano is None or not contains(coverage, pano.location):
        return None
    return pano


def inverse_crop(
    img: RgbImage,
    transform: AffineGeoTransform,
    anchor: GeoPoint,
    scale_m: float,
) -> tuple[RgbImage, GroundFootprint]:
    """Crop the raster around an anchor so it covers a scale_m square footprint.

    The requested footprint's bbox maps through the geotransform and rounds
    outward to whole pixels, so the realized coverage always contains the
    requested one. Returns the crop and its realized footprint.
    """
    bbox = footprint_bbox(GroundFootprint(center=anchor, width_m=scale_m, height_m=scale_m))
    lat_min, lat_max, lon_min, lon_max = bbox
    corners = [
        geo_to_pixel(transform, GeoPoint(lat, lon))
        for lat in (lat_min, lat_max)
        for lon in (lon_min, lon_max)
    ]
    col0 = math.floor(min(c for c, _ in corners))
    col1 = math.ceil(max(c for c, _ in corners))
    row0 = math.floor(min(r for _, r in corners))
    row1 = math.ceil(max(r for _, r in corners))
    if col0 < 0 or row0 < 0 or col1 > img.width or row1 > img.height:
        raise OutOfCoverage(
            f"{scale_m} m footprint at ({anchor.lat}, {anchor.lon}) maps to pixels "
            f"[{col0}:{col1}, {row0}:{row1}] outside the {img.width}x{img.height} raster"
        )
    out = RgbImage(img.data[row0:row1, col0:col1].copy())
    pixel_corners = [
        pixel_to_geo(transform, c, r)
        for c in (float(col0), float(col1))
        for r in (float(row0), float(row1))
    ]
    lats = [p.lat for p in pixel_corners]
    lons = [p.lon for p in pixel_corners]
    realized = bbox_to_footprint(min(lats), max(lats), min(lons), max(lons))
    return out, realized


def validity_screen(g: GrayImage) -> bool:
    """Pass unless more than 1% of pixels are pure black or more than 1% pure white."""
    black, white = raster.saturated_ratio(g)
    return black <= VALIDITY_SATURATION_MAX and white <= VALIDITY_SATURATION_MAX


def dedup(candidates: Sequence[tuple[str, GroundFootprint, GeoPoint]]) -> list[str]:
    """Greedy first-wins duplicate suppression over id-sorted candidates.

    A candidate is dropped when it overlaps a retained one by strictly more
    than 50% (smaller-area denominator) or shares its coordinates within
    1e-9 degrees. Input must already be sorted by id.
    """
    ids = [c[0] for c in candidates]
    if ids != sorted(ids):
        raise ValueError("dedup expects candidates sorted by id")
    retained: list[tuple[str, GroundFootprint, GeoPoint]] = []
    kept_ids = []
    for cand_id, footprint, point in candidates:
        duplicate = False
        for _, kept_fp, kept_pt in retained:
            if (
                abs(point.lat - kept_pt.lat) <= DEDUP_COORD_EPS_DEG
                and abs(point.lon - kept_pt.lon) <= DEDUP_COORD_EPS_DEG
            ):
                duplicate = True
                break
            if overlap_ratio(footprint, kept_fp) > DEDUP_OVERLAP_MAX:
                duplicate = True
                break
        if not duplicate:
            retained.append((cand_id, footprint, point))
            kept_ids.append(cand_id)
    return kept_ids


@dataclass
class CandidateCrop:
    """A gated crop waiting for its street and satellite counterparts."""

    instance_id: str
    anchor: PanoLocation
    scale_m: int
    image: RgbImage
    footprint: GroundFootprint
    country: str
    split: str


def align_triples(
    provider: Provider,
    crops: Sequence[CandidateCrop],
    assets: AssetStore,
    header: dict,
) -> tuple[Manifest, list[DropRecord]]:
    """Fetch street and satellite counterparts for every retained crop.

    The street image is requested with the fixed north-facing parameters; the
    satellite tile covers the nominal scale_m bounds around the anchor. A
    missing asset or provider fault drops only that instance, with a reason.
    """
    instances: list[TriViewInstance] = []
    drops: list[DropRecord] = []
    for crop in crops:
        try:
            street = provider.fetch_street(
                crop.anchor, STREET_HEADING_DEG, STREET_PITCH_DEG, STREET_FOV_DEG
            )
            if street is None:
                drops.append(DropRecord("fetch", crop.instance_id, "street asset missing"))
                continue
            bounds = footprint_bbox(
                GroundFootprint(crop.anchor.location, float(crop.scale_m), float(crop.scale_m))
            )
            satellite = provider.fetch_satellite(bounds)
            if satellite is None:
                drops.append(DropRecord("fetch", crop.instance_id, "satellite asset missing"))
                continue
            description = provider.fetch_description(crop.anchor.location) or ""
        except ProviderError as exc:
            drops.append(DropRecord("fetch", crop.instance_id, f"provider error: {exc}"))
            continue
        instances.append(
            TriViewInstance(
                instance_id=crop.instance_id,
                location=crop.anchor.location,
                country=crop.country,
                scale_m=crop.scale_m,
                drone_asset=assets.put_image(crop.image),
                street_asset=assets.put_bytes(street),
                satellite_asset=assets.put_bytes(satellite),
                description=description,
                split=crop.split,
            )
        )
    header = dict(header)
    header["count"] = len(instances)
    return Manifest(header=header, instances=instances), drops


@dataclass
class BuildResult:
    manifest: Manifest
    drops: list[DropRecord]
    counts: dict[str, int]


def _map_ordered(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_build(
    seeds: Sequence[SeedRecord],
    img: RgbImage,
    transform: AffineGeoTransform,
    provider: Provider,
    thresholds: GateThresholds,
    assets: AssetStore,
    scales: Sequence[int] = COVERAGE_SCALES_M,
    header: dict | None = None,
    country: str = "",
    split: str = "train",
    threads: int = 1,
) -> BuildResult:
    """Run harvest, crop, screen, gate, dedup and alignment over a seed list.

    Output is independent of the thread count: per-candidate stages map in
    order and every cross-candidate step works on id-sorted sequences.
    """
    for scale in scales:
        if scale not in COVERAGE_SCALES_M:
            raise ValueError(f"scale {scale} not in {COVERAGE_SCALES_M}")
    coverage = raster_footprint(transform, img.width, img.height)
    drops: list[DropRecord] = []

    def harvest(seed: SeedRecord):
        try:
            return harvest_panorama(provider, seed, coverage)
        except ProviderError as exc:
            return exc

    harvested = _map_ordered(harvest, list(seeds), threads)
    anchors: list[PanoLocation] = []
    seen_panos: set[str] = set()
    for seed, got in zip(seeds, harvested):
        if isinstance(got, ProviderError):
            seed_id = f"{seed.source_image_id}:{seed.pixel_col:g},{seed.pixel_row:g}"
            drops.append(DropRecord("harvest", seed_id, f"provider error: {got}"))
            continue
        if got is None or got.pano_id in seen_panos:
            continue
        seen_panos.add(got.pano_id)
        anchors.append(got)

    # Candidate universe: one per (anchor, scale) whose footprint fits the raster.
    pending: list[tuple[str, PanoLocation, int]] = []
    for anchor in anchors:
        for scale in scales:
            pending.append((f"{anchor.pano_id}_s{scale:03d}", anchor, int(scale)))
    pending.sort(key=lambda item: item[0])

    def make_crop(item: tuple[str, PanoLocation, int]):
        cand_id, anchor, scale = item
        try:
            image, footprint = inverse_crop(img, transform, anchor.location, float(scale))
        except OutOfCoverage:
            return None
        return CandidateCrop(
            instance_id=cand_id,
            anchor=anchor,
            scale_m=scale,
            image=image,
            footprint=footprint,
            country=country,
            split=split,
        )

    cropped = [c for c in _map_ordered(make_crop, pending, threads) if c is not None]

    def screen_and_gate(crop: CandidateCrop):
        gray = raster.to_grayscale(crop.image)
        if not validity_screen(gray):
            return DropRecord("screen", crop.instance_id, "saturated area above 1%")
        report = gates.gate_cascade(gray, thresholds)
        if report.verdict != "pass":
            return DropRecord("gate", crop.instance_id, report.rejected_by)
        return crop

    survivors: list[CandidateCrop] = []
    for outcome in _map_ordered(screen_and_gate, cropped, threads):
        if isinstance(outcome, DropRecord):
            drops.append(outcome)
        else:
            survivors.append(outcome)

    kept_ids = dedup([(c.instance_id, c.footprint, c.anchor.location) for c in survivors])
    kept_set = set(kept_ids)
    retained = []
    for crop in survivors:
        if crop.instance_id in kept_set:
            retained.append(crop)
        else:
            drops.append(DropRecord("dedup", crop.instance_id, "coverage duplicate"))

    base_header = dict(header or {})
    base_header.setdefault("format", MANIFEST_FORMAT)
    base_header.setdefault("version", MANIFEST_VERSION)
    base_header.setdefault("provider", provider.identity())
    base_header.setdefault("thresholds", thresholds.to_dict())
    manifest, fetch_drops = align_triples(provider, retained, assets, base_header)
    drops.extend(fetch_drops)

    counts = {
        "seeds": len(seeds),
        "panoramas": len(anchors),
        "crops": len(cropped),
        "screen_gate_pass": len(survivors),
        "retained": len(retained),
        "manifest": len(manifest.instances),
        "fetch_drops": len(fetch_drops),
    }
    return BuildResult(manifest=manifest, drops=drops, counts=counts)


@dataclass(frozen=True)
class RasterSidecar:
    """Georeferencing metadata shipped next to a source raster."""

    raster_id: str
    transform: AffineGeoTransform
    country: str = ""
    split: str = "train"


def read_sidecar(path: str | Path) -> RasterSidecar:
    """Load the sidecar JSON: raster id, six-coefficient transform, metadata."""
    rec = json.loads(Path(path).read_text(encoding="utf-8"))
    coeffs = rec["transform"]
    if len(coeffs) != 6:
        raise ValueError(f"{path}: transform needs 6 coefficients, got {len(coeffs)}")
    return RasterSidecar(
        raster_id=str(rec["raster_id"]),
        transform=AffineGeoTransform(*(float(c) for c in coeffs)),
        country=str(rec.get("country", "")),
        split=str(rec.get("split", "train")),
    )


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def write_seeds(path: str | Path, seeds: Iterable[SeedRecord]) -> int:
    """Write seeds as JSONL, one record per line; returns the count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seed in seeds:
            fh.write(
                _dump(
                    {
                        "source_image_id": seed.source_image_id,
                        "pixel_col": seed.pixel_col,
                        "pixel_row": seed.pixel_row,
                        "lat": seed.geo_center.lat,
                        "lon": seed.geo_center.lon,
                    }
                )
                + "\n"
            )
            count += 1
    return count


def read_seeds(path: str | Path) -> list[SeedRecord]:
    seeds = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        seeds.append(
            SeedRecord(
                source_image_id=rec["source_image_id"],
                pixel_col=float(rec["pixel_col"]),
                pixel_row=float(rec["pixel_row"]),
                geo_center=GeoPoint(rec["lat"], rec["lon"]),
            )
        )
    return seeds


def write_manifest(path: str | Path, manifest: Manifest) -> None:
    """Header line followed by one instance per line, keys in fixed order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump(manifest.header) + "\n")
        for inst in manifest.instances:
            fh.write(_dump(inst.to_record()) + "\n")


def read_manifest(path: str | Path) -> Manifest:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty manifest")
    header = json.loads(lines[0])
    if header.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path}: not a {MANIFEST_FORMAT} file")
    instances = [TriViewInstance.from_record(json.loads(line)) for line in lines[1:] if line.strip()]
    return Manifest(header=header, instances=instances)


def write_drops(path: str | Path, drops: Iterable[DropRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for drop in drops:
            fh.write(_dump(drop.to_record()) + "\n")
