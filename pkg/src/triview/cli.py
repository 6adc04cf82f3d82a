"""Command-line surface: seed, build, train-toy, eval and gate-report subcommands.

Exit codes follow one convention across commands: 0 success, 1 environment
or I/O failure, 2 usage or validation failure. Every run is a pure function
of its arguments, input files and seed; values resolve as explicit flags
over config-file entries over built-in defaults, and the effective
configuration is hashed into output provenance.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, embedding, evalmetrics, gates, objective, pipeline, raster
from .errors import Diverged, TriviewError
from .geodesy import GroundFootprint

DEFAULTS = {
    "window": 80,
    "stride": None,  # None means: same as window
    "scales": "80,100,120,150,180",
    "seed": 17,
    "steps": 200,
    "batch": 32,
    "dim": 16,
    "lr": 0.1,
    "k_list": "1,5,10",
    "distance_list": "50",
    "threads": 1,
}


class UsageError(Exception):
    pass


def _require_file(path: str | None, flag: str) -> Path:
    if path is None:
        raise UsageError(f"{flag} is required")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{flag}: file not found: {p}")
    return p


def _require_dir(path: str | None, flag: str) -> Path:
    if path is None:
        raise UsageError(f"{flag} is required")
    p = Path(path)
    if not p.is_dir():
        raise UsageError(f"{flag}: directory not found: {p}")
    return p


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = _require_file(path, "--config")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("--config: top level must be a JSON object")
    unknown = set(cfg) - set(DEFAULTS) - {"thresholds", "provider_root"}
    if unknown:
        raise UsageError(f"--config: unknown keys {sorted(unknown)}")
    return cfg


def _resolve(args: argparse.Namespace, config: dict, key: str):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return DEFAULTS[key]


def _parse_int_list(value, flag: str) -> tuple[int, ...]:
    try:
        if isinstance(value, (list, tuple)):
            values = tuple(int(v) for v in value)
        else:
            values = tuple(int(part) for part in str(value).split(",") if part.strip())
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{flag}: expected comma-separated integers, got {value!r}") from exc
    if not values:
        raise UsageError(f"{flag}: empty list")
    return values


def _parse_float_list(value, flag: str) -> tuple[float, ...]:
    try:
        if isinstance(value, (list, tuple)):
            values = tuple(float(v) for v in value)
        else:
            values = tuple(float(part) for part in str(value).split(",") if part.strip())
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{flag}: expected comma-separated numbers, got {value!r}") from exc
    return values


def _config_hash(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _load_thresholds(args: argparse.Namespace, config: dict) -> gates.GateThresholds:
    path = getattr(args, "thresholds", None) or config.get("thresholds")
    if path is None:
        return gates.GateThresholds()
    p = _require_file(str(path), "--thresholds")
    try:
        return gates.GateThresholds.from_file(p)
    except ValueError as exc:
        raise UsageError(f"--thresholds: {exc}") from exc


def _decode_file(path: Path, flag: str) -> raster.RgbImage:
    try:
        return raster.decode_image(path.read_bytes())
    except TriviewError as exc:
        raise UsageError(f"{flag}: {exc}") from exc


def _cmd_seed(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    raster_path = _require_file(args.input, "--input")
    sidecar_path = _require_file(args.transform, "--transform")
    window = int(_resolve(args, config, "window"))
    stride = _resolve(args, config, "stride")
    stride = window if stride is None else int(stride)
    if args.out is None:
        raise UsageError("--out is required")

    img = _decode_file(raster_path, "--input")
    sidecar = pipeline.read_sidecar(sidecar_path)
    seeds = pipeline.generate_seeds(
        sidecar.raster_id, sidecar.transform, img.width, img.height, window, stride
    )
    count = pipeline.write_seeds(args.out, seeds)
    print(f"wrote {count} seeds to {args.out}")
    return 0


def _cmd_build(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seeds_path = _require_file(args.seeds, "--seeds")
    raster_path = _require_file(args.input, "--input")
    sidecar_path = _require_file(args.transform, "--transform")
    provider_root = _require_dir(
        args.provider_root or config.get("provider_root"), "--provider-root"
    )
    if args.out is None:
        raise UsageError("--out is required")
    scales = _parse_int_list(_resolve(args, config, "scales"), "--scales")
    threads = int(_resolve(args, config, "threads"))
    thresholds = _load_thresholds(args, config)

    img = _decode_file(raster_path, "--input")
    sidecar = pipeline.read_sidecar(sidecar_path)
    seeds = pipeline.read_seeds(seeds_path)
    try:
        provider = pipeline.FixtureProvider(provider_root)
    except TriviewError as exc:
        raise UsageError(f"--provider-root: {exc}") from exc

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = {
        "format": pipeline.MANIFEST_FORMAT,
        "version": pipeline.MANIFEST_VERSION,
        "tool": __version__,
        "config_hash": _config_hash(
            {"command": "build", "scales": list(scales), "thresholds": thresholds.to_dict()}
        ),
    }
    try:
        result = pipeline.run_build(
            seeds=seeds,
            img=img,
            transform=sidecar.transform,
            provider=provider,
            thresholds=thresholds,
            assets=pipeline.AssetStore(out_dir),
            scales=scales,
            header=header,
            country=sidecar.country,
            split=sidecar.split,
            threads=threads,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    pipeline.write_manifest(out_dir / "manifest.jsonl", result.manifest)
    pipeline.write_drops(out_dir / "drops.jsonl", result.drops)
    summary = " ".join(f"{k}={v}" for k, v in result.counts.items())
    print(summary)
    return 0


def _cmd_train_toy(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.out is None:
        raise UsageError("--out is required")
    try:
        train_config = objective.TrainConfig(
            batch_size=int(_resolve(args, config, "batch")),
            dim=int(_resolve(args, config, "dim")),
            learning_rate=float(_resolve(args, config, "lr")),
            steps=int(_resolve(args, config, "steps")),
            seed=int(_resolve(args, config, "seed")),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(train_config.seed)
    generator = objective.SharedLatentGenerator(train_config.dim, rng=rng)
    last_finite = {"step": None, "total": None}

    def on_step(step, breakdown):
        last_finite["step"] = step
        last_finite["total"] = breakdown.total_loss

    try:
        result = objective.train_toy(train_config, generator=generator, step_callback=on_step)
    except Diverged as exc:
        print(
            f"training diverged: {exc} "
            f"(last finite step: {last_finite['step']}, L_total={last_finite['total']})",
            file=sys.stderr,
        )
        return 1

    with open(out_dir / "trace.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,L_img,L_text,L_total,tau\n")
        for step, l_img, l_text, l_total, tau in result.trace:
            fh.write(f"{step},{l_img!r},{l_text!r},{l_total!r},{tau!r}\n")

    probe_n = 100
    features = generator.sample(probe_n, rng)
    ids = tuple(range(probe_n))
    for view in objective.ALL_VIEWS:
        batch = objective.encode_batch(view, ids, features[view], result.encoders[view])
        embedding.write_embeddings(out_dir / f"probe_{view}.gbem", batch)

    first = result.trace[0]
    last = result.trace[-1]
    print(
        f"steps={train_config.steps} initial_total={first[3]:.6f} "
        f"final_total={last[3]:.6f} tau={last[4]:.6f}"
    )
    return 0


def _judgments_from_batches(
    queries: embedding.EmbeddingBatch,
    gallery: embedding.EmbeddingBatch,
    manifest: pipeline.Manifest | None,
) -> list[evalmetrics.QueryJudgment]:
    gallery_ids = set(gallery.ids)
    instances = manifest.instances if manifest is not None else None
    locations = footprints = None
    if instances is not None:
        locations = {}
        footprints = {}
        for gid in gallery.ids:
            if gid >= len(instances):
                raise UsageError(
                    f"gallery id {gid} has no manifest row (manifest has {len(instances)})"
                )
            inst = instances[gid]
            locations[gid] = inst.location
            footprints[gid] = GroundFootprint(
                inst.location, float(inst.scale_m), float(inst.scale_m)
            )
    judgments = []
    for i, qid in enumerate(queries.ids):
        if qid not in gallery_ids:
            raise UsageError(f"query id {qid} missing from the gallery")
        ranked = embedding.top_k(queries.matrix[i], gallery, len(gallery))
        query_location = None
        if instances is not None:
            if qid >= len(instances):
                raise UsageError(
                    f"query id {qid} has no manifest row (manifest has {len(instances)})"
                )
            query_location = instances[qid].location
        judgments.append(
            evalmetrics.QueryJudgment(
                query_id=qid,
                ranking=tuple(item for item, _ in ranked),
                ground_truth_id=qid,
                query_location=query_location,
                locations=locations,
                footprints=footprints,
            )
        )
    return judgments


def _cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    query_path = _require_file(args.query, "--query")
    gallery_path = _require_file(args.gallery, "--gallery")
    k_list = _parse_int_list(_resolve(args, config, "k_list"), "--k-list")
    distance_list = _parse_float_list(_resolve(args, config, "distance_list"), "--distance-list")

    try:
        queries = embedding.read_embeddings(query_path)
        gallery = embedding.read_embeddings(gallery_path)
    except TriviewError as exc:
        raise UsageError(str(exc)) from exc

    manifest = None
    if args.manifest is not None:
        manifest_path = _require_file(args.manifest, "--manifest")
        try:
            manifest = pipeline.read_manifest(manifest_path)
        except (ValueError, KeyError) as exc:
            raise UsageError(f"--manifest: {exc}") from exc

    judgments = _judgments_from_batches(queries, gallery, manifest)
    feasible = tuple(k for k in k_list if k <= len(gallery))
    if not feasible:
        raise UsageError(f"--k-list: no depth fits a gallery of {len(gallery)}")
    if feasible != k_list:
        skipped = sorted(set(k_list) - set(feasible))
        print(f"note: skipping R@k beyond the gallery size: {skipped}", file=sys.stderr)
    metric_config = evalmetrics.MetricConfig(
        k_list=feasible,
        distance_list=distance_list if manifest is not None else (),
        include_hit=manifest is not None,
    )
    try:
        report = evalmetrics.aggregate(judgments, metric_config)
    except TriviewError as exc:
        raise UsageError(str(exc)) from exc

    payload = {
        "tool": __version__,
        "config_hash": _config_hash(
            {"command": "eval", "k_list": list(k_list), "distance_list": list(distance_list)}
        ),
    }
    payload.update(report.to_dict())
    if args.out is not None:
        Path(args.out).write_text(
            json.dumps(payload, separators=(",", ":")) + "\n", encoding="utf-8"
        )
    print(report.to_table())
    return 0


def _cmd_gate_report(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    image_path = _require_file(args.input, "--input")
    thresholds = _load_thresholds(args, config)
    img = _decode_file(image_path, "--input")
    try:
        report = gates.gate_cascade(raster.to_grayscale(img), thresholds)
    except TriviewError as exc:
        raise UsageError(str(exc)) from exc
    print(report.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triview",
        description="Tri-view dataset construction, toy alignment training and retrieval evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"triview {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--out", help="output file or directory")

    p = sub.add_parser("seed", help="slide a window over a raster and emit seed records")
    common(p)
    p.add_argument("--input", help="source raster (PNG or JPEG)")
    p.add_argument("--transform", help="sidecar JSON with the affine geotransform")
    p.add_argument("--window", type=int, help="window size in pixels (default 80)")
    p.add_argument("--stride", type=int, help="stride in pixels (default: window size)")
    p.set_defaults(handler=_cmd_seed)

    p = sub.add_parser("build", help="run harvest, crop, screen, gate, dedup and alignment")
    common(p)
    p.add_argument("--seeds", help="seeds JSONL from the seed command")
    p.add_argument("--input", help="source raster (PNG or JPEG)")
    p.add_argument("--transform", help="sidecar JSON with the affine geotransform")
    p.add_argument("--provider-root", dest="provider_root", help="fixture provider directory")
    p.add_argument("--thresholds", help="gate thresholds file (key=value)")
    p.add_argument("--scales", help='coverage scales in meters (default "80,100,120,150,180")')
    p.add_argument("--threads", type=int, help="worker threads for per-candidate stages")
    p.set_defaults(handler=_cmd_build)

    p = sub.add_parser("train-toy", help="train linear encoders on synthetic aligned data")
    common(p)
    p.add_argument("--steps", type=int, help="gradient steps (default 200)")
    p.add_argument("--batch", type=int, help="batch size (default 32)")
    p.add_argument("--dim", type=int, help="embedding dimension (default 16)")
    p.add_argument("--lr", type=float, help="learning rate (default 0.1)")
    p.add_argument("--seed", type=int, help="RNG seed (default 17)")
    p.set_defaults(handler=_cmd_train_toy)

    p = sub.add_parser("eval", help="rank queries against a gallery and report metrics")
    common(p)
    p.add_argument("--query", help="query embeddings (GBEM)")
    p.add_argument("--gallery", help="gallery embeddings (GBEM)")
    p.add_argument("--manifest", help="manifest JSONL for locations and footprints")
    p.add_argument("--k-list", dest="k_list", help='recall depths (default "1,5,10")')
    p.add_argument(
        "--distance-list", dest="distance_list", help='distance thresholds in meters (default "50")'
    )
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("gate-report", help="print the quality-gate report for one image")
    common(p)
    p.add_argument("--input", help="image to score (PNG or JPEG)")
    p.add_argument("--thresholds", help="gate thresholds file (key=value)")
    p.set_defaults(handler=_cmd_gate_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TriviewError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
