"""Retrieval evaluation over full-gallery rankings: R@k, AP, R@1%, Hit and L@d.

Each query carries a complete gallery ranking plus whatever geometry the
coverage and distance metrics need. Per-query metrics are 0/1 indicators
except AP; reports average them over the query set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    EmptyQuerySet,
    KOutOfRange,
    MissingFootprint,
    MissingLocation,
)
from .geodesy import GeoPoint, GroundFootprint, contains, haversine_distance


@dataclass
class QueryJudgment:
    """One query's full gallery ranking plus ground truth and geometry.

    ``ranking`` must be a permutation of the gallery ids with the ground
    truth present. Locations and footprints are optional maps keyed by
    gallery id; they are only required by the metrics that use them.
    """

    query_id: int | str
    ranking: tuple
    ground_truth_id: int | str
    query_location: GeoPoint | None = None
    locations: Mapping | None = None
    footprints: Mapping | None = None

    def __post_init__(self) -> None:
        self.ranking = tuple(self.ranking)
        if not self.ranking:
            raise ValueError("empty ranking")
        if len(set(self.ranking)) != len(self.ranking):
            raise ValueError("ranking repeats a gallery id")
        if self.ground_truth_id not in self.ranking:
            raise ValueError(f"ground truth {self.ground_truth_id!r} absent from the ranking")

    @property
    def gallery_size(self) -> int:
        return len(self.ranking)

    def rank_of(self, item_id) -> int:
        """1-based rank of a gallery item."""
        return self.ranking.index(item_id) + 1


def recall_at_k(j: QueryJudgment, k: int) -> int:
    """1 when the ground truth sits within the top k results."""
    if not 1 <= k <= j.gallery_size:
        raise KOutOfRange(f"k={k} outside 1..{j.gallery_size}")
    return 1 if j.rank_of(j.ground_truth_id) <= k else 0


def average_precision(j: QueryJudgment, relevant: Iterable | None = None) -> float:
    """Interpolation-free AP: mean precision at each relevant rank.

    With the default single relevant item (the ground truth) this reduces to
    1/rank; the general form keeps multi-relevant synthetic cases honest.
    """
    rel = set(relevant) if relevant is not None else {j.ground_truth_id}
    if not rel:
        raise ValueError("empty relevant set")
    hits = 0
    precision_sum = 0.0
    for rank, item in enumerate(j.ranking, start=1):
        if item in rel:
            hits += 1
            precision_sum += hits / rank
    if hits != len(rel):
        raise ValueError("relevant items missing from the ranking")
    return precision_sum / len(rel)


def recall_at_1pct(j: QueryJudgment) -> int:
    """1 when the ground truth ranks within the top 1% of the gallery (ceil, min 1)."""
    k = max(1, math.ceil(0.01 * j.gallery_size))
    return recall_at_k(j, k)


def hit(j: QueryJudgment) -> int:
    """1 when the top result's ground footprint covers the query's true location.

    Any covering reference counts, not only the ground-truth item.
    """
    top = j.ranking[0]
    if j.footprints is None or top not in j.footprints:
        raise MissingFootprint(f"no footprint for top-1 item {top!r}")
    if j.query_location is None:
        raise MissingLocation(f"query {j.query_id!r} has no true location")
    footprint: GroundFootprint = j.footprints[top]
    return 1 if contains(footprint, j.query_location) else 0


def location_recall(j: QueryJudgment, d: float, k: int = 1) -> int:
    """1 when any of the top-k results lies strictly within d meters of the truth."""
    if not 1 <= k <= j.gallery_size:
        raise KOutOfRange(f"k={k} outside 1..{j.gallery_size}")
    if j.query_location is None:
        raise MissingLocation(f"query {j.query_id!r} has no true location")
    for item in j.ranking[:k]:
        if j.locations is None or item not in j.locations:
            raise MissingLocation(f"no location for gallery item {item!r}")
        if haversine_distance(j.query_location, j.locations[item]) < d:
            return 1
    return 0


@dataclass(frozen=True)
class MetricConfig:
    k_list: tuple[int, ...] = (1, 5, 10)
    distance_list: tuple[float, ...] = (50.0,)
    location_k: int = 1
    include_hit: bool = True

    def __post_init__(self) -> None:
        if any(k < 1 for k in self.k_list) or self.location_k < 1:
            raise ValueError("rank depths must be >= 1")
        if any(d <= 0 for d in self.distance_list):
            raise ValueError("distance thresholds must be positive")


@dataclass
class MetricReport:
    """Query-set means of every configured metric."""

    recall: dict[int, float]
    recall_1pct: float
    average_precision: float
    hit: float | None = None
    location_recall: dict[float, float] = field(default_factory=dict)
    location_k: int = 1
    query_count: int = 0

    def to_dict(self) -> dict:
        out: dict = {f"R@{k}": self.recall[k] for k in sorted(self.recall)}
        out["R@1%"] = self.recall_1pct
        out["AP"] = self.average_precision
        if self.hit is not None:
            out["Hit"] = self.hit
        for d in sorted(self.location_recall):
            label = f"L@{d:g}" if self.location_k == 1 else f"L@{d:g}(k={self.location_k})"
            out[label] = self.location_recall[d]
        out["queries"] = self.query_count
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def to_table(self) -> str:
        entries = [(k, v) for k, v in self.to_dict().items() if k != "queries"]
        width = max(len(k) for k, _ in entries)
        lines = [f"{k:<{width}}  {v:.4f}" for k, v in entries]
        lines.append(f"{'queries':<{width}}  {self.query_count}")
        return "\n".join(lines)


def write_judgments(path: str | Path, judgments: Iterable[QueryJudgment]) -> None:
    """Serialize judgments as JSON Lines of ids (geometry travels separately)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for j in judgments:
            rec = {
                "query_id": j.query_id,
                "ranking": list(j.ranking),
                "ground_truth_id": j.ground_truth_id,
            }
            if j.query_location is not None:
                rec["query_lat"] = j.query_location.lat
                rec["query_lon"] = j.query_location.lon
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_judgments(
    path: str | Path,
    locations: Mapping | None = None,
    footprints: Mapping | None = None,
) -> list[QueryJudgment]:
    """Load JSON Lines judgments whose rankings reference manifest instance ids.

    Optional per-id location and footprint maps (typically derived from a
    manifest) are attached to every judgment so the geometry metrics work.
    """
    judgments = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        query_location = None
        if "query_lat" in rec and "query_lon" in rec:
            query_location = GeoPoint(rec["query_lat"], rec["query_lon"])
        judgments.append(
            QueryJudgment(
                query_id=rec["query_id"],
                ranking=tuple(rec["ranking"]),
                ground_truth_id=rec["ground_truth_id"],
                query_location=query_location,
                locations=locations,
                footprints=footprints,
            )
        )
    return judgments


def aggregate(judgments: Sequence[QueryJudgment], config: MetricConfig = MetricConfig()) -> MetricReport:
    """Unweighted means of every per-query metric over the judgment set.

    Sums use fsum so the result is exactly independent of judgment order.
    """
    if not judgments:
        raise EmptyQuerySet("no judgments to aggregate")
    n = len(judgments)
    recall = {
        k: math.fsum(recall_at_k(j, k) for j in judgments) / n for k in config.k_list
    }
    report = MetricReport(
        recall=recall,
        recall_1pct=math.fsum(recall_at_1pct(j) for j in judgments) / n,
        average_precision=math.fsum(average_precision(j) for j in judgments) / n,
        location_k=config.location_k,
        query_count=n,
    )
    if config.include_hit:
        report.hit = math.fsum(hit(j) for j in judgments) / n
    for d in config.distance_list:
        report.location_recall[d] = (
            math.fsum(location_recall(j, d, config.location_k) for j in judgments) / n
        )
    return report
