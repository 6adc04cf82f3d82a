"""Contrastive alignment objective over three visual views bridged by text.

The loss couples drone, panorama and satellite embeddings two ways: three
directed image-to-image InfoNCE terms over the cycle drone->satellite,
satellite->panorama, panorama->drone, and three text-to-view terms that bind
every view to the shared description embedding. Batches are aligned row-for-
row, so the correct match for query i is column i.

Analytic gradients flow through scoring, row normalization and the linear
encoders, including the log-temperature; a small gradient-descent trainer
demonstrates the mechanism on synthetic shared-latent data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .embedding import EmbeddingBatch, Temperature, l2_normalize_rows, score_matrix, top_k
from .errors import BadTarget, BatchMisaligned, Diverged, NonFiniteGradient

VISUAL_VIEWS = ("drone", "panorama", "satellite")
ALL_VIEWS = VISUAL_VIEWS + ("text",)

# Directed query -> gallery pairs; the image cycle plus text against each view.
IMAGE_PAIRS = (("drone", "satellite"), ("satellite", "panorama"), ("panorama", "drone"))
TEXT_PAIRS = (("text", "drone"), ("text", "panorama"), ("text", "satellite"))


@dataclass(frozen=True)
class LossBreakdown:
    """Per-pair InfoNCE values plus their image/text/total aggregates."""

    drone_satellite: float
    satellite_panorama: float
    panorama_drone: float
    text_drone: float
    text_panorama: float
    text_satellite: float
    image_loss: float
    text_loss: float
    total_loss: float

    def as_dict(self) -> dict[str, float]:
        return {
            "drone_satellite": self.drone_satellite,
            "satellite_panorama": self.satellite_panorama,
            "panorama_drone": self.panorama_drone,
            "text_drone": self.text_drone,
            "text_panorama": self.text_panorama,
            "text_satellite": self.text_satellite,
            "image_loss": self.image_loss,
            "text_loss": self.text_loss,
            "total_loss": self.total_loss,
        }


@dataclass
class LinearEncoder:
    """Linear map used as a desk-scale stand-in for a deep view encoder."""

    weight: np.ndarray  # (dim_out, dim_in)

    def __post_init__(self) -> None:
        w = np.asarray(self.weight, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError(f"weight must be 2-D, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weight has non-finite entries")
        self.weight = w

    def encode(self, features: np.ndarray) -> np.ndarray:
        """Project raw features and unit-normalize each row."""
        y = np.asarray(features, dtype=np.float64) @ self.weight.T
        return l2_normalize_rows(y)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    dim: int = 16
    learning_rate: float = 0.1
    steps: int = 200
    seed: int = 17
    learnable_temperature: bool = True

    def __post_init__(self) -> None:
        if self.batch_size < 2:
            raise ValueError("contrastive training needs batch_size >= 2")
        if self.dim < 1 or self.steps < 0 or self.learning_rate <= 0.0:
            raise ValueError("invalid training configuration")


def _softmax_rows(s: np.ndarray) -> np.ndarray:
    shifted = s - s.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def infonce(scores: np.ndarray, targets: Sequence[int] | None = None) -> float:
    """Mean cross-entropy of each row's softmax against its target column.

    Computed with per-row max subtraction; targets default to the identity
    (row i matches column i).
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2:
        raise ValueError(f"score matrix must be 2-D, got shape {s.shape}")
    n_rows, n_cols = s.shape
    if targets is None:
        if n_rows != n_cols:
            raise BadTarget(f"identity targets need a square matrix, got {s.shape}")
        targets = range(n_rows)
    targets = [int(t) for t in targets]
    if len(targets) != n_rows:
        raise BadTarget(f"{len(targets)} targets for {n_rows} rows")
    for t in targets:
        if not 0 <= t < n_cols:
            raise BadTarget(f"target column {t} outside 0..{n_cols - 1}")
    shifted = s - s.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(n_rows), targets]
    return float(np.mean(log_z - picked))


def _check_aligned(batches: Sequence[EmbeddingBatch]) -> None:
    ref = batches[0]
    for b in batches[1:]:
        if b.ids != ref.ids:
            raise BatchMisaligned(f"{b.view} ids differ from {ref.view} ids")


def _pair_loss(q: EmbeddingBatch, g: EmbeddingBatch, t: Temperature) -> float:
    return infonce(score_matrix(q, g, t).values)


def image_loss(
    d: EmbeddingBatch,
    p: EmbeddingBatch,
    s: EmbeddingBatch,
    t: Temperature,
    symmetric: bool = False,
) -> float:
    """Mean InfoNCE over the three directed image pairs.

    With symmetric=True each pair averages both query directions; the default
    keeps the single directed matrix per pair.
    """
    _check_aligned([d, p, s])
    by_view = {"drone": d, "panorama": p, "satellite": s}
    terms = []
    for u, v in IMAGE_PAIRS:
        loss = _pair_loss(by_view[u], by_view[v], t)
        if symmetric:
            loss = 0.5 * (loss + _pair_loss(by_view[v], by_view[u], t))
        terms.append(loss)
    return float(np.mean(terms))


def text_loss(
    txt: EmbeddingBatch,
    d: EmbeddingBatch,
    p: EmbeddingBatch,
    s: EmbeddingBatch,
    t: Temperature,
) -> float:
    """Mean InfoNCE of text queries against each visual view's gallery."""
    _check_aligned([txt, d, p, s])
    by_view = {"drone": d, "panorama": p, "satellite": s}
    return float(np.mean([_pair_loss(txt, by_view[v], t) for _, v in TEXT_PAIRS]))


def total_loss(
    d: EmbeddingBatch,
    p: EmbeddingBatch,
    s: EmbeddingBatch,
    txt: EmbeddingBatch,
    t: Temperature,
    symmetric: bool = False,
    pair_temperatures: Mapping[tuple[str, str], Temperature] | None = None,
) -> LossBreakdown:
    """Full breakdown: three image terms, three text terms and their sums.

    pair_temperatures optionally overrides the shared temperature for
    individual (query_view, gallery_view) pairs.
    """
    _check_aligned([d, p, s, txt])
    by_view = {"drone": d, "panorama": p, "satellite": s, "text": txt}
    overrides = dict(pair_temperatures or {})

    def term(u: str, v: str) -> float:
        tau = overrides.get((u, v), t)
        loss = _pair_loss(by_view[u], by_view[v], tau)
        if symmetric and u != "text":
            loss = 0.5 * (loss + _pair_loss(by_view[v], by_view[u], tau))
        return loss

    img_terms = {(u, v): term(u, v) for u, v in IMAGE_PAIRS}
    txt_terms = {(u, v): term(u, v) for u, v in TEXT_PAIRS}
    img = float(np.mean(list(img_terms.values())))
    txt_mean = float(np.mean(list(txt_terms.values())))
    return LossBreakdown(
        drone_satellite=img_terms[("drone", "satellite")],
        satellite_panorama=img_terms[("satellite", "panorama")],
        panorama_drone=img_terms[("panorama", "drone")],
        text_drone=txt_terms[("text", "drone")],
        text_panorama=txt_terms[("text", "panorama")],
        text_satellite=txt_terms[("text", "satellite")],
        image_loss=img,
        text_loss=txt_mean,
        total_loss=img + txt_mean,
    )


def loss_gradients(
    features: Mapping[str, np.ndarray],
    encoders: Mapping[str, LinearEncoder],
    t: Temperature,
) -> tuple[LossBreakdown, dict[str, np.ndarray | float]]:
    """Total loss and its analytic gradients w.r.t. every encoder weight and log(tau).

    ``features`` maps each view (drone, panorama, satellite, text) to a
    (B, dim_in) array of raw inputs. Gradients are returned under the view
    names plus "log_tau".
    """
    views = ALL_VIEWS
    x = {v: np.asarray(features[v], dtype=np.float64) for v in views}
    n_rows = x["drone"].shape[0]
    for v in views:
        if x[v].shape[0] != n_rows:
            raise BatchMisaligned(f"{v} has {x[v].shape[0]} rows, expected {n_rows}")
        if not np.all(np.isfinite(x[v])):
            raise NonFiniteGradient(f"non-finite input features for view {v}")

    tau = t.tau
    y = {v: x[v] @ encoders[v].weight.T for v in views}
    norms = {v: np.linalg.norm(y[v], axis=1, keepdims=True) for v in views}
    z = {v: y[v] / norms[v] for v in views}

    pair_groups = ((IMAGE_PAIRS, 1.0 / 3.0), (TEXT_PAIRS, 1.0 / 3.0))
    dz = {v: np.zeros_like(z[v]) for v in views}
    dlog_tau = 0.0
    pair_values: dict[tuple[str, str], float] = {}
    eye = np.eye(n_rows)
    for pairs, weight in pair_groups:
        for u, v in pairs:
            scores = (z[u] @ z[v].T) / tau
            probs = _softmax_rows(scores)
            shifted = scores - scores.max(axis=1, keepdims=True)
            log_z = np.log(np.exp(shifted).sum(axis=1))
            pair_values[(u, v)] = float(np.mean(log_z - np.diag(shifted)))
            grad_s = (probs - eye) / n_rows  # d(pair loss)/d(scores)
            dz[u] += weight * (grad_s @ z[v]) / tau
            dz[v] += weight * (grad_s.T @ z[u]) / tau
            dlog_tau += weight * (-float(np.sum(grad_s * scores)))

    grads: dict[str, np.ndarray | float] = {}
    for v in views:
        # Back through row normalization: remove the component along z.
        dy = (dz[v] - z[v] * np.sum(z[v] * dz[v], axis=1, keepdims=True)) / norms[v]
        grads[v] = dy.T @ x[v]
    grads["log_tau"] = dlog_tau

    for v in views:
        if not np.all(np.isfinite(grads[v])):
            raise NonFiniteGradient(f"non-finite gradient for encoder {v}")
    if not math.isfinite(dlog_tau):
        raise NonFiniteGradient("non-finite gradient for log_tau")

    img = float(np.mean([pair_values[p] for p in IMAGE_PAIRS]))
    txt = float(np.mean([pair_values[p] for p in TEXT_PAIRS]))
    breakdown = LossBreakdown(
        drone_satellite=pair_values[("drone", "satellite")],
        satellite_panorama=pair_values[("satellite", "panorama")],
        panorama_drone=pair_values[("panorama", "drone")],
        text_drone=pair_values[("text", "drone")],
        text_panorama=pair_values[("text", "panorama")],
        text_satellite=pair_values[("text", "satellite")],
        image_loss=img,
        text_loss=txt,
        total_loss=img + txt,
    )
    return breakdown, grads


class SharedLatentGenerator:
    """Synthetic aligned quadruples: per-view invertible distortions of one latent.

    Each instance draws a latent vector; every view observes a fixed random
    orthogonal mix of it plus isotropic noise. Orthogonal mixes keep the
    recovery problem well-conditioned.
    """

    def __init__(self, dim: int, noise: float = 0.05, rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.dim = dim
        self.noise = noise
        self.mixes = {}
        for view in ALL_VIEWS:
            q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
            self.mixes[view] = q

    def sample(self, n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        latent = rng.standard_normal((n, self.dim))
        return {
            view: latent @ mix.T + self.noise * rng.standard_normal((n, self.dim))
            for view, mix in self.mixes.items()
        }


@dataclass
class TrainResult:
    encoders: dict[str, LinearEncoder]
    temperature: Temperature
    trace: list[tuple[int, float, float, float, float]]  # step, L_img, L_text, L_total, tau


def train_toy(
    config: TrainConfig,
    generator: SharedLatentGenerator | None = None,
    step_callback: Callable[[int, LossBreakdown], None] | None = None,
) -> TrainResult:
    """Plain gradient descent on the total loss over synthetic aligned batches.

    Fully determined by config.seed: the generator (when not supplied), the
    encoder init, the probe batch and every training batch all come from one
    seeded stream. The trace holds the probe-batch loss after 0..steps
    updates; a non-finite loss raises Diverged.
    """
    rng = np.random.default_rng(config.seed)
    if generator is None:
        generator = SharedLatentGenerator(config.dim, rng=rng)
    encoders = {
        view: LinearEncoder(rng.standard_normal((config.dim, generator.dim)) / math.sqrt(generator.dim))
        for view in ALL_VIEWS
    }
    temperature = Temperature.from_tau(0.07)
    probe = generator.sample(config.batch_size, rng)

    trace: list[tuple[int, float, float, float, float]] = []

    def record(step: int) -> LossBreakdown:
        try:
            probe_loss, _ = loss_gradients(probe, encoders, temperature)
        except NonFiniteGradient as exc:
            raise Diverged(f"non-finite loss at step {step}: {exc}") from exc
        if not math.isfinite(probe_loss.total_loss):
            raise Diverged(f"non-finite loss at step {step}")
        trace.append(
            (step, probe_loss.image_loss, probe_loss.text_loss, probe_loss.total_loss, temperature.tau)
        )
        return probe_loss

    breakdown = record(0)
    if step_callback:
        step_callback(0, breakdown)
    for step in range(1, config.steps + 1):
        batch = generator.sample(config.batch_size, rng)
        try:
            _, grads = loss_gradients(batch, encoders, temperature)
        except NonFiniteGradient as exc:
            raise Diverged(f"non-finite gradient at step {step}: {exc}") from exc
        for view in ALL_VIEWS:
            weight = encoders[view].weight - config.learning_rate * grads[view]
            if not np.all(np.isfinite(weight)):
                raise Diverged(f"encoder {view} weights left the finite range at step {step}")
            encoders[view] = LinearEncoder(weight)
        if config.learnable_temperature:
            log_tau = temperature.log_tau - config.learning_rate * grads["log_tau"]
            # Past +-700, exp() leaves the double range and scoring degenerates.
            if not math.isfinite(log_tau) or abs(log_tau) > 700.0:
                raise Diverged(f"temperature left the usable range at step {step}: log_tau={log_tau}")
            temperature = Temperature(log_tau)
        breakdown = record(step)
        if step_callback:
            step_callback(step, breakdown)
    return TrainResult(encoders=encoders, temperature=temperature, trace=trace)


def encode_batch(view: str, ids: Sequence[int], features: np.ndarray, encoder: LinearEncoder) -> EmbeddingBatch:
    """Run features through an encoder into a unit-norm embedding batch."""
    return EmbeddingBatch(view=view, ids=tuple(ids), matrix=encoder.encode(features))


def cross_view_recall_at_1(
    encoders: Mapping[str, LinearEncoder],
    generator: SharedLatentGenerator,
    n_gallery: int,
    rng: np.random.Generator,
) -> dict[tuple[str, str], float]:
    """Top-1 retrieval accuracy for all six ordered visual view pairs on fresh data."""
    features = generator.sample(n_gallery, rng)
    ids = tuple(range(n_gallery))
    batches = {v: encode_batch(v, ids, features[v], encoders[v]) for v in VISUAL_VIEWS}
    result = {}
    for u in VISUAL_VIEWS:
        for v in VISUAL_VIEWS:
            if u == v:
                continue
            hits = sum(
                1
                for i in range(n_gallery)
                if top_k(batches[u].matrix[i], batches[v], 1)[0][0] == i
            )
            result[(u, v)] = hits / n_gallery
    return result
