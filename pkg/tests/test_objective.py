import math

import numpy as np
import pytest

from triview import objective as obj
from triview.embedding import EmbeddingBatch, Temperature, l2_normalize_rows
from triview.errors import BadTarget, BatchMisaligned, Diverged, NonFiniteGradient
from triview.objective import (
    ALL_VIEWS,
    IMAGE_PAIRS,
    TEXT_PAIRS,
    LinearEncoder,
    SharedLatentGenerator,
    TrainConfig,
    image_loss,
    infonce,
    loss_gradients,
    text_loss,
    total_loss,
    train_toy,
)

B2_EXAMPLE = math.log(1.0 + math.exp(-1.0))  # InfoNCE of [[1,0],[0,1]] with identity targets


def scalar_infonce(scores, targets=None):
    """Pure-Python softmax cross-entropy oracle (no numpy, no stabilization tricks)."""
    n = len(scores)
    if targets is None:
        targets = list(range(n))
    total = 0.0
    for i, row in enumerate(scores):
        m = max(row)
        z = sum(math.exp(v - m) for v in row)
        total += -(row[targets[i]] - m - math.log(z))
    return total / n


def scalar_total_loss(features, weights, log_tau):
    """Independent forward pass used by the finite-difference harness."""
    tau = math.exp(log_tau)
    z = {}
    for view in ALL_VIEWS:
        y = np.asarray(features[view]) @ np.asarray(weights[view]).T
        z[view] = y / np.linalg.norm(y, axis=1, keepdims=True)
    out = 0.0
    for group in (IMAGE_PAIRS, TEXT_PAIRS):
        for u, v in group:
            scores = (z[u] @ z[v].T) / tau
            out += scalar_infonce(scores.tolist()) / 3.0
    return out


def unit_batch(view, ids, rows):
    return EmbeddingBatch(view=view, ids=ids, matrix=l2_normalize_rows(np.asarray(rows, float)))


def aligned_random_batches(rng, n=4, dim=8):
    ids = tuple(range(n))
    return {
        view: unit_batch(view, ids, rng.standard_normal((n, dim)))
        for view in ("drone", "panorama", "satellite", "text")
    }


class TestInfonce:
    def test_single_candidate_zero(self):
        assert infonce(np.array([[3.7]])) == 0.0

    def test_two_by_two_frozen_value(self):
        s = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert infonce(s) == pytest.approx(B2_EXAMPLE, abs=1e-15)

    def test_uniform_equals_log_b(self):
        for b in (2, 3, 8, 64):
            s = np.full((b, b), 2.5)
            assert infonce(s) == pytest.approx(math.log(b), abs=1e-12)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            b = int(rng.integers(1, 9))
            s = rng.standard_normal((b, b)) * 5
            targets = [int(rng.integers(0, b)) for _ in range(b)]
            assert infonce(s, targets) == pytest.approx(scalar_infonce(s.tolist(), targets), abs=1e-10)

    def test_row_shift_invariance(self):
        rng = np.random.default_rng(22)
        s = rng.standard_normal((6, 6))
        shifted = s + rng.standard_normal((6, 1)) * 10
        assert infonce(shifted) == pytest.approx(infonce(s), abs=1e-10)

    def test_nonnegative(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            s = rng.standard_normal((5, 5)) * 3
            assert infonce(s) >= 0.0

    def test_bad_target(self):
        with pytest.raises(BadTarget):
            infonce(np.zeros((2, 2)), targets=[0, 2])
        with pytest.raises(BadTarget):
            infonce(np.zeros((2, 3)))  # identity targets need a square matrix


class TestImageLoss:
    def test_identical_orthogonal_batches(self):
        rows = np.eye(2)
        batches = [unit_batch(v, (0, 1), rows) for v in ("drone", "panorama", "satellite")]
        value = image_loss(*batches, Temperature.from_tau(1.0))
        assert value == pytest.approx(B2_EXAMPLE, abs=1e-12)

    def test_degenerate_batch(self):
        batches = [unit_batch(v, (0,), [[1.0, 0.0]]) for v in ("drone", "panorama", "satellite")]
        assert image_loss(*batches, Temperature.from_tau(1.0)) == 0.0

    def test_permutation_symmetry(self):
        rng = np.random.default_rng(24)
        batches = aligned_random_batches(rng, n=5)
        t = Temperature.from_tau(0.3)
        base = image_loss(batches["drone"], batches["panorama"], batches["satellite"], t)
        perm = rng.permutation(5)
        permuted = {
            view: EmbeddingBatch(view=view, ids=tuple(int(i) for i in perm), matrix=b.matrix[perm])
            for view, b in batches.items()
        }
        after = image_loss(permuted["drone"], permuted["panorama"], permuted["satellite"], t)
        assert after == pytest.approx(base, abs=1e-12)

    def test_misaligned_ids(self):
        rng = np.random.default_rng(25)
        batches = aligned_random_batches(rng)
        bad = EmbeddingBatch(
            view="satellite", ids=(9, 1, 2, 3), matrix=batches["satellite"].matrix
        )
        with pytest.raises(BatchMisaligned):
            image_loss(batches["drone"], batches["panorama"], bad, Temperature())

    def test_symmetric_mode_averages_directions(self):
        rng = np.random.default_rng(26)
        batches = aligned_random_batches(rng)
        t = Temperature.from_tau(0.5)
        sym = image_loss(
            batches["drone"], batches["panorama"], batches["satellite"], t, symmetric=True
        )
        by_view = {v: batches[v] for v in ("drone", "panorama", "satellite")}
        expected = np.mean(
            [
                0.5
                * (
                    infonce((by_view[u].matrix @ by_view[v].matrix.T) / t.tau)
                    + infonce((by_view[v].matrix @ by_view[u].matrix.T) / t.tau)
                )
                for u, v in IMAGE_PAIRS
            ]
        )
        assert sym == pytest.approx(float(expected), abs=1e-12)


class TestTextLoss:
    def test_text_equal_to_views(self):
        rng = np.random.default_rng(27)
        rows = rng.standard_normal((4, 6))
        batches = {v: unit_batch(v, tuple(range(4)), rows) for v in ALL_VIEWS}
        t = Temperature.from_tau(0.7)
        img = image_loss(batches["drone"], batches["panorama"], batches["satellite"], t)
        txt = text_loss(
            batches["text"], batches["drone"], batches["panorama"], batches["satellite"], t
        )
        assert txt == pytest.approx(img, abs=1e-12)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(28)
        batches = aligned_random_batches(rng, n=4, dim=8)
        t = Temperature.from_tau(0.2)
        expected = np.mean(
            [
                scalar_infonce(((batches["text"].matrix @ batches[v].matrix.T) / t.tau).tolist())
                for _, v in TEXT_PAIRS
            ]
        )
        value = text_loss(
            batches["text"], batches["drone"], batches["panorama"], batches["satellite"], t
        )
        assert value == pytest.approx(float(expected), abs=1e-10)


class TestTotalLoss:
    def test_degenerate_batch_all_zero(self):
        batches = {v: unit_batch(v, (0,), [[0.0, 1.0]]) for v in ALL_VIEWS}
        breakdown = total_loss(
            batches["drone"], batches["panorama"], batches["satellite"], batches["text"],
            Temperature.from_tau(1.0),
        )
        assert all(value == 0.0 for value in breakdown.as_dict().values())

    def test_identical_batches_symmetry(self):
        rng = np.random.default_rng(29)
        rows = rng.standard_normal((5, 7))
        batches = {v: unit_batch(v, tuple(range(5)), rows) for v in ALL_VIEWS}
        breakdown = total_loss(
            batches["drone"], batches["panorama"], batches["satellite"], batches["text"],
            Temperature.from_tau(0.3),
        )
        assert breakdown.image_loss == pytest.approx(breakdown.text_loss, abs=1e-12)
        assert breakdown.total_loss == pytest.approx(2 * breakdown.image_loss, abs=1e-12)

    def test_total_is_sum(self):
        rng = np.random.default_rng(30)
        batches = aligned_random_batches(rng, n=6)
        breakdown = total_loss(
            batches["drone"], batches["panorama"], batches["satellite"], batches["text"],
            Temperature(),
        )
        assert breakdown.total_loss == breakdown.image_loss + breakdown.text_loss
        assert breakdown.image_loss == pytest.approx(
            np.mean(
                [breakdown.drone_satellite, breakdown.satellite_panorama, breakdown.panorama_drone]
            ),
            abs=1e-15,
        )

    def test_per_pair_temperature_override(self):
        rng = np.random.default_rng(31)
        batches = aligned_random_batches(rng, n=4)
        shared = Temperature.from_tau(0.1)
        override = {("drone", "satellite"): Temperature.from_tau(1.0)}
        base = total_loss(
            batches["drone"], batches["panorama"], batches["satellite"], batches["text"], shared
        )
        tweaked = total_loss(
            batches["drone"], batches["panorama"], batches["satellite"], batches["text"], shared,
            pair_temperatures=override,
        )
        assert tweaked.drone_satellite != base.drone_satellite
        assert tweaked.satellite_panorama == base.satellite_panorama
        assert tweaked.text_drone == base.text_drone


class TestGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(32)
        feats = {v: rng.standard_normal((4, 6)) for v in ALL_VIEWS}
        encoders = {v: LinearEncoder(rng.standard_normal((8, 6)) / 2) for v in ALL_VIEWS}
        t = Temperature.from_tau(0.07)
        breakdown, grads = loss_gradients(feats, encoders, t)
        weights = {v: encoders[v].weight for v in ALL_VIEWS}
        assert breakdown.total_loss == pytest.approx(
            scalar_total_loss(feats, weights, t.log_tau), abs=1e-10
        )
        h = 1e-4
        worst = 0.0
        for v in ALL_VIEWS:
            for i in range(0, 8, 3):
                for j in range(0, 6, 2):
                    w_plus = {k: w.copy() for k, w in weights.items()}
                    w_minus = {k: w.copy() for k, w in weights.items()}
                    w_plus[v][i, j] += h
                    w_minus[v][i, j] -= h
                    fd = (
                        scalar_total_loss(feats, w_plus, t.log_tau)
                        - scalar_total_loss(feats, w_minus, t.log_tau)
                    ) / (2 * h)
                    rel = abs(grads[v][i, j] - fd) / max(abs(grads[v][i, j]), abs(fd), 1e-6)
                    worst = max(worst, rel)
        fd_tau = (
            scalar_total_loss(feats, weights, t.log_tau + h)
            - scalar_total_loss(feats, weights, t.log_tau - h)
        ) / (2 * h)
        worst = max(worst, abs(grads["log_tau"] - fd_tau) / max(abs(fd_tau), 1e-6))
        assert worst < 1e-5

    def test_uniform_point_has_zero_tau_gradient(self):
        # Every view sees identical rows, so all six score matrices are constant.
        row = np.array([1.0, 2.0, 3.0, 4.0])
        feats = {v: np.tile(row, (5, 1)) for v in ALL_VIEWS}
        encoders = {v: LinearEncoder(np.eye(4)) for v in ALL_VIEWS}
        _, grads = loss_gradients(feats, encoders, Temperature.from_tau(0.07))
        assert grads["log_tau"] == pytest.approx(0.0, abs=1e-12)

    def test_feature_scaling_absorbed_by_normalization(self):
        rng = np.random.default_rng(33)
        feats = {v: rng.standard_normal((4, 5)) for v in ALL_VIEWS}
        scaled = {v: 2.0 * f for v, f in feats.items()}
        encoders = {v: LinearEncoder(rng.standard_normal((6, 5))) for v in ALL_VIEWS}
        t = Temperature.from_tau(0.3)
        base_loss, base_grads = loss_gradients(feats, encoders, t)
        scaled_loss, scaled_grads = loss_gradients(scaled, encoders, t)
        assert scaled_loss.total_loss == pytest.approx(base_loss.total_loss, abs=1e-12)
        for v in ALL_VIEWS:
            assert np.allclose(scaled_grads[v], base_grads[v], atol=1e-12)

    def test_non_finite_features_rejected(self):
        feats = {v: np.ones((2, 3)) for v in ALL_VIEWS}
        feats["drone"] = np.array([[np.inf, 1.0, 1.0], [1.0, 1.0, 1.0]])
        encoders = {v: LinearEncoder(np.eye(3)) for v in ALL_VIEWS}
        with pytest.raises(NonFiniteGradient):
            loss_gradients(feats, encoders, Temperature())


class TestTrainToy:
    def test_zero_steps_identity(self):
        result = train_toy(TrainConfig(steps=0))
        assert len(result.trace) == 1
        assert result.trace[0][0] == 0
        # The loop never ran: encoders equal a fresh reconstruction from the seed.
        again = train_toy(TrainConfig(steps=0))
        for view in ALL_VIEWS:
            assert np.array_equal(result.encoders[view].weight, again.encoders[view].weight)

    def test_same_seed_same_trace(self):
        a = train_toy(TrainConfig(steps=10))
        b = train_toy(TrainConfig(steps=10))
        assert a.trace == b.trace
        for view in ALL_VIEWS:
            assert np.array_equal(a.encoders[view].weight, b.encoders[view].weight)

    def test_loss_decreases(self):
        result = train_toy(TrainConfig(steps=50))
        assert result.trace[-1][3] < result.trace[0][3]
        assert all(math.isfinite(row[3]) for row in result.trace)

    def test_fixed_temperature_stays_fixed(self):
        result = train_toy(TrainConfig(steps=10, learnable_temperature=False))
        assert all(row[4] == pytest.approx(0.07, rel=1e-12) for row in result.trace)

    def test_divergence_detected(self):
        with pytest.raises(Diverged):
            train_toy(TrainConfig(steps=3, learning_rate=1e300))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(batch_size=1)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)

    def test_generator_shapes_and_determinism(self):
        rng = np.random.default_rng(34)
        gen = SharedLatentGenerator(8, rng=rng)
        sample = gen.sample(5, np.random.default_rng(1))
        assert set(sample) == set(ALL_VIEWS)
        assert all(arr.shape == (5, 8) for arr in sample.values())
        sample2 = gen.sample(5, np.random.default_rng(1))
        for view in ALL_VIEWS:
            assert np.array_equal(sample[view], sample2[view])

    def test_cross_view_recall_on_trained_encoders(self):
        config = TrainConfig(steps=60)
        rng = np.random.default_rng(config.seed)
        gen = SharedLatentGenerator(config.dim, rng=rng)
        result = train_toy(config, generator=gen)
        recall = obj.cross_view_recall_at_1(result.encoders, gen, 50, rng)
        assert set(recall) == {(u, v) for u in obj.VISUAL_VIEWS for v in obj.VISUAL_VIEWS if u != v}
        assert min(recall.values()) >= 0.8
