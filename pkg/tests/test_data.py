"""Schema, force formulas, normalization, padding and split behavior."""

import itertools

import numpy as np
import pytest

from pournet.data import (DatasetParseError, DatasetSchemaError,
                          PaddedBatch, PouringSequence,
                          RawForceReading, StaticFeatures, TimeStep,
                          average_initial_force, fit_normalization,
                          load_dataset, pad_and_batch, save_dataset,
                          sensed_force, split_dataset)
from pournet.optim import mse_loss


def make_sequence(seq_id, weights, thetas=None, statics=None):
    weights = list(weights)
    if thetas is None:
        thetas = np.linspace(0.0, 90.0, len(weights))
    if statics is None:
        statics = StaticFeatures(f_init=max(weights), f_empty=min(weights),
                                 f_final=min(weights), d_cup=80.0, h_cup=100.0,
                                 d_cta=70.0, h_cta=110.0, rho=1.0)
    steps = tuple(TimeStep(theta_deg=float(t), f_lbf=float(w))
                  for t, w in zip(thetas, weights))
    return PouringSequence(id=str(seq_id), steps=steps, statics=statics)


def tiny_dataset(n, seed=0):
    rng = np.random.default_rng(seed)
    seqs = []
    for i in range(n):
        length = int(rng.integers(3, 9))
        top = float(rng.uniform(1.0, 2.0))
        weights = np.linspace(top, top * 0.4, length)
        seqs.append(make_sequence(f"seq-{i:04d}", weights))
    return seqs


class TestSensedForce:
    def test_pythagorean_triple(self):
        assert sensed_force(RawForceReading(3.0, 4.0, 0.0)) == 5.0

    def test_zero(self):
        assert sensed_force(RawForceReading(0.0, 0.0, 0.0)) == 0.0

    def test_unit_diagonal(self):
        value = sensed_force(RawForceReading(1.0, 1.0, 1.0))
        assert value == pytest.approx(1.7320508075688772, rel=1e-12)

    def test_sign_and_permutation_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            fx, fy, fz = rng.uniform(-10, 10, size=3)
            base = sensed_force(RawForceReading(fx, fy, fz))
            for signs in itertools.product((1, -1), repeat=3):
                for perm in itertools.permutations((fx, fy, fz)):
                    flipped = RawForceReading(*(s * v for s, v in zip(signs, perm)))
                    assert sensed_force(flipped) == pytest.approx(base, rel=1e-12)

    def test_result_non_negative(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            r = RawForceReading(*rng.standard_normal(3))
            assert sensed_force(r) >= 0.0

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValueError):
            RawForceReading(bad, 0.0, 0.0)


class TestAverageInitialForce:
    def test_constant(self):
        assert average_initial_force([1.0, 1.0, 1.0]) == 1.0

    def test_symmetric(self):
        assert average_initial_force([0.0, 2.0]) == 1.0

    def test_burst_of_500_constant_samples(self):
        assert average_initial_force([0.73] * 500) == pytest.approx(0.73, rel=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            average_initial_force([])


class TestSplitDataset:
    def test_reference_sizes(self):
        train, val, test = split_dataset(tiny_dataset(1307), seed=0)
        assert (len(train), len(val), len(test)) == (914, 353, 40)

    def test_minimum_size(self):
        train, val, test = split_dataset(tiny_dataset(10), seed=5)
        assert (len(train), len(val), len(test)) == (7, 2, 1)

    def test_sizes_seed_independent(self):
        seqs = tiny_dataset(100)
        a = split_dataset(seqs, seed=1)
        b = split_dataset(seqs, seed=2)
        assert [len(part) for part in a] == [len(part) for part in b]
        assert {s.id for s in a[0]} != {s.id for s in b[0]}

    def test_disjoint_and_exhaustive(self):
        seqs = tiny_dataset(53)
        for seed in range(5):
            train, val, test = split_dataset(seqs, seed=seed)
            ids = [s.id for part in (train, val, test) for s in part]
            assert len(ids) == len(seqs)
            assert set(ids) == {s.id for s in seqs}

    def test_same_seed_same_membership(self):
        seqs = tiny_dataset(40)
        a = split_dataset(seqs, seed=9)
        b = split_dataset(seqs, seed=9)
        assert all([s.id for s in pa] == [s.id for s in pb]
                   for pa, pb in zip(a, b))

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            split_dataset(tiny_dataset(9), seed=0)


class TestNormalization:
    def span_dataset(self):
        return [make_sequence("a", [0.2, 0.7, 1.2])]

    def test_sigmoid_midpoint(self):
        spec = fit_normalization(self.span_dataset(), "sigmoid")
        assert spec.normalize_targets(0.7) == pytest.approx(0.5, rel=1e-12)

    def test_tanh_endpoints_exact(self):
        spec = fit_normalization(self.span_dataset(), "tanh")
        assert spec.normalize_targets(0.2) == -1.0
        assert spec.normalize_targets(1.2) == 1.0

    def test_linear_identity(self):
        spec = fit_normalization(self.span_dataset(), "linear")
        assert spec.normalize_targets(0.7) == 0.7
        assert spec.denormalize_targets(0.7) == 0.7

    @pytest.mark.parametrize("mode", ["linear", "sigmoid", "tanh"])
    def test_round_trip(self, mode):
        spec = fit_normalization(tiny_dataset(20), mode)
        rng = np.random.default_rng(1)
        values = rng.uniform(0.05, 3.0, size=200)
        back = spec.denormalize_targets(spec.normalize_targets(values))
        assert np.allclose(back, values, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("mode,lo,hi", [("sigmoid", 0.0, 1.0),
                                            ("tanh", -1.0, 1.0)])
    def test_training_targets_in_range(self, mode, lo, hi):
        seqs = tiny_dataset(25, seed=4)
        spec = fit_normalization(seqs, mode)
        for seq in seqs:
            scaled = spec.normalize_targets(seq.weights())
            assert np.all(scaled >= lo) and np.all(scaled <= hi)

    def test_outside_training_range_is_not_clipped(self):
        spec = fit_normalization(self.span_dataset(), "sigmoid")
        assert spec.normalize_targets(2.2) > 1.0
        assert spec.normalize_targets(0.0) < 0.0

    def test_degenerate_range_rejected(self):
        flat = [make_sequence("flat", [0.5, 0.5, 0.5])]
        for mode in ("linear", "sigmoid", "tanh"):
            with pytest.raises(ValueError, match="degenerate"):
                fit_normalization(flat, mode)

    def test_input_standardization(self):
        seqs = tiny_dataset(30, seed=2)
        spec = fit_normalization(seqs, "sigmoid")
        stacked = np.concatenate([spec.normalize_inputs(s.input_matrix())
                                  for s in seqs], axis=0)
        assert np.allclose(stacked.mean(axis=0), 0.0, atol=1e-10)
        varying = stacked.std(axis=0) > 0
        assert np.allclose(stacked.std(axis=0)[varying], 1.0, atol=1e-10)


class TestPadAndBatch:
    def test_mask_column_sums(self):
        seqs = [make_sequence("a", [1.0, 0.8, 0.6]),
                make_sequence("b", [1.2, 1.0, 0.8, 0.7, 0.6])]
        spec = fit_normalization(seqs, "sigmoid")
        batch = pad_and_batch(seqs, spec)
        assert batch.num_steps == 5
        assert batch.mask.sum(axis=0).tolist() == [3.0, 5.0]

    def test_single_sequence_all_real(self):
        seqs = [make_sequence("a", [1.0, 0.9, 0.8, 0.7])]
        spec = fit_normalization(seqs, "sigmoid")
        batch = pad_and_batch(seqs, spec)
        assert batch.num_steps == 4
        assert np.all(batch.mask == 1.0)

    def test_equal_lengths_no_padding(self):
        seqs = [make_sequence(i, [1.0, 0.8]) for i in range(3)]
        spec = fit_normalization(seqs, "sigmoid")
        batch = pad_and_batch(seqs, spec)
        assert np.all(batch.mask == 1.0)

    def test_statics_repeated_on_real_steps(self):
        seqs = [make_sequence("a", [1.0, 0.8, 0.6]),
                make_sequence("b", [1.2, 1.0, 0.8, 0.7])]
        spec = fit_normalization(seqs, "sigmoid")
        batch = pad_and_batch(seqs, spec)
        # columns 1..8 are statics and must be constant over real steps
        for b, seq in enumerate(seqs):
            statics = batch.inputs[:len(seq), b, 1:]
            assert np.all(statics == statics[0])

    def test_padded_cells_never_reach_masked_loss(self):
        seqs = [make_sequence("a", [1.0, 0.8]),
                make_sequence("b", [1.2, 1.0, 0.8, 0.7])]
        spec = fit_normalization(seqs, "sigmoid")
        batch = pad_and_batch(seqs, spec)
        preds = np.random.default_rng(0).standard_normal(batch.targets.shape)
        loss, grad = mse_loss(preds, batch.targets, batch.mask)
        tampered = preds.copy()
        tampered[batch.mask == 0.0] = 1e6
        loss2, grad2 = mse_loss(tampered, batch.targets, batch.mask)
        assert loss2 == loss
        assert np.array_equal(grad2[batch.mask == 1.0], grad[batch.mask == 1.0])

    def test_mask_pattern_enforced(self):
        with pytest.raises(ValueError):
            PaddedBatch(inputs=np.zeros((3, 1, 9)), targets=np.zeros((3, 1)),
                        mask=np.array([[1.0], [0.0], [1.0]]),
                        lengths=np.array([2]))


class TestDatasetFiles:
    def test_round_trip(self, tmp_path):
        seqs = tiny_dataset(3, seed=8)
        path = tmp_path / "data.jsonl"
        save_dataset(seqs, path)
        loaded = load_dataset(path)
        assert loaded == seqs

    def test_missing_field_names_line(self, tmp_path):
        seqs = tiny_dataset(2)
        path = tmp_path / "data.jsonl"
        save_dataset(seqs, path)
        lines = path.read_text().splitlines()
        import json
        record = json.loads(lines[1])
        del record["rho"]
        lines[1] = json.dumps(record)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetSchemaError, match=r"line 2.*rho"):
            load_dataset(path)

    def test_malformed_line_names_line(self, tmp_path):
        path = tmp_path / "data.jsonl"
        save_dataset(tiny_dataset(1), path)
        with open(path, "a") as fh:
            fh.write("{not json\n")
        with pytest.raises(DatasetParseError, match="line 2"):
            load_dataset(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert load_dataset(path) == []

    def test_blank_lines_skipped(self, tmp_path):
        seqs = tiny_dataset(2)
        path = tmp_path / "data.jsonl"
        save_dataset(seqs, path)
        content = path.read_text().replace("\n", "\n\n", 1)
        path.write_text(content)
        assert load_dataset(path) == seqs

    def test_missing_step_field(self, tmp_path):
        path = tmp_path / "data.jsonl"
        save_dataset(tiny_dataset(1), path)
        text = path.read_text().replace('"theta"', '"angle"')
        path.write_text(text)
        with pytest.raises(DatasetSchemaError, match="line 1"):
            load_dataset(path)


class TestDomainTypes:
    def test_static_ordering_enforced(self):
        with pytest.raises(ValueError):
            StaticFeatures(f_init=0.5, f_empty=0.2, f_final=0.6, d_cup=80,
                           h_cup=100, d_cta=70, h_cta=110, rho=1.0)

    def test_geometry_positive(self):
        with pytest.raises(ValueError):
            StaticFeatures(f_init=1.0, f_empty=0.2, f_final=0.5, d_cup=-1,
                           h_cup=100, d_cta=70, h_cta=110, rho=1.0)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            TimeStep(theta_deg=10.0, f_lbf=-0.1)

    def test_empty_sequence_rejected(self):
        statics = StaticFeatures(f_init=1.0, f_empty=0.2, f_final=0.5,
                                 d_cup=80, h_cup=100, d_cta=70, h_cta=110,
                                 rho=1.0)
        with pytest.raises(ValueError):
            PouringSequence(id="x", steps=(), statics=statics)
