"""Pouring dataset schema: force formulas, normalization, padding and splits.

A pouring demonstration is a variable-length sequence of (rotation angle,
sensed weight) steps plus eight static container/material features. The
weight at each step is the prediction target; the angle and the statics
form the 9-wide input feature vector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from statistics import fmean

import numpy as np

INPUT_FEATURES = (
    "theta",
    "f_init",
    "f_empty",
    "f_final",
    "d_cup",
    "h_cup",
    "d_cta",
    "h_cta",
    "rho",
)
NUM_INPUT_FEATURES = len(INPUT_FEATURES)

NORMALIZATION_MODES = ("linear", "sigmoid", "tanh")


def _coerce_float_fields(obj, names):
    for name in names:
        object.__setattr__(obj, name, float(getattr(obj, name)))


class DatasetParseError(ValueError):
    """A dataset line is not a valid record."""


class DatasetSchemaError(ValueError):
    """A dataset record is missing or mistypes a required field."""


@dataclass(frozen=True)
class RawForceReading:
    """One force-sensor sample, axis components in lbf."""

    fx: float
    fy: float
    fz: float

    def __post_init__(self):
        _coerce_float_fields(self, ("fx", "fy", "fz"))
        if not all(math.isfinite(v) for v in (self.fx, self.fy, self.fz)):
            raise ValueError("force components must be finite")


@dataclass(frozen=True)
class TimeStep:
    """One timestep of a pouring sequence."""

    theta_deg: float  # rotation angle (degrees)
    f_lbf: float  # sensed weight (lbf)

    def __post_init__(self):
        _coerce_float_fields(self, ("theta_deg", "f_lbf"))
        if not math.isfinite(self.theta_deg):
            raise ValueError("theta_deg must be finite")
        if not (math.isfinite(self.f_lbf) and self.f_lbf >= 0.0):
            raise ValueError("f_lbf must be finite and non-negative")


@dataclass(frozen=True)
class StaticFeatures:
    """Per-sequence constants: weights around the pour, geometry, density."""

    f_init: float  # weight before pouring (lbf)
    f_empty: float  # weight while the cup is empty (lbf)
    f_final: float  # weight after pouring (lbf)
    d_cup: float  # receiving-cup diameter (mm)
    h_cup: float  # receiving-cup height (mm)
    d_cta: float  # pouring-cup diameter (mm)
    h_cta: float  # pouring-cup height (mm)
    rho: float  # material density relative to water (unitless)

    def __post_init__(self):
        _coerce_float_fields(self, ("f_init", "f_empty", "f_final", "d_cup",
                                    "h_cup", "d_cta", "h_cta", "rho"))
        values = (self.f_init, self.f_empty, self.f_final,
                  self.d_cup, self.h_cup, self.d_cta, self.h_cta, self.rho)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("static features must be finite")
        if not self.f_empty <= self.f_final <= self.f_init:
            raise ValueError(
                f"expected f_empty <= f_final <= f_init, got "
                f"({self.f_empty}, {self.f_final}, {self.f_init})")
        if min(self.d_cup, self.h_cup, self.d_cta, self.h_cta) <= 0.0:
            raise ValueError("container geometry must be positive")
        if self.rho <= 0.0:
            raise ValueError("relative density must be positive")

    def as_tuple(self):
        return (self.f_init, self.f_empty, self.f_final, self.d_cup,
                self.h_cup, self.d_cta, self.h_cta, self.rho)


@dataclass(frozen=True)
class PouringSequence:
    """One pouring demonstration: ordered timesteps plus static features."""

    id: str
    steps: tuple
    statics: StaticFeatures

    def __post_init__(self):
        if len(self.steps) == 0:
            raise ValueError("a pouring sequence needs at least one step")
        object.__setattr__(self, "steps", tuple(self.steps))

    def __len__(self):
        return len(self.steps)

    def thetas(self) -> np.ndarray:
        return np.array([s.theta_deg for s in self.steps], dtype=np.float64)

    def weights(self) -> np.ndarray:
        return np.array([s.f_lbf for s in self.steps], dtype=np.float64)

    def input_matrix(self) -> np.ndarray:
        """Raw (unnormalized) per-step input features, shape [len, 9]."""
        feats = np.empty((len(self.steps), NUM_INPUT_FEATURES), dtype=np.float64)
        feats[:, 0] = self.thetas()
        feats[:, 1:] = self.statics.as_tuple()
        return feats


@dataclass(frozen=True, eq=False)
class NormalizationSpec:
    """Target scaling plus per-feature input standardization.

    Target scaling follows the output head: sigmoid scales training
    targets into [0, 1], tanh into [-1, 1], linear leaves them alone.
    Targets outside the training range (e.g. from a test set) map outside
    those intervals; no clipping is applied. Inputs are z-scored with
    statistics fitted on training data only.
    """

    mode: str
    target_min: float
    target_max: float
    input_mean: np.ndarray  # [9]
    input_std: np.ndarray  # [9], zero-variance features fall back to 1.0

    def __post_init__(self):
        if self.mode not in NORMALIZATION_MODES:
            raise ValueError(f"unknown normalization mode {self.mode!r}")
        if self.input_mean.shape != (NUM_INPUT_FEATURES,):
            raise ValueError("input_mean must have one entry per input feature")
        if self.input_std.shape != (NUM_INPUT_FEATURES,):
            raise ValueError("input_std must have one entry per input feature")
        if np.any(self.input_std <= 0.0):
            raise ValueError("input_std entries must be positive")

    def normalize_targets(self, values):
        values = np.asarray(values, dtype=np.float64)
        if self.mode == "linear":
            return values.copy()
        span = self.target_max - self.target_min
        scaled = (values - self.target_min) / span
        if self.mode == "sigmoid":
            return scaled
        return 2.0 * scaled - 1.0

    def denormalize_targets(self, values):
        values = np.asarray(values, dtype=np.float64)
        if self.mode == "linear":
            return values.copy()
        span = self.target_max - self.target_min
        if self.mode == "sigmoid":
            return values * span + self.target_min
        return (values + 1.0) * 0.5 * span + self.target_min

    def normalize_inputs(self, features):
        features = np.asarray(features, dtype=np.float64)
        return (features - self.input_mean) / self.input_std


@dataclass(eq=False)
class PaddedBatch:
    """Fixed-length, mask-annotated batch in time-major layout.

    inputs[t, b, :] holds the normalized features of sequence b at step t
    for t < lengths[b] and zeros afterwards; mask flags the real steps.
    """

    inputs: np.ndarray  # [T_max, B, F]
    targets: np.ndarray  # [T_max, B]
    mask: np.ndarray  # [T_max, B] of {0.0, 1.0}
    lengths: np.ndarray  # [B]

    def __post_init__(self):
        t_max, b = self.targets.shape
        if self.inputs.shape[:2] != (t_max, b) or self.inputs.ndim != 3:
            raise ValueError("inputs must be [T_max, B, F]")
        if self.mask.shape != (t_max, b):
            raise ValueError("mask must match targets shape")
        if self.lengths.shape != (b,):
            raise ValueError("lengths must have one entry per batch member")
        if np.any(self.lengths < 1) or np.any(self.lengths > t_max):
            raise ValueError("lengths must lie in [1, T_max]")
        expected = (np.arange(t_max)[:, None] < self.lengths[None, :])
        if not np.array_equal(self.mask, expected.astype(np.float64)):
            raise ValueError("mask must be 1 exactly where t < lengths[b]")
        padded = ~expected
        if np.any(self.inputs[padded] != 0.0) or np.any(self.targets[padded] != 0.0):
            raise ValueError("padded cells must hold zeros")

    @property
    def num_steps(self) -> int:
        return self.targets.shape[0]

    @property
    def batch_size(self) -> int:
        return self.targets.shape[1]

    @property
    def num_features(self) -> int:
        return self.inputs.shape[2]


def sensed_force(reading: RawForceReading) -> float:
    """Euclidean norm of the three force axes, the container-weight proxy."""
    return math.sqrt(reading.fx ** 2 + reading.fy ** 2 + reading.fz ** 2)


def average_initial_force(samples) -> float:
    """Mean of a burst of sensed-force samples taken before the pour."""
    samples = list(samples)
    if not samples:
        raise ValueError("cannot average an empty sample list")
    return fmean(samples)


def split_dataset(sequences, seed: int):
    """Deterministic 70/27/3 split: floor(0.7 N) train, then floor(0.9 R)
    of the remainder R for validation, the rest for the internal test.

    Integer arithmetic keeps the floor rule exact for any N.
    """
    sequences = list(sequences)
    n = len(sequences)
    if n < 10:
        raise ValueError(f"need at least 10 sequences to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = (7 * n) // 10
    remainder = n - n_train
    n_val = (9 * remainder) // 10
    train = [sequences[i] for i in order[:n_train]]
    val = [sequences[i] for i in order[n_train:n_train + n_val]]
    test = [sequences[i] for i in order[n_train + n_val:]]
    return train, val, test


def fit_normalization(train, mode: str) -> NormalizationSpec:
    """Fit target scaling and input z-score statistics on training data."""
    train = list(train)
    if not train:
        raise ValueError("cannot fit normalization on an empty training set")
    if mode not in NORMALIZATION_MODES:
        raise ValueError(f"unknown normalization mode {mode!r}")
    targets = np.concatenate([seq.weights() for seq in train])
    f_min = float(targets.min())
    f_max = float(targets.max())
    if f_max == f_min:
        raise ValueError(
            f"degenerate target range: all training targets equal {f_min}")
    inputs = np.concatenate([seq.input_matrix() for seq in train], axis=0)
    mean = inputs.mean(axis=0)
    std = inputs.std(axis=0)
    std[std == 0.0] = 1.0  # constant features map to exactly zero
    return NormalizationSpec(mode=mode, target_min=f_min, target_max=f_max,
                             input_mean=mean, input_std=std)


def pad_and_batch(seqs, spec: NormalizationSpec) -> PaddedBatch:
    """Normalize and post-pad sequences to the batch maximum length."""
    seqs = list(seqs)
    if not seqs:
        raise ValueError("cannot batch an empty sequence list")
    lengths = np.array([len(s) for s in seqs], dtype=np.int64)
    t_max = int(lengths.max())
    b = len(seqs)
    inputs = np.zeros((t_max, b, NUM_INPUT_FEATURES), dtype=np.float64)
    targets = np.zeros((t_max, b), dtype=np.float64)
    mask = np.zeros((t_max, b), dtype=np.float64)
    for i, seq in enumerate(seqs):
        n = len(seq)
        inputs[:n, i, :] = spec.normalize_inputs(seq.input_matrix())
        targets[:n, i] = spec.normalize_targets(seq.weights())
        mask[:n, i] = 1.0
    return PaddedBatch(inputs=inputs, targets=targets, mask=mask, lengths=lengths)


_STATIC_FIELDS = ("f_init", "f_empty", "f_final",
                  "d_cup", "h_cup", "d_cta", "h_cta", "rho")


def save_dataset(seqs, path) -> None:
    """Write one record per line; floats use shortest lossless repr."""
    with open(path, "w", encoding="utf-8") as fh:
        for seq in seqs:
            record = {"id": seq.id}
            for name in _STATIC_FIELDS:
                record[name] = float(getattr(seq.statics, name))
            record["steps"] = [{"theta": float(s.theta_deg),
                                "f": float(s.f_lbf)} for s in seq.steps]
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def load_dataset(path):
    """Read a line-delimited dataset written by save_dataset.

    Raises DatasetParseError for unparseable lines and DatasetSchemaError
    for records that are missing fields or violate sequence invariants;
    both name the offending 1-based line.
    """
    sequences = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(f"line {lineno}: {exc}") from exc
            sequences.append(_record_to_sequence(record, lineno))
    return sequences


def _record_to_sequence(record, lineno: int) -> PouringSequence:
    if not isinstance(record, dict):
        raise DatasetSchemaError(f"line {lineno}: record must be an object")
    for name in ("id", *_STATIC_FIELDS, "steps"):
        if name not in record:
            raise DatasetSchemaError(f"line {lineno}: missing field {name!r}")
    try:
        statics = StaticFeatures(**{name: float(record[name])
                                    for name in _STATIC_FIELDS})
        steps = []
        for step in record["steps"]:
            if "theta" not in step or "f" not in step:
                raise DatasetSchemaError(
                    f"line {lineno}: step needs 'theta' and 'f' fields")
            steps.append(TimeStep(theta_deg=float(step["theta"]),
                                  f_lbf=float(step["f"])))
        return PouringSequence(id=str(record["id"]), steps=tuple(steps),
                               statics=statics)
    except DatasetSchemaError:
        raise
    except (TypeError, ValueError) as exc:
        raise DatasetSchemaError(f"line {lineno}: {exc}") from exc
