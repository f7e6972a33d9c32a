"""Physics-plausible synthetic pouring sequences.

The generator is plumbing: it produces ready-to-train datasets with the
real schema (angle ramp, flat-then-drop weight curve, static features)
without claiming fidelity to any particular recorded distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import PouringSequence, StaticFeatures, TimeStep

DEFAULT_MATERIALS = (("water", 1.0), ("beans", 0.85), ("ice", 0.92))


@dataclass(frozen=True)
class SynthParams:
    """Knobs for the synthetic generator; ranges are sampled uniformly."""

    num_sequences: int = 200
    length_range: tuple = (20, 50)  # timesteps, inclusive
    materials: tuple = DEFAULT_MATERIALS  # (name, relative density) pairs
    d_cup_range: tuple = (60.0, 120.0)  # mm
    h_cup_range: tuple = (80.0, 160.0)  # mm
    d_cta_range: tuple = (50.0, 110.0)  # mm
    h_cta_range: tuple = (70.0, 150.0)  # mm
    empty_weight_range: tuple = (0.1, 0.5)  # lbf
    fill_weight_range: tuple = (0.2, 2.0)  # lbf
    noise_std: float = 0.01  # lbf, observation noise
    seed: int = 0
    max_angle_range_deg: tuple = (60.0, 120.0)
    spill_fraction_range: tuple = (0.25, 0.7)  # of the max angle
    pour_fraction_range: tuple = (0.3, 0.95)  # of the fill weight
    ramp_steepness_range: tuple = (6.0, 12.0)

    def __post_init__(self):
        if self.num_sequences < 1:
            raise ValueError("num_sequences must be at least 1")
        t_min, t_max = self.length_range
        if t_min < 5 or t_max < t_min:
            raise ValueError("length_range needs 5 <= T_min <= T_max")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be non-negative")
        if not self.materials:
            raise ValueError("need at least one material")
        for name, rho in self.materials:
            if rho <= 0.0:
                raise ValueError(f"material {name!r} needs a positive density")
        for label in ("d_cup_range", "h_cup_range", "d_cta_range",
                      "h_cta_range", "empty_weight_range", "fill_weight_range",
                      "max_angle_range_deg", "spill_fraction_range",
                      "pour_fraction_range", "ramp_steepness_range"):
            lo, hi = getattr(self, label)
            if not (0.0 < lo < hi):
                raise ValueError(f"{label} must be positive and non-degenerate")


def angle_ramp(num_steps: int, max_angle_deg: float, steepness: float) -> np.ndarray:
    """Monotone sigmoid-shaped ramp from exactly 0 to exactly max_angle_deg."""
    if num_steps < 2:
        return np.zeros(num_steps)
    u = np.linspace(0.0, 1.0, num_steps)
    g = 1.0 / (1.0 + np.exp(-steepness * (u - 0.5)))
    return max_angle_deg * ((g - g[0]) / (g[-1] - g[0]))


def weight_profile(thetas, spill_angle_deg: float, f_init: float,
                   f_target: float) -> np.ndarray:
    """Latent noise-free weight curve over a monotone angle ramp.

    Flat at f_init until the angle crosses the spill threshold, then a
    smoothstep-shaped monotone drop reaching f_target at the final angle.
    If the threshold is never crossed the curve stays at f_init. The
    first value is exactly f_init and the curve never increases.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    theta_max = thetas[-1]
    if spill_angle_deg >= theta_max:
        return np.full(thetas.shape, float(f_init))
    s = np.clip((thetas - spill_angle_deg) / (theta_max - spill_angle_deg),
                0.0, 1.0)
    poured = s * s * (3.0 - 2.0 * s)
    # rounding guard: keep the poured fraction non-decreasing bit-for-bit
    poured = np.maximum.accumulate(poured)
    return f_init - (f_init - f_target) * poured


def generate_sequence(params: SynthParams, rng, seq_id: str | None = None) -> PouringSequence:
    """Sample one pouring demonstration from the generator model."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    t_min, t_max = params.length_range
    num_steps = int(rng.integers(t_min, t_max + 1))
    material, rho = params.materials[int(rng.integers(len(params.materials)))]
    d_cup = rng.uniform(*params.d_cup_range)
    h_cup = rng.uniform(*params.h_cup_range)
    d_cta = rng.uniform(*params.d_cta_range)
    h_cta = rng.uniform(*params.h_cta_range)
    f_empty = rng.uniform(*params.empty_weight_range)
    fill = rng.uniform(*params.fill_weight_range)
    f_init = f_empty + fill
    max_angle = rng.uniform(*params.max_angle_range_deg)
    steepness = rng.uniform(*params.ramp_steepness_range)
    # fuller cups spill earlier: tie the spill fraction to the fill level
    # (1 lbf of water is roughly 453600 mm^3), plus a little sampled jitter
    capacity = np.pi * (d_cta / 2.0) ** 2 * h_cta
    fill_level = min(1.0, 453600.0 * fill / rho / capacity)
    lo, hi = params.spill_fraction_range
    spill_fraction = lo + (hi - lo) * (1.0 - fill_level)
    spill_fraction += 0.1 * (hi - lo) * rng.uniform(-1.0, 1.0)
    spill_angle = max_angle * min(hi, max(lo, spill_fraction))
    poured_fraction = rng.uniform(*params.pour_fraction_range)
    f_target = f_empty + (1.0 - poured_fraction) * fill

    thetas = angle_ramp(num_steps, max_angle, steepness)
    latent = weight_profile(thetas, spill_angle, f_init, f_target)
    noise = rng.standard_normal(num_steps)
    if params.noise_std > 0.0:
        observed = np.maximum(latent + params.noise_std * noise, f_empty)
    else:
        observed = latent
    if seq_id is None:
        seq_id = f"synth-{material}-{rng.integers(2 ** 63):016x}"

    statics = StaticFeatures(f_init=float(f_init), f_empty=float(f_empty),
                             f_final=float(latent[-1]), d_cup=float(d_cup),
                             h_cup=float(h_cup), d_cta=float(d_cta),
                             h_cta=float(h_cta), rho=float(rho))
    steps = tuple(TimeStep(theta_deg=float(t), f_lbf=float(f))
                  for t, f in zip(thetas, observed))
    return PouringSequence(id=seq_id, steps=steps, statics=statics)


def generate_dataset(params: SynthParams):
    """Sample num_sequences demonstrations, one derived seed per sequence."""
    children = np.random.SeedSequence(params.seed).spawn(params.num_sequences)
    return [generate_sequence(params, np.random.default_rng(child),
                              seq_id=f"synth-{i:05d}")
            for i, child in enumerate(children)]
