"""Additive white Gaussian broadcast channel with one common and M private noises.

Receiver m observes y_m = x + z + z_m, where z is shared by every receiver
(variance ``common_noise_var``) and z_m is receiver-private (variance
``private_noise_vars[m]``).  Either component may be switched off per receiver;
an entirely noiseless channel is rejected because every schedule divides by an
output variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelConfig",
    "NoiseDraw",
    "noise_stds",
    "sample_noise",
    "transmit",
    "spawn_trial_seeds",
]


@dataclass(frozen=True)
class ChannelConfig:
    num_receivers: int
    power_budget: float
    common_noise_var: float
    private_noise_vars: tuple[float, ...]

    def __post_init__(self):
        m = self.num_receivers
        if not isinstance(m, (int, np.integer)) or isinstance(m, bool) or m < 1:
            raise ValueError("num_receivers must be a positive integer")
        object.__setattr__(self, "num_receivers", int(m))
        p = float(self.power_budget)
        if not (math.isfinite(p) and p > 0.0):
            raise ValueError("power_budget must be positive and finite")
        object.__setattr__(self, "power_budget", p)
        c = float(self.common_noise_var)
        if not (math.isfinite(c) and c >= 0.0):
            raise ValueError("common_noise_var must be nonnegative and finite")
        object.__setattr__(self, "common_noise_var", c)
        priv = tuple(float(v) for v in self.private_noise_vars)
        if len(priv) != self.num_receivers:
            raise ValueError(
                f"private_noise_vars has length {len(priv)}, expected {self.num_receivers}"
            )
        if any(not (math.isfinite(v) and v >= 0.0) for v in priv):
            raise ValueError("private noise variances must be nonnegative and finite")
        if c == 0.0 and max(priv) == 0.0:
            raise ValueError("completely noiseless channel is not supported")
        object.__setattr__(self, "private_noise_vars", priv)


@dataclass(frozen=True)
class NoiseDraw:
    """One channel use worth of noise: the shared component plus M private ones."""

    common: float
    private: np.ndarray


def noise_stds(config: ChannelConfig) -> tuple[float, np.ndarray]:
    return math.sqrt(config.common_noise_var), np.sqrt(
        np.asarray(config.private_noise_vars, dtype=float)
    )


def sample_noise(config: ChannelConfig, rng: np.random.Generator) -> NoiseDraw:
    """Draw one NoiseDraw.

    Always consumes exactly 1 + M standard normals from ``rng`` (zero-variance
    components scale theirs to exact 0.0), so trial streams stay aligned with
    the vectorised batch runner no matter which variances are switched off.
    """
    common_std, private_std = noise_stds(config)
    v = rng.standard_normal(1 + config.num_receivers)
    return NoiseDraw(common=common_std * v[0], private=private_std * v[1:])


def transmit(x: float, draw: NoiseDraw) -> np.ndarray:
    """Per-receiver outputs for input x under the given noise draw."""
    return x + draw.common + draw.private


def spawn_trial_seeds(seed: int, trials: int) -> list[np.random.SeedSequence]:
    """Independent child seed sequences, one per trial, keyed by trial index."""
    if trials < 0:
        raise ValueError("trials must be nonnegative")
    return np.random.SeedSequence(seed).spawn(trials)
