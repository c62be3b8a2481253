"""Multiplicative-weights primitive and the per-round causal-MW update.

Weights live in log space between updates so long reward streaks cannot
underflow the normalization; the exposed state is always a probability
vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import RewardOutOfRange
from .gp import ConfidenceModel
from .oracle import ucb_candidates_vector, UcbRequest, ucb, zero_noise, draw_noise


@dataclass(frozen=True)
class MwState:
    """Normalized weight vector over a finite action set plus learning rate."""

    weights: np.ndarray
    learning_rate: float
    log_weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w / w.sum())
        if self.log_weights is None:
            object.__setattr__(self, "log_weights", np.log(self.weights))

    @classmethod
    def uniform(cls, num_actions: int, learning_rate: float) -> "MwState":
        return cls(weights=np.full(num_actions, 1.0 / num_actions),
                   learning_rate=learning_rate)

    @property
    def num_actions(self) -> int:
        return self.weights.shape[0]


def fixed_horizon_rate(num_actions: int, horizon: int) -> float:
    """The tuned rate sqrt(8 log|A| / T)."""
    return math.sqrt(8.0 * math.log(max(num_actions, 2)) / max(horizon, 1))


def mw_sample(state: MwState, rng_seed: int) -> int:
    """Sample an action index from the weights; deterministic given the seed."""
    rng = np.random.default_rng(rng_seed)
    u = rng.random()
    cum = np.cumsum(state.weights)
    return int(np.searchsorted(cum, u * cum[-1], side="right").clip(0, state.num_actions - 1))


def mw_update(state: MwState, rewards: Sequence[float]) -> MwState:
    """Multiply each weight by exp(rate * reward) and renormalize.

    Rewards must already be clipped to [0, 1] by the caller.
    """
    r = np.asarray(rewards, dtype=np.float64)
    if r.shape != (state.num_actions,):
        raise RewardOutOfRange("reward vector length does not match the action set")
    if np.any(r < -1e-12) or np.any(r > 1.0 + 1e-12):
        raise RewardOutOfRange("rewards must lie in [0, 1]")
    logw = state.log_weights + state.learning_rate * np.clip(r, 0.0, 1.0)
    logw -= np.max(logw)
    w = np.exp(logw)
    w /= w.sum()
    return MwState(weights=w, learning_rate=state.learning_rate,
                   log_weights=np.log(w))


def hedge_regret_bound(num_actions: int, horizon: int, tau: float) -> float:
    """Deterministic expected-play regret envelope log|A|/tau + tau*T/8."""
    if num_actions < 1 or horizon < 1 or tau <= 0:
        raise ValueError("arguments must be positive")
    return math.log(num_actions) / tau + tau * horizon / 8.0


@dataclass
class CboMwConfig:
    """Round-loop settings: learning-rate mode, horizon, oracle budget."""

    horizon: int
    learning_rate_mode: str = "fixed_horizon"  # fixed_horizon | doubling_trick
    oracle: UcbRequest | None = None  # template: confidence/actions filled per call
    clip_rewards: bool = True

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.learning_rate_mode not in ("fixed_horizon", "doubling_trick"):
            raise ValueError(f"unknown learning_rate_mode {self.learning_rate_mode!r}")


def clip01(values: np.ndarray) -> np.ndarray:
    return np.clip(values, 0.0, 1.0)


def cbo_mw_round(state: MwState, confidence: ConfidenceModel,
                 observed_adversary: Sequence[int],
                 env_action_set: np.ndarray,
                 noise_samples: int = 1,
                 noise_specs=None,
                 rng_seed: int = 0,
                 sign_grid: bool = True,
                 ascent: UcbRequest | None = None) -> tuple[MwState, np.ndarray]:
    """Score every action against the observed adversary play and update.

    env_action_set is the (|A|, node_count) matrix of joint agent index
    profiles the weights range over. Scoring uses the vectorized candidate
    oracle; pass ``ascent`` (a request template) to refine each action with
    gradient ascent on top.
    """
    env_action_set = np.asarray(env_action_set, dtype=np.int64)
    if env_action_set.shape[0] != state.num_actions:
        raise ValueError("action set size does not match the weight vector")
    if noise_specs is None:
        noise = zero_noise(confidence, max(noise_samples, 1))
    else:
        rng = np.random.default_rng(np.random.SeedSequence((rng_seed, 0x6E)))
        noise = draw_noise(noise_specs, max(noise_samples, 1), rng)
    scores = ucb_candidates_vector(confidence, env_action_set, observed_adversary,
                                   noise, sign_grid=sign_grid)
    if ascent is not None and ascent.max_ascent_steps > 0:
        for k in range(env_action_set.shape[0]):
            req = UcbRequest(
                confidence=confidence,
                agent_action=tuple(int(v) for v in env_action_set[k]),
                adversary_action=tuple(int(v) for v in observed_adversary),
                noise_samples=noise_samples,
                restarts=ascent.restarts,
                max_ascent_steps=ascent.max_ascent_steps,
                step_size=ascent.step_size,
                step_decay=ascent.step_decay,
                parameterization=ascent.parameterization,
                hidden_width=ascent.hidden_width,
                rng_seed=rng_seed,
                noise_specs=noise_specs,
            )
            scores[k] = max(scores[k], ucb(req))
    return mw_update(state, clip01(scores)), scores
